//! Two-photon amplitude route to the coincidence rate.
//!
//! Joint detection at times (t1, t2) behind the recombining beamsplitter is
//! treated as the superposition of the four two-photon paths from the two
//! collection points A and B. Paths where both photons come from the same
//! point contribute incoherently; the two exchange paths (A->1, B->2) and
//! (B->1, A->2) are indistinguishable and interfere, destructively for
//! cross-port coincidences. Each single-photon amplitude is the wavepacket
//! envelope of the filtered spectrum evaluated at the path delay.
//!
//! Integrating the joint rate over detection times gives the normalized
//! coincidence rate `1 - (1/2) exp(-delta^2 / tau_c^2)`: a 50% dip, which no
//! classical intensity treatment of the same source reproduces. The integral
//! is carried out numerically here precisely so the closed form in
//! [`coincidence_rate`] can be checked against it rather than assumed.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quad::{gauss_legendre, scaled};
use crate::spectral::SpectrumFunction;

/// Propagation delays of the four single-photon paths, relative to the
/// detection times. Point A sits in the delayed arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathDelays {
    pub a_to_1: f64,
    pub a_to_2: f64,
    pub b_to_1: f64,
    pub b_to_2: f64,
}

impl PathDelays {
    /// Detection at t1 and t2 with a delay `delta` inserted in arm A.
    #[must_use]
    pub fn symmetric(t1: f64, t2: f64, delta: f64) -> Self {
        PathDelays {
            a_to_1: t1 - delta,
            a_to_2: t2 - delta,
            b_to_1: t1,
            b_to_2: t2,
        }
    }
}

/// Product amplitude for one two-photon path: one wavepacket envelope per
/// photon, carrier phase included.
#[must_use]
pub fn two_photon_amplitude(s: &SpectrumFunction, tau_1: f64, tau_2: f64) -> Complex64 {
    s.envelope_at(tau_1).with_carrier() * s.envelope_at(tau_2).with_carrier()
}

/// The four pair-path amplitudes behind the beamsplitter.
#[derive(Debug, Clone, Copy)]
pub struct AmplitudeQuartet {
    /// Both photons from A.
    pub aa: Complex64,
    /// Both photons from B.
    pub bb: Complex64,
    /// A -> detector 1, B -> detector 2.
    pub ab: Complex64,
    /// B -> detector 1, A -> detector 2.
    pub ba: Complex64,
}

impl AmplitudeQuartet {
    #[must_use]
    pub fn from_path_delays(s: &SpectrumFunction, d: &PathDelays) -> Self {
        AmplitudeQuartet {
            aa: two_photon_amplitude(s, d.a_to_1, d.a_to_2),
            bb: two_photon_amplitude(s, d.b_to_1, d.b_to_2),
            ab: two_photon_amplitude(s, d.a_to_1, d.b_to_2),
            ba: two_photon_amplitude(s, d.b_to_1, d.a_to_2),
        }
    }
}

/// Relative sign the beamsplitter imposes between the two exchange paths:
/// destructive for cross-port coincidences (the dip), constructive for
/// same-port pairs (the peak).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterferenceSign {
    Constructive,
    Destructive,
}

/// Pointwise joint-detection density: same-point paths add incoherently,
/// exchange paths interfere with the port sign.
#[must_use]
pub fn g2_quantum_point(q: &AmplitudeQuartet, sign: InterferenceSign) -> f64 {
    let exchange = match sign {
        InterferenceSign::Constructive => q.ab + q.ba,
        InterferenceSign::Destructive => q.ab - q.ba,
    };
    q.aa.norm_sqr() + q.bb.norm_sqr() + exchange.norm_sqr()
}

/// Closed-form normalized cross-port coincidence rate,
/// `1 - (gamma/2) exp(-delta^2 / tau_c^2)`.
///
/// `gamma` in [0, 1] is the interference contrast (1 for perfect exchange
/// overlap; experiments see less).
pub fn coincidence_rate(delta: f64, tau_c: f64, gamma: f64) -> Result<f64> {
    if !(tau_c.is_finite() && tau_c > 0.0) {
        return Err(Error::invalid_parameter(
            "tau_c",
            format!("must be positive and finite, got {tau_c}"),
        ));
    }
    if !(0.0..=1.0).contains(&gamma) || !gamma.is_finite() {
        return Err(Error::invalid_parameter(
            "gamma",
            format!("contrast must lie in [0, 1], got {gamma}"),
        ));
    }
    let x = delta / tau_c;
    Ok(1.0 - 0.5 * gamma * (-x * x).exp())
}

/// Normalized coincidence rate obtained by integrating the pointwise joint
/// density over both detection times — the derivation route, kept numeric so
/// it stays independent of [`coincidence_rate`].
///
/// The window tracks both wavepacket centers (0 and `delta`) with a 6 tau_c
/// margin; normalization divides by the same integral far outside the dip.
pub fn rc_from_g2_integral(
    s: &SpectrumFunction,
    delta: f64,
    sign: InterferenceSign,
) -> Result<f64> {
    rc_from_g2_integral_with_order(s, delta, sign, 160)
}

/// [`rc_from_g2_integral`] with an explicit quadrature order, so convergence
/// can be demonstrated by comparing orders.
pub fn rc_from_g2_integral_with_order(
    s: &SpectrumFunction,
    delta: f64,
    sign: InterferenceSign,
    order: usize,
) -> Result<f64> {
    if !delta.is_finite() {
        return Err(Error::invalid_parameter("delta", "must be finite"));
    }
    let tau_c = s.coherence_time();
    let (nodes, weights) = gauss_legendre(order);
    let integral = |d: f64| -> f64 {
        let lo = d.min(0.0) - 6.0 * tau_c;
        let hi = d.max(0.0) + 6.0 * tau_c;
        let (ts, ws) = scaled(&nodes, &weights, lo, hi);
        let mut acc = 0.0;
        for (t1, w1) in ts.iter().zip(&ws) {
            for (t2, w2) in ts.iter().zip(&ws) {
                let q = AmplitudeQuartet::from_path_delays(s, &PathDelays::symmetric(*t1, *t2, d));
                acc += w1 * w2 * g2_quantum_point(&q, sign);
            }
        }
        acc
    };
    let baseline_delta = 12.0 * tau_c;
    let base = integral(baseline_delta);
    if !(base.is_finite() && base > 0.0) {
        return Err(Error::Numeric(format!(
            "baseline coincidence integral degenerate: {base}"
        )));
    }
    Ok(integral(delta) / base)
}

/// Gaussian-moment (Siegert) relation for the normalized intensity
/// correlation: `g2 = 1 + |<E1* E2>|^2 / (<I1><I2>)`.
///
/// Errors when the cross-correlation violates the Cauchy-Schwarz bound the
/// moment theorem presumes.
pub fn gamma2_gaussian_moment(mean_i1: f64, mean_i2: f64, cross: Complex64) -> Result<f64> {
    if !(mean_i1.is_finite() && mean_i1 > 0.0) {
        return Err(Error::invalid_parameter(
            "mean_i1",
            format!("must be positive, got {mean_i1}"),
        ));
    }
    if !(mean_i2.is_finite() && mean_i2 > 0.0) {
        return Err(Error::invalid_parameter(
            "mean_i2",
            format!("must be positive, got {mean_i2}"),
        ));
    }
    let cross_power = cross.norm_sqr();
    let bound = mean_i1 * mean_i2;
    if !cross_power.is_finite() || cross_power > bound * (1.0 + 1e-9) {
        return Err(Error::Numeric(format!(
            "cross-correlation power {cross_power} exceeds Cauchy-Schwarz bound {bound}"
        )));
    }
    Ok(1.0 + cross_power / bound)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spectrum() -> SpectrumFunction {
        SpectrumFunction::gaussian(2.354e15, 345e-15).unwrap()
    }

    #[test]
    fn closed_form_reference_points() {
        let tau_c = 345e-15;
        // Frozen: 1 - exp(-1)/2 and 1 - exp(-4)/2.
        assert!((coincidence_rate(tau_c, tau_c, 1.0).unwrap() - 0.8160602794142788).abs() < 1e-15);
        assert!(
            (coincidence_rate(2.0 * tau_c, tau_c, 1.0).unwrap() - 0.9908421805556329).abs() < 1e-15
        );
        assert!((coincidence_rate(0.0, tau_c, 1.0).unwrap() - 0.5).abs() < 1e-15);
        // Reduced contrast: gamma = 0.56 leaves a 28% dip.
        assert!((coincidence_rate(0.0, tau_c, 0.56).unwrap() - 0.72).abs() < 1e-15);
        assert!(coincidence_rate(0.0, -1.0, 1.0).is_err());
        assert!(coincidence_rate(0.0, tau_c, 1.5).is_err());
    }

    /// The dip law is *derived* here: integrating the pair-path interference
    /// over detection times must land on the closed form.
    #[test]
    fn integral_route_reproduces_dip_law() {
        let s = spectrum();
        let tau_c = s.coherence_time();
        for &k in &[0.0, 0.35, 0.7, 1.0, 1.6, 2.5] {
            let delta = k * tau_c;
            let got = rc_from_g2_integral(&s, delta, InterferenceSign::Destructive).unwrap();
            let want = coincidence_rate(delta, tau_c, 1.0).unwrap();
            assert!(
                (got - want).abs() < 1e-9,
                "delta = {k} tau_c: integral {got}, closed form {want}"
            );
        }
    }

    #[test]
    fn constructive_port_shows_mirror_peak() {
        let s = spectrum();
        let tau_c = s.coherence_time();
        for &k in &[0.0, 0.8, 2.0] {
            let delta = k * tau_c;
            let got = rc_from_g2_integral(&s, delta, InterferenceSign::Constructive).unwrap();
            let want = 1.0 + 0.5 * (-(delta / tau_c).powi(2)).exp();
            assert!(
                (got - want).abs() < 1e-9,
                "delta = {k} tau_c: integral {got}, expected peak {want}"
            );
        }
    }

    #[test]
    fn quadrature_order_is_converged() {
        let s = spectrum();
        let delta = 0.6 * s.coherence_time();
        let a =
            rc_from_g2_integral_with_order(&s, delta, InterferenceSign::Destructive, 160).unwrap();
        let b =
            rc_from_g2_integral_with_order(&s, delta, InterferenceSign::Destructive, 200).unwrap();
        assert!((a - b).abs() < 1e-11, "order 160 vs 200: {a} vs {b}");
    }

    /// Port-sign identity: the constructive and destructive joint densities
    /// differ by exactly four times the real part of the exchange overlap.
    #[test]
    fn port_difference_is_exchange_overlap() {
        let s = spectrum();
        let tau_c = s.coherence_time();
        let cases = [
            (0.3 * tau_c, -0.2 * tau_c, 0.0),
            (1.1 * tau_c, 0.4 * tau_c, 0.5 * tau_c),
            (-0.7 * tau_c, 0.9 * tau_c, 1.3 * tau_c),
        ];
        for (t1, t2, delta) in cases {
            let q = AmplitudeQuartet::from_path_delays(&s, &PathDelays::symmetric(t1, t2, delta));
            let plus = g2_quantum_point(&q, InterferenceSign::Constructive);
            let minus = g2_quantum_point(&q, InterferenceSign::Destructive);
            let overlap = 4.0 * (q.ab * q.ba.conj()).re;
            assert!(
                (plus - minus - overlap).abs() < 1e-12 * plus.max(1.0),
                "t1={t1:e} t2={t2:e} delta={delta:e}"
            );
        }
    }

    /// The carrier phases of the two exchange paths cancel identically (the
    /// dip carries no fringes): the full complex computation must equal one
    /// using envelope magnitudes alone.
    #[test]
    fn carrier_phases_cancel_in_exchange_term() {
        let s = spectrum();
        let tau_c = s.coherence_time();
        let env = |tau: f64| s.envelope_at(tau).value.re;
        for (t1, t2, delta) in [
            (0.2 * tau_c, -0.5 * tau_c, 0.9 * tau_c),
            (1.4 * tau_c, 0.3 * tau_c, -0.6 * tau_c),
        ] {
            let d = PathDelays::symmetric(t1, t2, delta);
            let q = AmplitudeQuartet::from_path_delays(&s, &d);
            let got = g2_quantum_point(&q, InterferenceSign::Destructive);
            let ab = env(d.a_to_1) * env(d.b_to_2);
            let ba = env(d.b_to_1) * env(d.a_to_2);
            let want = (env(d.a_to_1) * env(d.a_to_2)).powi(2)
                + (env(d.b_to_1) * env(d.b_to_2)).powi(2)
                + (ab - ba).powi(2);
            assert!(
                (got - want).abs() < 1e-12,
                "complex {got} vs real-envelope {want}"
            );
        }
    }

    #[test]
    fn dip_is_bounded_and_monotone_in_offset() {
        let tau_c = 345e-15;
        let mut last = coincidence_rate(0.0, tau_c, 1.0).unwrap();
        assert!((last - 0.5).abs() < 1e-15);
        for k in 1..=60 {
            let rc = coincidence_rate(k as f64 * 0.1 * tau_c, tau_c, 1.0).unwrap();
            assert!(rc > last && rc <= 1.0);
            last = rc;
        }
        assert!(last > 1.0 - 1e-12);
    }

    #[test]
    fn moment_relation_reference_values() {
        assert!(
            (gamma2_gaussian_moment(1.0, 1.0, Complex64::new(1.0, 0.0)).unwrap() - 2.0).abs()
                < 1e-15
        );
        assert!(
            (gamma2_gaussian_moment(1.0, 1.0, Complex64::new(0.5, 0.0)).unwrap() - 1.25).abs()
                < 1e-15
        );
        // Phase of the cross term is irrelevant.
        let rotated = Complex64::from_polar(0.5, 1.234);
        assert!((gamma2_gaussian_moment(1.0, 1.0, rotated).unwrap() - 1.25).abs() < 1e-15);
        // Cauchy-Schwarz violations are numeric errors, not answers.
        assert!(gamma2_gaussian_moment(1.0, 1.0, Complex64::new(1.1, 0.0)).is_err());
        assert!(gamma2_gaussian_moment(-1.0, 1.0, Complex64::new(0.0, 0.0)).is_err());
    }
}
