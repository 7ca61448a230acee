//! Filtered-source spectrum and its time-domain transform.
//!
//! Everything downstream keys off one convention: the Gaussian amplitude
//! spectrum `f(nu) = exp(-nu^2 tau_c^2 / 4)` (detuning `nu` from the carrier),
//! whose normalized Fourier transform over detuning is the real envelope
//! `exp(-tau^2 / tau_c^2)`. The coherence time `tau_c` is therefore the 1/e
//! point of the field envelope, and the same `tau_c` governs both the
//! stochastic-field coherence and the two-photon wavepacket width, so the two
//! engines are comparable without rescaling.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0; // m/s

/// Envelope magnitudes below this are treated as exactly zero so far tails
/// cannot generate subnormal noise in accumulated products.
pub const ENVELOPE_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SpectrumShape {
    Gaussian,
}

/// Amplitude spectrum of the filtered light.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumFunction {
    center_frequency: f64,
    coherence_time: f64,
    shape: SpectrumShape,
}

impl SpectrumFunction {
    /// Gaussian filter line: `f(nu) = exp(-nu^2 tau_c^2 / 4)`.
    ///
    /// `center_frequency` is the optical carrier in rad/s, `coherence_time`
    /// in seconds. Both must be positive and finite.
    pub fn gaussian(center_frequency: f64, coherence_time: f64) -> Result<Self> {
        if !(center_frequency.is_finite() && center_frequency > 0.0) {
            return Err(Error::invalid_parameter(
                "center_frequency",
                format!("must be positive and finite, got {center_frequency}"),
            ));
        }
        if !(coherence_time.is_finite() && coherence_time > 0.0) {
            return Err(Error::invalid_parameter(
                "coherence_time",
                format!("must be positive and finite, got {coherence_time}"),
            ));
        }
        Ok(SpectrumFunction {
            center_frequency,
            coherence_time,
            shape: SpectrumShape::Gaussian,
        })
    }

    #[must_use]
    pub fn center_frequency(&self) -> f64 {
        self.center_frequency
    }

    #[must_use]
    pub fn coherence_time(&self) -> f64 {
        self.coherence_time
    }

    #[must_use]
    pub fn shape(&self) -> SpectrumShape {
        self.shape
    }

    /// Amplitude at detuning `nu` (rad/s) from the carrier.
    #[must_use]
    pub fn amplitude(&self, nu: f64) -> f64 {
        let arg = nu * self.coherence_time;
        (-0.25 * arg * arg).exp()
    }

    /// Time-domain transform of the spectrum at delay `tau`, normalized to 1
    /// at `tau = 0`.
    ///
    /// The rapid carrier rotation `-omega_0 tau` is returned separately in
    /// [`EnvelopeValue::carrier_phase`] (already reduced mod 2 pi) so callers
    /// never form `omega_0 * t` differences in envelope arithmetic; at optical
    /// frequencies those products destroy the envelope's precision.
    #[must_use]
    pub fn envelope_at(&self, tau: f64) -> EnvelopeValue {
        let arg = tau / self.coherence_time;
        let mut magnitude = (-arg * arg).exp();
        if magnitude < ENVELOPE_FLOOR {
            magnitude = 0.0;
        }
        EnvelopeValue {
            value: Complex64::new(magnitude, 0.0),
            carrier_phase: wrap_phase(-self.center_frequency * tau),
        }
    }
}

/// A slowly-varying envelope sample plus the carrier phase it rides on.
///
/// The physical analytic signal is `value * exp(i * carrier_phase)`.
#[derive(Debug, Clone, Copy)]
pub struct EnvelopeValue {
    pub value: Complex64,
    pub carrier_phase: f64,
}

impl EnvelopeValue {
    /// Recombines envelope and carrier into a single complex amplitude.
    #[must_use]
    pub fn with_carrier(&self) -> Complex64 {
        self.value * Complex64::from_polar(1.0, self.carrier_phase)
    }
}

/// Reduce a phase to the principal interval (-pi, pi].
#[must_use]
pub fn wrap_phase(phase: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let mut p = phase % tau;
    if p <= -std::f64::consts::PI {
        p += tau;
    } else if p > std::f64::consts::PI {
        p -= tau;
    }
    p
}

/// Source angular size and the transverse coherence length it imposes at the
/// detection plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoherenceScales {
    /// Angular diameter of the source seen from the detection plane, rad.
    pub angular_size: f64,
    /// Transverse coherence length `l_c = lambda_0 / angular_size`, m.
    pub transverse_coherence_length: f64,
}

/// Far-field coherence scales of an incoherent disc source.
///
/// `lambda0` is the center wavelength, `source_diameter` the emitting disc
/// diameter, `distance` the source-to-detection-plane distance, all in
/// meters.
pub fn coherence_scales(
    lambda0: f64,
    source_diameter: f64,
    distance: f64,
) -> Result<CoherenceScales> {
    for (name, v) in [
        ("lambda0", lambda0),
        ("source_diameter", source_diameter),
        ("distance", distance),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::invalid_parameter(
                name,
                format!("must be positive and finite, got {v}"),
            ));
        }
    }
    let angular_size = source_diameter / distance;
    Ok(CoherenceScales {
        angular_size,
        transverse_coherence_length: lambda0 / angular_size,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{gauss_legendre, scaled};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn spectrum(tau_c: f64) -> SpectrumFunction {
        SpectrumFunction::gaussian(2.354e15, tau_c).unwrap()
    }

    /// Quadrature oracle: numerically transforms f(nu) over detuning and
    /// normalizes by the zero-delay value. Independent of `envelope_at`.
    fn envelope_by_quadrature(s: &SpectrumFunction, tau: f64) -> f64 {
        let span = 30.0 / s.coherence_time();
        let (t, w) = gauss_legendre(400);
        let (nus, ws) = scaled(&t, &w, -span, span);
        let mut re = 0.0;
        let mut norm = 0.0;
        for (nu, w) in nus.iter().zip(&ws) {
            let f = s.amplitude(*nu);
            re += w * f * (nu * tau).cos();
            norm += w * f;
        }
        re / norm
    }

    #[test]
    fn rejects_non_positive_parameters() {
        assert!(SpectrumFunction::gaussian(0.0, 1e-13).is_err());
        assert!(SpectrumFunction::gaussian(2e15, 0.0).is_err());
        assert!(SpectrumFunction::gaussian(2e15, -3e-13).is_err());
        assert!(SpectrumFunction::gaussian(f64::NAN, 1e-13).is_err());
    }

    #[test]
    fn envelope_matches_quadrature_oracle() {
        // 20 random (tau_c, tau) pairs against the independent transform.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x57ec);
        for _ in 0..20 {
            let tau_c = rng.gen_range(5e-14..1e-12);
            let tau = rng.gen_range(-4.0..4.0) * tau_c;
            let s = spectrum(tau_c);
            let got = s.envelope_at(tau).value.re;
            let want = envelope_by_quadrature(&s, tau);
            assert!(
                (got - want).abs() <= 1e-9 * want.abs().max(1e-3),
                "tau_c={tau_c:e} tau={tau:e}: got {got}, oracle {want}"
            );
        }
    }

    #[test]
    fn envelope_reference_points() {
        let tau_c = 345e-15;
        let s = spectrum(tau_c);
        let at_zero = s.envelope_at(0.0);
        assert_eq!(at_zero.value.re, 1.0);
        assert_eq!(at_zero.carrier_phase, 0.0);

        let at_tau_c = s.envelope_at(tau_c);
        assert!((at_tau_c.value.re - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn carrier_phase_is_wrapped_and_consistent() {
        let s = spectrum(345e-15);
        let tau = 1.7e-13;
        let ev = s.envelope_at(tau);
        assert!(
            ev.carrier_phase > -std::f64::consts::PI && ev.carrier_phase <= std::f64::consts::PI
        );
        // Same angle as the unwrapped product, mod 2 pi.
        let raw = -s.center_frequency() * tau;
        let diff = (ev.carrier_phase - raw) / std::f64::consts::TAU;
        assert!((diff - diff.round()).abs() < 1e-9);
    }

    #[test]
    fn far_tail_clamps_to_zero() {
        let s = spectrum(345e-15);
        assert_eq!(s.envelope_at(30.0 * 345e-15).value.re, 0.0);
    }

    #[test]
    fn coherence_scales_reference_geometry() {
        // 4.5 mm disc at 200 mm gives 22.5 mrad; at 800 nm that is ~35.6 um.
        let scales = coherence_scales(800e-9, 4.5e-3, 200e-3).unwrap();
        assert!((scales.angular_size - 0.0225).abs() < 1e-15);
        assert!((scales.transverse_coherence_length - 3.5556e-5).abs() < 1e-9);
    }

    #[test]
    fn coherence_scales_rejects_bad_geometry() {
        assert!(coherence_scales(800e-9, 0.0, 200e-3).is_err());
        assert!(coherence_scales(-800e-9, 4.5e-3, 200e-3).is_err());
        assert!(coherence_scales(800e-9, 4.5e-3, f64::INFINITY).is_err());
    }

    proptest! {
        #[test]
        fn envelope_even_and_strictly_decreasing(
            tau_c_fs in 50.0f64..2000.0,
            a in 0.0f64..20.0,
            b in 0.0f64..20.0,
        ) {
            let tau_c = tau_c_fs * 1e-15;
            let s = spectrum(tau_c);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let e_lo = s.envelope_at(lo * tau_c).value.norm();
            let e_hi = s.envelope_at(hi * tau_c).value.norm();
            let e_neg = s.envelope_at(-hi * tau_c).value.norm();
            prop_assert!((e_hi - e_neg).abs() == 0.0, "envelope must be even");
            if hi > lo {
                prop_assert!(e_hi < e_lo, "envelope must strictly decrease in |tau|");
            }
            prop_assert!(e_lo <= 1.0 && e_hi <= 1.0);
        }
    }
}
