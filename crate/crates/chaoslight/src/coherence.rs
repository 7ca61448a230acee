//! Spatial mutual coherence between the two collection points.
//!
//! An incoherent disc source of angular size `dtheta` imprints the Airy-type
//! degree of coherence `mu(drho) = 2 J1(x) / x`, `x = pi dtheta drho /
//! lambda0`, on two points separated by `drho` in the detection plane. The
//! first zero sits at x ~= 3.8317; by 40 coherence lengths (`x = 40 pi`) the
//! residual coherence is ~1e-3, which is what justifies treating the two
//! fiber tips as statistically independent in the dip measurements.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex degree of first-order spatial coherence between points A and B.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MutualCoherence {
    mu: Complex64,
}

impl MutualCoherence {
    /// Wraps a coherence value, enforcing |mu| <= 1 (tiny fp slack allowed).
    pub fn new(mu: Complex64) -> Result<Self> {
        if !mu.re.is_finite() || !mu.im.is_finite() {
            return Err(Error::invalid_parameter("mu", "must be finite".to_string()));
        }
        if mu.norm() > 1.0 + 1e-12 {
            return Err(Error::invalid_parameter(
                "mu",
                format!("|mu| = {} exceeds 1", mu.norm()),
            ));
        }
        Ok(MutualCoherence { mu })
    }

    /// Fully correlated fields (both tips in the same speckle cell).
    #[must_use]
    pub fn full() -> Self {
        MutualCoherence {
            mu: Complex64::new(1.0, 0.0),
        }
    }

    /// Statistically independent fields.
    #[must_use]
    pub fn none() -> Self {
        MutualCoherence {
            mu: Complex64::new(0.0, 0.0),
        }
    }

    #[must_use]
    pub fn mu(&self) -> Complex64 {
        self.mu
    }

    #[must_use]
    pub fn magnitude(&self) -> f64 {
        self.mu.norm()
    }
}

/// Disc-source degree of coherence versus tip separation.
///
/// `source_diameter`, `distance`, `delta_rho`, `lambda0` in meters;
/// `delta_rho = 0` gives exactly 1. The sign alternates through the Airy
/// lobes, which is physical and allowed (|mu| stays <= 1).
pub fn mutual_coherence(
    source_diameter: f64,
    distance: f64,
    delta_rho: f64,
    lambda0: f64,
) -> Result<MutualCoherence> {
    for (name, v) in [
        ("source_diameter", source_diameter),
        ("distance", distance),
        ("lambda0", lambda0),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::invalid_parameter(
                name,
                format!("must be positive and finite, got {v}"),
            ));
        }
    }
    if !delta_rho.is_finite() || delta_rho < 0.0 {
        return Err(Error::invalid_parameter(
            "delta_rho",
            format!("must be non-negative and finite, got {delta_rho}"),
        ));
    }
    let x = std::f64::consts::PI * (source_diameter / distance) * delta_rho / lambda0;
    MutualCoherence::new(Complex64::new(airy_mu(x), 0.0))
}

/// `2 J1(x) / x`, continued to 1 at x = 0.
#[must_use]
pub fn airy_mu(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        // Series head; next term is O(x^6) ~ 1e-24 at the cutover.
        let x2 = x * x;
        return 1.0 - x2 / 8.0 + x2 * x2 / 192.0;
    }
    2.0 * libm::j1(x) / x
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Integral-representation oracle for J1, independent of libm:
    /// J1(x) = (1/pi) int_0^pi cos(theta - x sin theta) dtheta, evaluated by
    /// the trapezoid rule, which is spectrally accurate for this integrand.
    fn j1_oracle(x: f64) -> f64 {
        let n = 4096usize;
        let h = std::f64::consts::PI / n as f64;
        let f = |theta: f64| (theta - x * theta.sin()).cos();
        let mut sum = 0.5 * (f(0.0) + f(std::f64::consts::PI));
        for k in 1..n {
            sum += f(k as f64 * h);
        }
        sum * h / std::f64::consts::PI
    }

    #[test]
    fn bessel_matches_integral_oracle() {
        for &x in &[0.3, 1.0, 1.8412, 3.8, 7.0155, 12.5, 40.0, 125.66] {
            let got = libm::j1(x);
            let want = j1_oracle(x);
            assert!(
                (got - want).abs() < 1e-10,
                "x={x}: libm {got} vs oracle {want}"
            );
        }
    }

    #[test]
    fn airy_mu_small_argument_continuity() {
        // Series branch and Bessel branch must agree across the cutover.
        for &x in &[5e-5f64, 9.9e-5, 1.01e-4, 2e-4, 1e-3] {
            let series = 1.0 - x * x / 8.0 + x.powi(4) / 192.0;
            assert!((airy_mu(x) - series).abs() < 1e-14, "x={x}");
        }
        assert_eq!(airy_mu(0.0), 1.0);
    }

    #[test]
    fn first_zero_by_bisection() {
        // Root of 2 J1(x)/x between 3 and 4.5.
        let (mut lo, mut hi) = (3.0f64, 4.5f64);
        assert!(airy_mu(lo) > 0.0 && airy_mu(hi) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if airy_mu(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let root = 0.5 * (lo + hi);
        assert!(
            (root - 3.8317).abs() < 1e-3,
            "first zero at {root}, expected ~3.8317"
        );
    }

    #[test]
    fn zero_separation_is_fully_coherent() {
        let mu = mutual_coherence(4.5e-3, 200e-3, 0.0, 800e-9).unwrap();
        assert_eq!(mu.mu().re, 1.0);
    }

    #[test]
    fn forty_coherence_lengths_is_negligible() {
        // l_c = lambda0 / dtheta; at drho = 40 l_c the argument is 40 pi and
        // the residual coherence is far below the 0.05 independence threshold.
        let lambda0 = 800e-9;
        let dtheta: f64 = 4.5e-3 / 200e-3;
        let l_c = lambda0 / dtheta;
        let mu = mutual_coherence(4.5e-3, 200e-3, 40.0 * l_c, lambda0).unwrap();
        assert!(mu.magnitude() < 0.05, "|mu| = {}", mu.magnitude());
        assert!(mu.magnitude() < 5e-3);
    }

    #[test]
    fn magnitude_never_exceeds_one() {
        for i in 0..2000 {
            let x = i as f64 * 0.1;
            assert!(airy_mu(x).abs() <= 1.0 + 1e-12, "x={x}");
        }
    }

    #[test]
    fn rejects_unphysical_inputs() {
        assert!(mutual_coherence(0.0, 200e-3, 1e-5, 800e-9).is_err());
        assert!(mutual_coherence(4.5e-3, 200e-3, -1e-5, 800e-9).is_err());
        assert!(MutualCoherence::new(Complex64::new(1.5, 0.0)).is_err());
    }
}
