//! Second-order correlation observables, computed three independent ways.
//!
//! * [`classical`] — Gaussian-moment theorem applied to the classical
//!   stochastic field: every fourth-order expectation splits into a signed
//!   ledger of second-order pairings ([`TermLedger`]), evaluated in closed
//!   form on the discretization grid, plus direct Monte Carlo estimators of
//!   the same detector statistics.
//! * [`quantum`] — two-photon effective-wavefunction amplitudes: joint
//!   detection as the interference of indistinguishable pair paths.
//! * [`hbt`] / [`mz`] — intensity-correlation (bunching) scans and the
//!   Mach-Zehnder singles control, each with analytic expectation and Monte
//!   Carlo cross-check.
//!
//! The three routes share no intermediate code on purpose; agreement between
//! them is what the test suites check.

pub mod classical;
pub mod hbt;
pub mod mz;
pub mod quantum;

pub use classical::{
    classical_mc, classical_term_ledger, classical_terms_mc, snap_delay_to_grid, DetectionPolicy,
    TermEstimates, TermLedger, INDEPENDENT_TIP_MU_LIMIT,
};
pub use hbt::{expected_g2_temporal, expected_g2_transverse, temporal_hbt_mc, transverse_hbt_mc};
pub use mz::{mz_analytic_point_cw, mz_analytic_point_pulsed, mz_mc_cw, MzPoint};
pub use quantum::{
    coincidence_rate, g2_quantum_point, gamma2_gaussian_moment, rc_from_g2_integral,
    two_photon_amplitude, AmplitudeQuartet, InterferenceSign, PathDelays,
};

use serde::Serialize;

/// Which computational route produced a curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EngineTag {
    ClassicalLedger,
    ClassicalMc,
    Quantum,
}

impl EngineTag {
    #[must_use]
    pub fn as_str(&self) -> &'static str {
        match self {
            EngineTag::ClassicalLedger => "classical-ledger",
            EngineTag::ClassicalMc => "classical-mc",
            EngineTag::Quantum => "quantum",
        }
    }
}

impl std::fmt::Display for EngineTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A scanned second-order observable: the coincidence (or `g2`) value over a
/// scan grid, with per-point uncertainty where the route provides one.
///
/// `grid` holds the scan coordinate in SI units — seconds for delay scans,
/// meters for transverse tip scans.
#[derive(Debug, Clone, Serialize)]
pub struct Gamma2Curve {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    /// Standard error per point; zeros for analytic routes and for frozen
    /// single-realization scans, where no ensemble spread exists.
    pub stderr: Vec<f64>,
    /// Realizations (samples) behind each point; 0 marks an analytic curve.
    pub n_samples: u64,
    pub engine: EngineTag,
}

impl Gamma2Curve {
    /// Consistency check used by the scan drivers before serialization.
    pub fn validate(&self) -> crate::Result<()> {
        if self.grid.len() != self.values.len() || self.grid.len() != self.stderr.len() {
            return Err(crate::Error::Numeric(format!(
                "curve arrays disagree: {} grid, {} values, {} stderr",
                self.grid.len(),
                self.values.len(),
                self.stderr.len()
            )));
        }
        if let Some(v) = self
            .values
            .iter()
            .chain(self.stderr.iter())
            .find(|v| !v.is_finite())
        {
            return Err(crate::Error::Numeric(format!(
                "curve contains non-finite value {v}"
            )));
        }
        Ok(())
    }
}
