//! Classical route: Gaussian-moment term ledger and Monte Carlo detectors.
//!
//! Ports behind the recombining beamsplitter carry `(E_A^delta +- E_B) /
//! sqrt(2)`. The fourth-order moment `<I_1(t_1) I_2(t_2)>` expands into
//! sixteen field pairings; with statistically independent collection points
//! every pairing containing `<E_A E_B*>` vanishes and eight survive, recorded
//! here as a signed [`TermLedger`]:
//!
//! * four positive *intensity* pairings (products of mean intensities),
//! * two positive *self-coherence* pairings (the bunching excess of each
//!   point with itself),
//! * two negative *cross-coherence* pairings from the port anticorrelation.
//!
//! Two detection models are supported. [`DetectionPolicy::GatedCoincidence`]
//! multiplies the two port intensities at equal times and integrates (fast
//! gated counters); [`DetectionPolicy::WindowedProduct`] multiplies the two
//! time-integrated port energies (detectors slower than the emission, the
//! realistic model for pulsed sources). For stationary light both models are
//! exactly flat in the arm delay — the negative cross-coherence terms cancel
//! the bunching terms at every delay, which is the classical prediction the
//! two-photon route disagrees with. For pulsed light the windowed model
//! leaves a partial dip because the cancellation is incomplete.
//!
//! [`classical_mc`] estimates the same detector statistics by brute-force
//! sampling of synthesized fields, and [`classical_terms_mc`] reconstructs
//! every ledger entry separately from empirical second moments, so each
//! signed term — not just the total — is checked against the closed forms.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::{EngineTag, Gamma2Curve};
use crate::coherence::MutualCoherence;
use crate::error::{Error, Result};
use crate::field::{draw_coupled_modes, EmissionMode, EnsembleSpec, ModeGrid};

/// How the two port detectors form a joint event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DetectionPolicy {
    /// Equal-time product of port intensities, integrated over the window:
    /// `int I_1(t) I_2(t) dt`. Models gated counters much faster than the
    /// coherence time.
    GatedCoincidence,
    /// Product of window-integrated port energies:
    /// `(int I_1 dt) (int I_2 dt)`. Models detectors that integrate a whole
    /// emission burst.
    WindowedProduct,
}

/// The eight surviving pairings of the port fourth-order moment, in the
/// detector units of the chosen policy. Signs are part of the values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TermLedger {
    pub self_intensity_a: f64,
    pub self_coherence_a: f64,
    pub self_intensity_b: f64,
    pub self_coherence_b: f64,
    pub cross_intensity_ab: f64,
    pub cross_intensity_ba: f64,
    pub cross_coherence_ab: f64,
    pub cross_coherence_ba: f64,
}

impl TermLedger {
    /// The joint-detection expectation: the signed sum of all eight terms.
    #[must_use]
    pub fn total(&self) -> f64 {
        self.self_intensity_a
            + self.self_coherence_a
            + self.self_intensity_b
            + self.self_coherence_b
            + self.cross_intensity_ab
            + self.cross_intensity_ba
            + self.cross_coherence_ab
            + self.cross_coherence_ba
    }

    /// Terms with stable display names, in canonical order.
    #[must_use]
    pub fn named(&self) -> [(&'static str, f64); 8] {
        [
            ("self_intensity_a", self.self_intensity_a),
            ("self_coherence_a", self.self_coherence_a),
            ("self_intensity_b", self.self_intensity_b),
            ("self_coherence_b", self.self_coherence_b),
            ("cross_intensity_ab", self.cross_intensity_ab),
            ("cross_intensity_ba", self.cross_intensity_ba),
            ("cross_coherence_ab", self.cross_coherence_ab),
            ("cross_coherence_ba", self.cross_coherence_ba),
        ]
    }

    fn from_named(vals: [f64; 8]) -> Self {
        TermLedger {
            self_intensity_a: vals[0],
            self_coherence_a: vals[1],
            self_intensity_b: vals[2],
            self_coherence_b: vals[3],
            cross_intensity_ab: vals[4],
            cross_intensity_ba: vals[5],
            cross_coherence_ab: vals[6],
            cross_coherence_ba: vals[7],
        }
    }
}

/// Largest |mu| between the collection points for which dropping the
/// `<E_A E_B*>` pairings is defensible. The nominal geometry separates the
/// tips by 40 transverse coherence lengths (|mu| ~ 1e-3).
pub const INDEPENDENT_TIP_MU_LIMIT: f64 = 0.05;

fn require_time_grid(grid: &ModeGrid) -> Result<()> {
    if grid.times().is_empty() {
        return Err(Error::InvalidInput(
            "this grid is mode-space only; detector models need a time grid".to_string(),
        ));
    }
    Ok(())
}

fn require_independent_tips(mu: &MutualCoherence) -> Result<()> {
    if mu.magnitude() > INDEPENDENT_TIP_MU_LIMIT {
        return Err(Error::UnsupportedRegime(format!(
            "the eight-term ledger assumes independent collection points; \
             |mu| = {:.3} exceeds {INDEPENDENT_TIP_MU_LIMIT}",
            mu.magnitude()
        )));
    }
    Ok(())
}

/// Mean intensity profiles of the delayed-A and B inputs on the grid
/// (unit-mean CW, pulse-shaped otherwise), as amplitudes and intensities.
fn envelope_profiles(grid: &ModeGrid, delta: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    let times = grid.times();
    match grid.pulse() {
        Some(p) => {
            let pd: Vec<f64> = times.iter().map(|t| p.amplitude(t - delta)).collect();
            let p0: Vec<f64> = times.iter().map(|t| p.amplitude(*t)).collect();
            let id: Vec<f64> = pd.iter().map(|a| a * a).collect();
            let i0: Vec<f64> = p0.iter().map(|a| a * a).collect();
            (pd, p0, id, i0)
        }
        None => {
            let ones = vec![1.0; times.len()];
            (ones.clone(), ones.clone(), ones.clone(), ones)
        }
    }
}

/// Squared discrete coherence envelope at every grid lag (periodic).
fn gamma2_lags(grid: &ModeGrid) -> Vec<f64> {
    let n = grid.times().len();
    (0..n)
        .map(|l| {
            let g = grid.coherence_envelope(l as f64 * grid.dt());
            g * g
        })
        .collect()
}

/// Closed-form ledger on the discretization grid for a delay `delta`.
///
/// Uses the grid's own discrete coherence envelope so Monte Carlo estimates
/// on the same grid are comparable term by term without discretization slop.
pub fn classical_term_ledger(
    grid: &ModeGrid,
    mu: &MutualCoherence,
    delta: f64,
    policy: DetectionPolicy,
) -> Result<TermLedger> {
    require_time_grid(grid)?;
    require_independent_tips(mu)?;
    grid.check_delay(delta)?;

    let dt = grid.dt();
    let n = grid.times().len();
    let (pd, p0, ia, ib) = envelope_profiles(grid, delta);
    let g2 = gamma2_lags(grid);

    match policy {
        DetectionPolicy::GatedCoincidence => {
            let g0 = g2[0];
            let sum2 = |x: &[f64], y: &[f64]| -> f64 {
                dt * x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>()
            };
            let sia = 0.25 * sum2(&ia, &ia);
            let sib = 0.25 * sum2(&ib, &ib);
            let cross = 0.25 * sum2(&ia, &ib);
            Ok(TermLedger {
                self_intensity_a: sia,
                self_coherence_a: sia * g0,
                self_intensity_b: sib,
                self_coherence_b: sib * g0,
                cross_intensity_ab: cross,
                cross_intensity_ba: cross,
                cross_coherence_ab: -cross * g0,
                cross_coherence_ba: -cross * g0,
            })
        }
        DetectionPolicy::WindowedProduct => {
            let ea: f64 = dt * ia.iter().sum::<f64>();
            let eb: f64 = dt * ib.iter().sum::<f64>();
            let dt2 = dt * dt;
            let mut sca = 0.0;
            let mut scb = 0.0;
            let mut cc = 0.0;
            for j in 0..n {
                for k in 0..n {
                    let g = g2[(j + n - k) % n];
                    sca += ia[j] * ia[k] * g;
                    scb += ib[j] * ib[k] * g;
                    cc += pd[j] * pd[k] * p0[j] * p0[k] * g;
                }
            }
            Ok(TermLedger {
                self_intensity_a: 0.25 * ea * ea,
                self_coherence_a: 0.25 * dt2 * sca,
                self_intensity_b: 0.25 * eb * eb,
                self_coherence_b: 0.25 * dt2 * scb,
                cross_intensity_ab: 0.25 * ea * eb,
                cross_intensity_ba: 0.25 * ea * eb,
                cross_coherence_ab: -0.25 * dt2 * cc,
                cross_coherence_ba: -0.25 * dt2 * cc,
            })
        }
    }
}

fn check_grid_matches_mode(grid: &ModeGrid, spec: &EnsembleSpec) -> Result<()> {
    let pulsed_grid = grid.pulse().is_some();
    let pulsed_spec = spec.emission_mode == EmissionMode::Pulsed;
    if pulsed_grid != pulsed_spec {
        return Err(Error::InvalidInput(
            "grid emission envelope disagrees with the ensemble's emission mode".to_string(),
        ));
    }
    Ok(())
}

/// Monte Carlo estimate of the joint-detection expectation at each delay, in
/// the same detector units as the ledger. Deterministic for a given master
/// seed regardless of thread count: realizations are counter-seeded and the
/// reduction runs in index order.
pub fn classical_mc(
    grid: &Arc<ModeGrid>,
    spec: &EnsembleSpec,
    mu: &MutualCoherence,
    deltas: &[f64],
    policy: DetectionPolicy,
) -> Result<Gamma2Curve> {
    spec.validate()?;
    require_time_grid(grid)?;
    check_grid_matches_mode(grid, spec)?;
    for d in deltas {
        grid.check_delay(*d)?;
    }

    let n_t = grid.times().len();
    let dt = grid.dt();
    let n_real = spec.n_realizations;
    let mu_val = mu.mu();
    let n_modes = grid.freqs().len();

    let per_realization: Vec<Vec<f64>> = (0..n_real)
        .into_par_iter()
        .map(|i| {
            let (modes_a, modes_b) = draw_coupled_modes(spec.master_seed, i, n_modes, mu_val);
            let mut b = vec![Complex64::new(0.0, 0.0); n_t];
            grid.synthesize_into(&modes_b, 0.0, &mut b);
            let mut a = vec![Complex64::new(0.0, 0.0); n_t];
            deltas
                .iter()
                .map(|delta| {
                    grid.synthesize_into(&modes_a, *delta, &mut a);
                    match policy {
                        DetectionPolicy::GatedCoincidence => {
                            // |E1|^2 |E2|^2 = |E1 E2|^2 with
                            // E1 E2 = (E_A^2 - E_B^2) / 2.
                            0.25 * dt
                                * a.iter()
                                    .zip(&b)
                                    .map(|(ea, eb)| (ea * ea - eb * eb).norm_sqr())
                                    .sum::<f64>()
                        }
                        DetectionPolicy::WindowedProduct => {
                            let mut s1 = 0.0;
                            let mut s2 = 0.0;
                            for (ea, eb) in a.iter().zip(&b) {
                                s1 += (ea + eb).norm_sqr();
                                s2 += (ea - eb).norm_sqr();
                            }
                            (0.5 * dt * s1) * (0.5 * dt * s2)
                        }
                    }
                })
                .collect()
        })
        .collect();

    let nf = n_real as f64;
    let mut values = vec![0.0; deltas.len()];
    let mut sq = vec![0.0; deltas.len()];
    for row in &per_realization {
        for (p, q) in row.iter().enumerate() {
            values[p] += q;
            sq[p] += q * q;
        }
    }
    let mut stderr = vec![0.0; deltas.len()];
    for p in 0..deltas.len() {
        values[p] /= nf;
        let var = (sq[p] / nf - values[p] * values[p]).max(0.0);
        stderr[p] = if n_real > 1 {
            (var / (nf - 1.0)).sqrt()
        } else {
            0.0
        };
    }

    let curve = Gamma2Curve {
        grid: deltas.to_vec(),
        values,
        stderr,
        n_samples: n_real,
        engine: EngineTag::ClassicalMc,
    };
    curve.validate()?;
    Ok(curve)
}

/// Rounds a delay to the nearest grid step; returns (step count, snapped
/// delay). Index-shift estimators only exist at grid multiples.
pub fn snap_delay_to_grid(grid: &ModeGrid, delta: f64) -> Result<(i64, f64)> {
    require_time_grid(grid)?;
    let steps = (delta / grid.dt()).round();
    if !steps.is_finite() || steps.abs() >= i64::MAX as f64 {
        return Err(Error::InvalidInput(format!(
            "delay {delta:e} s cannot be mapped onto the grid"
        )));
    }
    let snapped = steps * grid.dt();
    grid.check_delay(snapped)?;
    Ok((steps as i64, snapped))
}

/// Per-term Monte Carlo estimate at one (snapped) delay: every ledger entry
/// reconstructed from empirical second moments, with jackknife errors.
#[derive(Debug, Clone, Serialize)]
pub struct TermEstimates {
    /// Delay after snapping to the grid.
    pub delta: f64,
    /// Grid steps corresponding to `delta`.
    pub shift: i64,
    /// Jackknife bias-corrected term values.
    pub ledger: TermLedger,
    /// Jackknife standard error per term.
    pub stderr: TermLedger,
    pub n_samples: u64,
}

const JACKKNIFE_BLOCKS: usize = 20;

/// Reconstructs the eight ledger terms from mean coherence matrices
/// `ma[j,k] ~ <E_A(t_j) E_A*(t_k)>` and likewise `mb`, with the A matrix
/// delayed by `shift` grid steps (periodic index shift — exact, because the
/// synthesized process is periodic). Carrier phases cancel in every pairing,
/// so the unshifted matrices carry all the information.
fn ledger_from_moments(
    grid: &ModeGrid,
    ma: &[Complex64],
    mb: &[Complex64],
    shift: i64,
    policy: DetectionPolicy,
) -> TermLedger {
    let n = grid.times().len();
    let dt = grid.dt();
    let sm = shift.rem_euclid(n as i64) as usize;
    let src = |j: usize| (j + n - sm) % n;

    let da: Vec<f64> = (0..n).map(|j| ma[src(j) * n + src(j)].re).collect();
    let db: Vec<f64> = (0..n).map(|j| mb[j * n + j].re).collect();

    match policy {
        DetectionPolicy::GatedCoincidence => {
            let sum2 = |x: &[f64], y: &[f64]| -> f64 {
                dt * x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>()
            };
            let sia = 0.25 * sum2(&da, &da);
            let sib = 0.25 * sum2(&db, &db);
            let cross = 0.25 * sum2(&da, &db);
            TermLedger {
                self_intensity_a: sia,
                self_coherence_a: sia,
                self_intensity_b: sib,
                self_coherence_b: sib,
                cross_intensity_ab: cross,
                cross_intensity_ba: cross,
                cross_coherence_ab: -cross,
                cross_coherence_ba: -cross,
            }
        }
        DetectionPolicy::WindowedProduct => {
            let ea: f64 = dt * da.iter().sum::<f64>();
            let eb: f64 = dt * db.iter().sum::<f64>();
            let dt2 = dt * dt;
            let mut sca = 0.0;
            let mut scb = 0.0;
            let mut cc = 0.0;
            for j in 0..n {
                let aj = src(j);
                for k in 0..n {
                    let m_a = ma[aj * n + src(k)];
                    let m_b = mb[j * n + k];
                    sca += m_a.norm_sqr();
                    scb += m_b.norm_sqr();
                    cc += (m_a.conj() * m_b).re;
                }
            }
            TermLedger {
                self_intensity_a: 0.25 * ea * ea,
                self_coherence_a: 0.25 * dt2 * sca,
                self_intensity_b: 0.25 * eb * eb,
                self_coherence_b: 0.25 * dt2 * scb,
                cross_intensity_ab: 0.25 * ea * eb,
                cross_intensity_ba: 0.25 * ea * eb,
                cross_coherence_ab: -0.25 * dt2 * cc,
                cross_coherence_ba: -0.25 * dt2 * cc,
            }
        }
    }
}

/// Estimates every ledger term from sampled fields at each delay (snapped to
/// the grid), with delete-one-block jackknife bias correction and errors.
///
/// Blocks accumulate outer-product coherence matrices in parallel; within a
/// block realizations are processed in index order, so results are
/// independent of thread count.
pub fn classical_terms_mc(
    grid: &Arc<ModeGrid>,
    spec: &EnsembleSpec,
    mu: &MutualCoherence,
    deltas: &[f64],
    policy: DetectionPolicy,
) -> Result<Vec<TermEstimates>> {
    spec.validate()?;
    require_time_grid(grid)?;
    require_independent_tips(mu)?;
    check_grid_matches_mode(grid, spec)?;
    let n_real = spec.n_realizations;
    if n_real < 2 * JACKKNIFE_BLOCKS as u64 {
        return Err(Error::InvalidInput(format!(
            "per-term estimation needs at least {} realizations, got {n_real}",
            2 * JACKKNIFE_BLOCKS
        )));
    }
    let shifts: Vec<(i64, f64)> = deltas
        .iter()
        .map(|d| snap_delay_to_grid(grid, *d))
        .collect::<Result<_>>()?;

    let n_t = grid.times().len();
    let n_modes = grid.freqs().len();
    let mu_val = mu.mu();

    // Block boundaries: contiguous, near-equal.
    let b = JACKKNIFE_BLOCKS;
    let bounds: Vec<(u64, u64)> = (0..b)
        .map(|i| {
            (
                n_real * i as u64 / b as u64,
                n_real * (i as u64 + 1) / b as u64,
            )
        })
        .collect();

    // Per-block sums of the two outer-product matrices.
    let block_sums: Vec<(Vec<Complex64>, Vec<Complex64>)> = bounds
        .par_iter()
        .map(|(lo, hi)| {
            let mut sa = vec![Complex64::new(0.0, 0.0); n_t * n_t];
            let mut sb = vec![Complex64::new(0.0, 0.0); n_t * n_t];
            let mut a = vec![Complex64::new(0.0, 0.0); n_t];
            let mut bb = vec![Complex64::new(0.0, 0.0); n_t];
            for i in *lo..*hi {
                let (modes_a, modes_b) = draw_coupled_modes(spec.master_seed, i, n_modes, mu_val);
                grid.synthesize_into(&modes_a, 0.0, &mut a);
                grid.synthesize_into(&modes_b, 0.0, &mut bb);
                for j in 0..n_t {
                    let row_a = a[j];
                    let row_b = bb[j];
                    for k in 0..n_t {
                        sa[j * n_t + k] += row_a * a[k].conj();
                        sb[j * n_t + k] += row_b * bb[k].conj();
                    }
                }
            }
            (sa, sb)
        })
        .collect();

    // Full-ensemble means and leave-one-block-out means.
    let nf = n_real as f64;
    let mut full_a = vec![Complex64::new(0.0, 0.0); n_t * n_t];
    let mut full_b = vec![Complex64::new(0.0, 0.0); n_t * n_t];
    for (sa, sb) in &block_sums {
        for (acc, v) in full_a.iter_mut().zip(sa) {
            *acc += v;
        }
        for (acc, v) in full_b.iter_mut().zip(sb) {
            *acc += v;
        }
    }
    let mean_full_a: Vec<Complex64> = full_a.iter().map(|v| v / nf).collect();
    let mean_full_b: Vec<Complex64> = full_b.iter().map(|v| v / nf).collect();
    let leave_outs: Vec<(Vec<Complex64>, Vec<Complex64>)> = (0..b)
        .map(|i| {
            let n_b = (bounds[i].1 - bounds[i].0) as f64;
            let rest = nf - n_b;
            let la: Vec<Complex64> = full_a
                .iter()
                .zip(&block_sums[i].0)
                .map(|(f, s)| (f - s) / rest)
                .collect();
            let lb: Vec<Complex64> = full_b
                .iter()
                .zip(&block_sums[i].1)
                .map(|(f, s)| (f - s) / rest)
                .collect();
            (la, lb)
        })
        .collect();

    let bf = b as f64;
    let out = shifts
        .iter()
        .map(|(shift, snapped)| {
            let full = ledger_from_moments(grid, &mean_full_a, &mean_full_b, *shift, policy);
            let full_vals: Vec<f64> = full.named().iter().map(|(_, v)| *v).collect();
            let mut leave_vals = vec![[0.0f64; 8]; b];
            for (i, (la, lb)) in leave_outs.iter().enumerate() {
                let l = ledger_from_moments(grid, la, lb, *shift, policy);
                for (t, (_, v)) in l.named().iter().enumerate() {
                    leave_vals[i][t] = *v;
                }
            }
            let mut est = [0.0f64; 8];
            let mut err = [0.0f64; 8];
            for t in 0..8 {
                let mean_leave: f64 = leave_vals.iter().map(|v| v[t]).sum::<f64>() / bf;
                est[t] = bf * full_vals[t] - (bf - 1.0) * mean_leave;
                let var: f64 = leave_vals
                    .iter()
                    .map(|v| (v[t] - mean_leave).powi(2))
                    .sum::<f64>()
                    * (bf - 1.0)
                    / bf;
                err[t] = var.sqrt();
            }
            TermEstimates {
                delta: *snapped,
                shift: *shift,
                ledger: TermLedger::from_named(est),
                stderr: TermLedger::from_named(err),
                n_samples: n_real,
            }
        })
        .collect();
    Ok(out)
}
