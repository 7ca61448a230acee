//! Intensity-correlation (bunching) scans with the recombiner removed: the
//! two collection points feed two detectors directly.
//!
//! Transverse scan: the tip separation is swept and each point's joint
//! counts come from intensities sampled at the detection instant across
//! `decorrelation_realizations_per_point` speckle realizations. With fast
//! decorrelation (a rotating diffuser) the ensemble average realizes the
//! bunching curve `1 + |mu(dx)|^2`; with a frozen diffuser
//! (`decorrelation_realizations_per_point = 1`) every scan point sees the
//! same speckle draw and the "correlation" is a speckle cross-section that
//! tracks no such curve — the contrast between the two is the point of the
//! measurement, so both are first-class here.
//!
//! Longitudinal scan: one field autocorrelated against a delayed copy of
//! itself, time-averaged over the window. Singles normalization is per
//! delay point, which cancels the pulse envelope, so CW and pulsed emission
//! give the same `1 + gamma^2(tau)` curve.
//!
//! Normalization of the transverse scan uses scan-global mean singles: a
//! per-point ratio would be degenerate for frozen scans (each point would
//! normalize away its own single sample).

use num_complex::Complex64;
use rayon::prelude::*;

use super::{EngineTag, Gamma2Curve};
use crate::coherence::{mutual_coherence, MutualCoherence};
use crate::error::{Error, Result};
use crate::field::{draw_coupled_modes, draw_single_modes, EnsembleSpec, ModeGrid};
use crate::spectral::SpectrumFunction;

/// Bunching expectation for a rotating (fast-decorrelating) source at tip
/// separation `dx`: `1 + |mu(dx)|^2` with the Airy-disc mutual coherence.
pub fn expected_g2_transverse(
    source_diameter: f64,
    distance: f64,
    dx: f64,
    lambda0: f64,
) -> Result<f64> {
    let mu = mutual_coherence(source_diameter, distance, dx.abs(), lambda0)?;
    Ok(1.0 + mu.magnitude() * mu.magnitude())
}

/// Bunching expectation for the longitudinal scan: `1 + gamma^2(tau)`.
#[must_use]
pub fn expected_g2_temporal(s: &SpectrumFunction, tau: f64) -> f64 {
    let g = s.envelope_at(tau).value.re;
    1.0 + g * g
}

const JACKKNIFE_BLOCKS: usize = 20;

fn jackknife_blocks(n: u64) -> usize {
    (JACKKNIFE_BLOCKS as u64).min(n).max(1) as usize
}

/// Transverse bunching scan over tip separations `offsets` (meters).
///
/// `decorrelation_realizations_per_point = 1` freezes the speckle: every
/// point reuses realization 0 with only the geometric coherence re-applied,
/// and no error bars exist (`stderr` = 0). Otherwise point `p` consumes
/// realizations `p*R .. (p+1)*R`, which `spec.n_realizations` must cover.
pub fn transverse_hbt_mc(
    spec: &EnsembleSpec,
    s: &SpectrumFunction,
    source_diameter: f64,
    distance: f64,
    lambda0: f64,
    offsets: &[f64],
) -> Result<Gamma2Curve> {
    spec.validate()?;
    if offsets.is_empty() {
        return Err(Error::InvalidInput("empty scan grid".to_string()));
    }
    let r = spec.decorrelation_realizations_per_point;
    let frozen = r == 1;
    let needed = offsets.len() as u64 * r;
    if !frozen && spec.n_realizations < needed {
        return Err(Error::InvalidInput(format!(
            "scan needs {needed} realizations ({} points x {r}), ensemble has {}",
            offsets.len(),
            spec.n_realizations
        )));
    }
    let mus: Vec<MutualCoherence> = offsets
        .iter()
        .map(|dx| mutual_coherence(source_diameter, distance, dx.abs(), lambda0))
        .collect::<Result<_>>()?;
    let grid = ModeGrid::for_ensemble(spec, s, 0.0)?;
    let n_modes = grid.freqs().len();
    let n_points = offsets.len();

    // Intensity pairs at the detection instant, indexed [point][realization].
    let pairs: Vec<(f64, f64)> = (0..n_points as u64 * r)
        .into_par_iter()
        .map(|flat| {
            let p = (flat / r) as usize;
            let index = if frozen { 0 } else { flat };
            let (ma, mb) = draw_coupled_modes(spec.master_seed, index, n_modes, mus[p].mu());
            let ea = grid.value_at(&ma, 0.0);
            let eb = grid.value_at(&mb, 0.0);
            (ea.norm_sqr(), eb.norm_sqr())
        })
        .collect();

    let rf = r as f64;
    let total = pairs.len() as f64;
    let mean_prod: Vec<f64> = (0..n_points)
        .map(|p| {
            pairs[p * r as usize..(p + 1) * r as usize]
                .iter()
                .map(|(ia, ib)| ia * ib)
                .sum::<f64>()
                / rf
        })
        .collect();
    let global_a: f64 = pairs.iter().map(|(ia, _)| ia).sum::<f64>() / total;
    let global_b: f64 = pairs.iter().map(|(_, ib)| ib).sum::<f64>() / total;
    if global_a <= 0.0 || global_b <= 0.0 {
        return Err(Error::Numeric(
            "degenerate singles in transverse scan".to_string(),
        ));
    }
    let values: Vec<f64> = mean_prod
        .iter()
        .map(|m| m / (global_a * global_b))
        .collect();

    // Jackknife over realization blocks shared across points; the global
    // normalization is recomputed per leave-out.
    let stderr = if frozen {
        vec![0.0; n_points]
    } else {
        let b = jackknife_blocks(r);
        let bounds: Vec<(usize, usize)> = (0..b)
            .map(|i| ((r as usize * i) / b, (r as usize * (i + 1)) / b))
            .collect();
        let mut leave = vec![vec![0.0f64; b]; n_points];
        for (bi, (lo, hi)) in bounds.iter().enumerate() {
            let kept_per_point = r as usize - (hi - lo);
            let mut ga = 0.0;
            let mut gb = 0.0;
            let mut prod = vec![0.0f64; n_points];
            for p in 0..n_points {
                for (ri, (ia, ib)) in pairs[p * r as usize..(p + 1) * r as usize]
                    .iter()
                    .enumerate()
                {
                    if ri >= *lo && ri < *hi {
                        continue;
                    }
                    ga += ia;
                    gb += ib;
                    prod[p] += ia * ib;
                }
            }
            let kept_total = (kept_per_point * n_points) as f64;
            let ga = ga / kept_total;
            let gb = gb / kept_total;
            for p in 0..n_points {
                leave[p][bi] = prod[p] / kept_per_point as f64 / (ga * gb);
            }
        }
        let bf = b as f64;
        (0..n_points)
            .map(|p| {
                let mean: f64 = leave[p].iter().sum::<f64>() / bf;
                let var: f64 =
                    leave[p].iter().map(|v| (v - mean).powi(2)).sum::<f64>() * (bf - 1.0) / bf;
                var.sqrt()
            })
            .collect()
    };

    let curve = Gamma2Curve {
        grid: offsets.to_vec(),
        values,
        stderr,
        n_samples: r,
        engine: EngineTag::ClassicalMc,
    };
    curve.validate()?;
    Ok(curve)
}

/// Longitudinal bunching scan: time-averaged `<I(t) I(t - tau)>` normalized
/// by the same product of mean intensity profiles, over `spec.n_realizations`
/// realizations. Delays are snapped to the synthesis grid; the returned
/// curve's grid holds the snapped values.
pub fn temporal_hbt_mc(
    spec: &EnsembleSpec,
    s: &SpectrumFunction,
    taus: &[f64],
) -> Result<Gamma2Curve> {
    spec.validate()?;
    if taus.is_empty() {
        return Err(Error::InvalidInput("empty scan grid".to_string()));
    }
    let max_tau = taus.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let grid = ModeGrid::for_ensemble(spec, s, max_tau)?;
    let n_t = grid.times().len();
    let dt = grid.dt();
    let shifts: Vec<(i64, f64)> = taus
        .iter()
        .map(|t| super::snap_delay_to_grid(&grid, *t))
        .collect::<Result<_>>()?;
    let offsets: Vec<usize> = shifts
        .iter()
        .map(|(sft, _)| (n_t as i64 + sft.rem_euclid(n_t as i64)) as usize % n_t)
        .collect();
    let n_modes = grid.freqs().len();
    let n_real = spec.n_realizations;

    // Per realization: the lagged products and the intensity profile.
    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..n_real)
        .into_par_iter()
        .map(|i| {
            let modes = draw_single_modes(spec.master_seed, i, n_modes);
            let mut e = vec![Complex64::new(0.0, 0.0); n_t];
            grid.synthesize_into(&modes, 0.0, &mut e);
            let intensity: Vec<f64> = e.iter().map(|v| v.norm_sqr()).collect();
            let corr: Vec<f64> = offsets
                .iter()
                .map(|off| {
                    dt * (0..n_t)
                        .map(|j| intensity[j] * intensity[(j + n_t - off) % n_t])
                        .sum::<f64>()
                })
                .collect();
            (corr, intensity)
        })
        .collect();

    let nf = n_real as f64;
    let mut mean_corr = vec![0.0f64; taus.len()];
    let mut mean_i = vec![0.0f64; n_t];
    for (corr, intensity) in &rows {
        for (acc, v) in mean_corr.iter_mut().zip(corr) {
            *acc += v;
        }
        for (acc, v) in mean_i.iter_mut().zip(intensity) {
            *acc += v;
        }
    }
    for v in &mut mean_corr {
        *v /= nf;
    }
    for v in &mut mean_i {
        *v /= nf;
    }
    let denom = |profile: &[f64], off: usize| -> f64 {
        dt * (0..n_t)
            .map(|j| profile[j] * profile[(j + n_t - off) % n_t])
            .sum::<f64>()
    };
    let values: Vec<f64> = offsets
        .iter()
        .zip(&mean_corr)
        .map(|(off, c)| c / denom(&mean_i, *off))
        .collect();

    let b = jackknife_blocks(n_real);
    let stderr = if b < 2 {
        vec![0.0; taus.len()]
    } else {
        let bounds: Vec<(u64, u64)> = (0..b)
            .map(|i| {
                (
                    n_real * i as u64 / b as u64,
                    n_real * (i as u64 + 1) / b as u64,
                )
            })
            .collect();
        let mut leave = vec![vec![0.0f64; b]; taus.len()];
        for (bi, (lo, hi)) in bounds.iter().enumerate() {
            let kept = nf - (hi - lo) as f64;
            let mut c_sum = vec![0.0f64; taus.len()];
            let mut i_sum = vec![0.0f64; n_t];
            for (ri, (corr, intensity)) in rows.iter().enumerate() {
                if (ri as u64) >= *lo && (ri as u64) < *hi {
                    continue;
                }
                for (acc, v) in c_sum.iter_mut().zip(corr) {
                    *acc += v;
                }
                for (acc, v) in i_sum.iter_mut().zip(intensity) {
                    *acc += v;
                }
            }
            for v in &mut i_sum {
                *v /= kept;
            }
            for (p, off) in offsets.iter().enumerate() {
                leave[p][bi] = (c_sum[p] / kept) / denom(&i_sum, *off);
            }
        }
        let bf = b as f64;
        leave
            .iter()
            .map(|l| {
                let mean: f64 = l.iter().sum::<f64>() / bf;
                let var: f64 = l.iter().map(|v| (v - mean).powi(2)).sum::<f64>() * (bf - 1.0) / bf;
                var.sqrt()
            })
            .collect()
    };

    let curve = Gamma2Curve {
        grid: shifts.iter().map(|(_, snapped)| *snapped).collect(),
        values,
        stderr,
        n_samples: n_real,
        engine: EngineTag::ClassicalMc,
    };
    curve.validate()?;
    Ok(curve)
}
