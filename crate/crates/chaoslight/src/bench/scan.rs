//! Scan orchestration: turns a parsed [`BenchConfig`] plus an engine choice
//! into normalized coincidence curves, intensity-correlation scans, and the
//! single-detector interferometric control.
//!
//! Normalization convention: delay-scan rates are divided by the analytic
//! far-delay baseline of the same detection model, so a flat classical
//! result reads 1.0 everywhere and dips read `1 - depth`.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::coherence::{mutual_coherence, MutualCoherence};
use crate::correlators::{
    classical_mc, classical_term_ledger, classical_terms_mc, coincidence_rate,
    expected_g2_temporal, expected_g2_transverse, mz_analytic_point_cw, mz_analytic_point_pulsed,
    mz_mc_cw, temporal_hbt_mc, transverse_hbt_mc, DetectionPolicy, EngineTag, MzPoint,
    TermEstimates, TermLedger, INDEPENDENT_TIP_MU_LIMIT,
};
use crate::error::{Error, Result};
use crate::field::{EmissionMode, EnsembleSpec, ModeGrid};
use crate::spectral::SpectrumFunction;

use super::config::{BenchConfig, Engine, ScanAxis};

/// Delay margin (in units of tau_c) past which coherence is treated as
/// fully decayed when picking the normalization baseline.
const BASELINE_TAU_C: f64 = 6.0;
/// Slow-detector observation window for the cw interferometric control, in
/// units of tau_c. Long enough that intensity-noise corrections to the
/// factorized joint rate stay below 1e-3.
const MZ_WINDOW_TAU_C: f64 = 2000.0;

/// One scan: positions, per-port singles fractions, the normalized joint
/// rate (or g2), and its per-point standard error.
#[derive(Debug, Clone)]
pub struct ScanResult {
    /// Scan positions in SI units: seconds (longitudinal) or meters
    /// (transverse). Monte Carlo delay scans snap to the sampling grid.
    pub grid: Vec<f64>,
    pub singles_1: Vec<f64>,
    pub singles_2: Vec<f64>,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Realizations behind each point; 0 for closed-form curves.
    pub n_samples: u64,
    pub engine: EngineTag,
    pub config_hash: String,
}

/// Interferometric-control scan with its fringe visibility and the largest
/// factorization residual seen across the scan.
#[derive(Debug, Clone)]
pub struct MzScan {
    pub points: Vec<MzPoint>,
    pub visibility: f64,
    pub max_residual: f64,
    pub n_samples: u64,
    pub engine: EngineTag,
    pub config_hash: String,
}

/// Per-term cross-check at one delay: the sampled expansion terms next to
/// their analytic values.
#[derive(Debug, Clone)]
pub struct TermComparison {
    pub estimate: TermEstimates,
    pub analytic: TermLedger,
}

/// The three routes over the same scan, plus term-level diagnostics.
#[derive(Debug, Clone)]
pub struct CompareResult {
    pub quantum: ScanResult,
    pub ledger: ScanResult,
    pub monte_carlo: ScanResult,
    pub terms: Vec<TermComparison>,
}

fn tag_for(engine: Engine) -> EngineTag {
    match engine {
        Engine::Quantum => EngineTag::Quantum,
        Engine::ClassicalMc => EngineTag::ClassicalMc,
        Engine::ClassicalLedger => EngineTag::ClassicalLedger,
    }
}

fn spectrum_for(cfg: &BenchConfig) -> Result<SpectrumFunction> {
    SpectrumFunction::gaussian(cfg.omega0(), cfg.tau_c())
}

fn detection_policy(mode: EmissionMode) -> DetectionPolicy {
    match mode {
        EmissionMode::Cw => DetectionPolicy::GatedCoincidence,
        EmissionMode::Pulsed => DetectionPolicy::WindowedProduct,
    }
}

fn ensemble_for(cfg: &BenchConfig, n: u64) -> EnsembleSpec {
    match cfg.emission_mode {
        EmissionMode::Cw => EnsembleSpec::cw(n, cfg.seed),
        EmissionMode::Pulsed => EnsembleSpec::pulsed(n, cfg.seed, cfg.pulse_fwhm()),
    }
}

/// Delay at which both the field coherence and (for pulses) the envelope
/// overlap have decayed to numerical zero.
fn baseline_delay(cfg: &BenchConfig) -> f64 {
    let mut d = BASELINE_TAU_C * cfg.tau_c();
    if cfg.emission_mode == EmissionMode::Pulsed {
        d += 4.0 * cfg.pulse_fwhm();
    }
    d
}

fn dip_grid(cfg: &BenchConfig, deltas: &[f64]) -> Result<Arc<ModeGrid>> {
    let s = spectrum_for(cfg)?;
    let max_scan = deltas.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let max_delay = max_scan.max(baseline_delay(cfg));
    match cfg.emission_mode {
        EmissionMode::Cw => ModeGrid::cw(&s, max_delay),
        EmissionMode::Pulsed => ModeGrid::pulsed(&s, cfg.pulse_fwhm(), max_delay),
    }
}

fn require_recombiner(cfg: &BenchConfig, present: bool, what: &str) -> Result<()> {
    if cfg.bs2_present != present {
        let fix = if present {
            "set [geometry].bs2_present = true"
        } else {
            "set [geometry].bs2_present = false"
        };
        return Err(Error::InvalidInput(format!(
            "{what} {} the recombining splitter; {fix}",
            if present { "needs" } else { "removes" }
        )));
    }
    Ok(())
}

fn require_axis(cfg: &BenchConfig, axis: ScanAxis, what: &str) -> Result<()> {
    if cfg.axis != axis {
        let (name, keys) = match axis {
            ScanAxis::Longitudinal => ("longitudinal", "from_fs/to_fs/step_fs"),
            ScanAxis::Transverse => ("transverse", "from_um/to_um/step_um"),
        };
        return Err(Error::InvalidInput(format!(
            "{what} sweeps the {name} axis; set [scan].axis = {name} with {keys}"
        )));
    }
    Ok(())
}

/// Residual field correlation between the two collection tips. The
/// two-independent-source treatment (and the per-term ledger) requires this
/// to be negligible.
fn tip_coherence(cfg: &BenchConfig) -> Result<MutualCoherence> {
    let mu = mutual_coherence(
        cfg.source_diameter(),
        cfg.distance_a(),
        cfg.tip_separation(),
        cfg.lambda0(),
    )?;
    if mu.magnitude() > INDEPENDENT_TIP_MU_LIMIT {
        return Err(Error::UnsupportedRegime(format!(
            "tips {} coherence lengths apart still share |mu| = {:.3}; \
             the two-source delay scan needs |mu| <= {INDEPENDENT_TIP_MU_LIMIT}",
            cfg.tip_sep_lc,
            mu.magnitude()
        )));
    }
    Ok(mu)
}

/// Runs the anti-correlation delay scan and returns the rate normalized to
/// its far-delay baseline.
pub fn run_dip_scan(cfg: &BenchConfig, engine: Engine) -> Result<ScanResult> {
    cfg.validate()?;
    require_recombiner(cfg, true, "the delay scan")?;
    require_axis(cfg, ScanAxis::Longitudinal, "the delay scan")?;
    let mu = tip_coherence(cfg)?;

    let deltas = cfg.scan_grid();
    let n = deltas.len();
    let hash = cfg.config_hash();
    let half = vec![0.5; n];

    match engine {
        Engine::Quantum => {
            let values = deltas
                .iter()
                .map(|&d| coincidence_rate(d, cfg.tau_c(), cfg.gamma))
                .collect::<Result<Vec<f64>>>()?;
            Ok(ScanResult {
                grid: deltas,
                singles_1: half.clone(),
                singles_2: half,
                values,
                stderr: vec![0.0; n],
                n_samples: 0,
                engine: EngineTag::Quantum,
                config_hash: hash,
            })
        }
        Engine::ClassicalLedger => {
            let grid = dip_grid(cfg, &deltas)?;
            let policy = detection_policy(cfg.emission_mode);
            let baseline = classical_term_ledger(&grid, &mu, baseline_delay(cfg), policy)?.total();
            let values = deltas
                .iter()
                .map(|&d| Ok(classical_term_ledger(&grid, &mu, d, policy)?.total() / baseline))
                .collect::<Result<Vec<f64>>>()?;
            Ok(ScanResult {
                grid: deltas,
                singles_1: half.clone(),
                singles_2: half,
                values,
                stderr: vec![0.0; n],
                n_samples: 0,
                engine: EngineTag::ClassicalLedger,
                config_hash: hash,
            })
        }
        Engine::ClassicalMc => {
            let grid = dip_grid(cfg, &deltas)?;
            let policy = detection_policy(cfg.emission_mode);
            let spec = ensemble_for(cfg, cfg.integration_realizations);
            let baseline = classical_term_ledger(&grid, &mu, baseline_delay(cfg), policy)?.total();
            let curve = classical_mc(&grid, &spec, &mu, &deltas, policy)?;
            Ok(ScanResult {
                grid: curve.grid,
                singles_1: half.clone(),
                singles_2: half,
                values: curve.values.iter().map(|v| v / baseline).collect(),
                stderr: curve.stderr.iter().map(|s| s / baseline).collect(),
                n_samples: curve.n_samples,
                engine: EngineTag::ClassicalMc,
                config_hash: hash,
            })
        }
    }
}

/// Runs the intensity-correlation (no recombiner) scan: transverse bunching
/// across tip separation, or temporal bunching across arm delay.
pub fn run_hbt_scan(cfg: &BenchConfig, engine: Engine) -> Result<ScanResult> {
    cfg.validate()?;
    require_recombiner(cfg, false, "the intensity-correlation scan")?;
    let s = spectrum_for(cfg)?;
    let positions = cfg.scan_grid();
    let n = positions.len();
    let hash = cfg.config_hash();
    let ones = vec![1.0; n];

    match (cfg.axis, engine) {
        (ScanAxis::Transverse, Engine::Quantum | Engine::ClassicalLedger) => {
            let values = positions
                .iter()
                .map(|&dx| {
                    expected_g2_transverse(
                        cfg.source_diameter(),
                        cfg.distance_a(),
                        dx,
                        cfg.lambda0(),
                    )
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(ScanResult {
                grid: positions,
                singles_1: ones.clone(),
                singles_2: ones,
                values,
                stderr: vec![0.0; n],
                n_samples: 0,
                engine: tag_for(engine),
                config_hash: hash,
            })
        }
        (ScanAxis::Transverse, Engine::ClassicalMc) => {
            let r = cfg.integration_realizations;
            let n_total = if r == 1 { 1 } else { n as u64 * r };
            let mut spec = ensemble_for(cfg, n_total);
            spec.decorrelation_realizations_per_point = r;
            let curve = transverse_hbt_mc(
                &spec,
                &s,
                cfg.source_diameter(),
                cfg.distance_a(),
                cfg.lambda0(),
                &positions,
            )?;
            Ok(ScanResult {
                grid: curve.grid,
                singles_1: ones.clone(),
                singles_2: ones,
                values: curve.values,
                stderr: curve.stderr,
                n_samples: curve.n_samples,
                engine: EngineTag::ClassicalMc,
                config_hash: hash,
            })
        }
        (ScanAxis::Longitudinal, Engine::Quantum | Engine::ClassicalLedger) => {
            let values = positions
                .iter()
                .map(|&tau| expected_g2_temporal(&s, tau))
                .collect();
            Ok(ScanResult {
                grid: positions,
                singles_1: ones.clone(),
                singles_2: ones,
                values,
                stderr: vec![0.0; n],
                n_samples: 0,
                engine: tag_for(engine),
                config_hash: hash,
            })
        }
        (ScanAxis::Longitudinal, Engine::ClassicalMc) => {
            let spec = ensemble_for(cfg, cfg.integration_realizations);
            let curve = temporal_hbt_mc(&spec, &s, &positions)?;
            Ok(ScanResult {
                grid: curve.grid,
                singles_1: ones.clone(),
                singles_2: ones,
                values: curve.values,
                stderr: curve.stderr,
                n_samples: curve.n_samples,
                engine: EngineTag::ClassicalMc,
                config_hash: hash,
            })
        }
    }
}

/// Runs the single-point interferometric control: first-order fringes in the
/// singles and the factorization check on the joint rate.
pub fn run_mach_zehnder(cfg: &BenchConfig, engine: Engine) -> Result<MzScan> {
    cfg.validate()?;
    require_recombiner(cfg, true, "the interferometric control")?;
    require_axis(cfg, ScanAxis::Longitudinal, "the interferometric control")?;
    if cfg.tip_sep_lc != 0.0 {
        return Err(Error::InvalidInput(format!(
            "the interferometric control collects a single transverse point; \
             set [geometry].tip_sep_lc = 0 (got {})",
            cfg.tip_sep_lc
        )));
    }

    let s = spectrum_for(cfg)?;
    let deltas = cfg.scan_grid();
    let hash = cfg.config_hash();

    let (points, n_samples) = match (cfg.emission_mode, engine) {
        (EmissionMode::Cw, Engine::Quantum | Engine::ClassicalLedger) => {
            let grid = ModeGrid::cw_unwindowed(&s, MZ_WINDOW_TAU_C)?;
            let pts = deltas
                .iter()
                .map(|&d| mz_analytic_point_cw(&grid, d))
                .collect::<Result<Vec<MzPoint>>>()?;
            (pts, 0)
        }
        (EmissionMode::Cw, Engine::ClassicalMc) => {
            let grid = ModeGrid::cw_unwindowed(&s, MZ_WINDOW_TAU_C)?;
            let spec = EnsembleSpec::cw(cfg.integration_realizations, cfg.seed);
            let pts = mz_mc_cw(&grid, &spec, &deltas)?;
            (pts, cfg.integration_realizations)
        }
        (EmissionMode::Pulsed, Engine::Quantum | Engine::ClassicalLedger) => {
            let pts = deltas
                .iter()
                .map(|&d| mz_analytic_point_pulsed(&s, cfg.pulse_fwhm(), d))
                .collect::<Result<Vec<MzPoint>>>()?;
            (pts, 0)
        }
        (EmissionMode::Pulsed, Engine::ClassicalMc) => {
            return Err(Error::UnsupportedRegime(
                "the pulsed interferometric control is modeled as a single \
                 coherent wavepacket (factorized joint rate); Monte Carlo \
                 joint statistics are available for cw emission only"
                    .to_string(),
            ));
        }
    };

    let (lo, hi) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.singles_1), hi.max(p.singles_1))
        });
    let visibility = if hi + lo > 0.0 {
        (hi - lo) / (hi + lo)
    } else {
        0.0
    };
    let max_residual = points
        .iter()
        .map(|p| p.residual.abs())
        .fold(0.0f64, f64::max);

    Ok(MzScan {
        points,
        visibility,
        max_residual,
        n_samples,
        engine: tag_for(engine),
        config_hash: hash,
    })
}

/// Indices of up to `k` roughly evenly spaced scan points, always including
/// both ends.
fn spread_indices(n: usize, k: usize) -> Vec<usize> {
    if n <= k {
        return (0..n).collect();
    }
    let mut idx: Vec<usize> = (0..k)
        .map(|i| (i as f64 / (k - 1) as f64 * (n - 1) as f64).round() as usize)
        .collect();
    idx.dedup();
    idx
}

/// Runs all three routes over the same delay scan and samples the expansion
/// terms at a spread of delays. The curves are reported as computed; any
/// disagreement between routes is the result, not an error.
pub fn run_compare(cfg: &BenchConfig) -> Result<CompareResult> {
    let quantum = run_dip_scan(cfg, Engine::Quantum)?;
    let ledger = run_dip_scan(cfg, Engine::ClassicalLedger)?;
    let monte_carlo = run_dip_scan(cfg, Engine::ClassicalMc)?;

    let deltas = cfg.scan_grid();
    let grid = dip_grid(cfg, &deltas)?;
    let mu = tip_coherence(cfg)?;
    let policy = detection_policy(cfg.emission_mode);
    let spec = ensemble_for(cfg, cfg.integration_realizations);
    let chosen: Vec<f64> = spread_indices(deltas.len(), 5)
        .into_iter()
        .map(|i| deltas[i])
        .collect();
    let estimates = classical_terms_mc(&grid, &spec, &mu, &chosen, policy)?;
    let terms = estimates
        .into_iter()
        .map(|estimate| {
            let analytic = classical_term_ledger(&grid, &mu, estimate.delta, policy)?;
            Ok(TermComparison { estimate, analytic })
        })
        .collect::<Result<Vec<TermComparison>>>()?;

    Ok(CompareResult {
        quantum,
        ledger,
        monte_carlo,
        terms,
    })
}

/// Overlays Poisson-like counting noise (Gaussian approximation) on a
/// normalized curve: each point gets sigma = sqrt(value / trials).
/// Deterministic in `seed`.
#[must_use]
pub fn add_counting_noise(result: &ScanResult, trials: u64, seed: u64) -> ScanResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noisy = result.clone();
    let t = (trials.max(1)) as f64;
    for (v, s) in noisy.values.iter_mut().zip(noisy.stderr.iter_mut()) {
        let sigma = (v.max(0.0) / t).sqrt();
        *v += sigma * rng.sample::<f64, _>(StandardNormal);
        *s = (*s * *s + sigma * sigma).sqrt();
    }
    noisy.n_samples = trials;
    noisy
}
