//! Correlated chaotic-field realizations.
//!
//! A realization is a pair of circular complex Gaussian fields at the two
//! collection points, built by spectral superposition: discrete detuning
//! modes `nu_k` spaced `2 pi / T` (so every time series is T-periodic), with
//! amplitude weights `w_k ~ sqrt(f(nu_k))` so the synthesized field has power
//! spectrum `f(nu)` and first-order coherence envelope `exp(-tau^2/tau_c^2)`,
//! matching the two-photon wavepacket convention in [`crate::spectral`].
//!
//! Spatial correlation: per mode, point B gets `mu * z1 + sqrt(1-|mu|^2) z2`
//! against point A's `z1`, realizing the covariance [[1, mu], [mu*, 1]].
//!
//! Determinism: realization `i` draws from a counter-seeded stream
//! `(master_seed, stream = i)`; any realization is reproducible in isolation
//! and results cannot depend on worker count or scheduling.
//!
//! All samples live in the envelope frame rotating at the carrier `omega_0`:
//! delaying a field by `delta` multiplies its envelope by `exp(i omega_0
//! delta)` (reduced mod 2 pi) instead of ever forming `omega_0 * t` products,
//! which would be catastrophic at optical frequencies.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::coherence::MutualCoherence;
use crate::error::{Error, Result};
use crate::spectral::{wrap_phase, SpectrumFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EmissionMode {
    Cw,
    Pulsed,
}

/// Ensemble description: how many speckle realizations, how they are seeded,
/// and what the emission envelope looks like.
#[derive(Debug, Clone)]
pub struct EnsembleSpec {
    pub n_realizations: u64,
    pub master_seed: u64,
    pub emission_mode: EmissionMode,
    /// Intensity FWHM of the pulse envelope, seconds. Required when pulsed.
    pub pulse_fwhm: Option<f64>,
    /// Optional phasor-sum fidelity mode: model each mode amplitude as a sum
    /// of `n` unit phasors from discrete sub-sources instead of a Gaussian
    /// draw. Demonstrates convergence to Gaussian statistics; >= 2.
    pub n_sub_sources: Option<u32>,
    /// Speckle realizations averaged per scan point. 1 models a frozen
    /// diffuser (no ensemble averaging); large values model fast rotation.
    pub decorrelation_realizations_per_point: u64,
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_realizations == 0 {
            return Err(Error::invalid_parameter(
                "n_realizations",
                "must be at least 1",
            ));
        }
        if self.decorrelation_realizations_per_point == 0 {
            return Err(Error::invalid_parameter(
                "decorrelation_realizations_per_point",
                "must be at least 1",
            ));
        }
        match self.emission_mode {
            EmissionMode::Pulsed => match self.pulse_fwhm {
                Some(f) if f.is_finite() && f > 0.0 => {}
                other => {
                    return Err(Error::invalid_parameter(
                        "pulse_fwhm",
                        format!("pulsed emission needs a positive width, got {other:?}"),
                    ))
                }
            },
            EmissionMode::Cw => {}
        }
        if let Some(n) = self.n_sub_sources {
            if n < 2 {
                return Err(Error::invalid_parameter(
                    "n_sub_sources",
                    format!("phasor-sum mode needs at least 2 sub-sources, got {n}"),
                ));
            }
        }
        Ok(())
    }

    /// CW ensemble with Gaussian statistics; the common test-path default.
    #[must_use]
    pub fn cw(n_realizations: u64, master_seed: u64) -> Self {
        EnsembleSpec {
            n_realizations,
            master_seed,
            emission_mode: EmissionMode::Cw,
            pulse_fwhm: None,
            n_sub_sources: None,
            decorrelation_realizations_per_point: 1000,
        }
    }

    /// Pulsed ensemble with Gaussian statistics.
    #[must_use]
    pub fn pulsed(n_realizations: u64, master_seed: u64, pulse_fwhm: f64) -> Self {
        EnsembleSpec {
            n_realizations,
            master_seed,
            emission_mode: EmissionMode::Pulsed,
            pulse_fwhm: Some(pulse_fwhm),
            n_sub_sources: None,
            decorrelation_realizations_per_point: 1000,
        }
    }
}

/// Gaussian amplitude envelope of one emitted pulse, anchored at t = 0.
///
/// `fwhm` is the full width at half maximum of the *intensity* profile, so
/// `amplitude(t) = exp(-2 ln2 t^2 / fwhm^2)`.
#[derive(Debug, Clone, Copy)]
pub struct PulseEnvelope {
    fwhm: f64,
}

impl PulseEnvelope {
    #[must_use]
    pub fn new(fwhm: f64) -> Self {
        PulseEnvelope { fwhm }
    }

    #[must_use]
    pub fn fwhm(&self) -> f64 {
        self.fwhm
    }

    #[must_use]
    pub fn amplitude(&self, t: f64) -> f64 {
        let arg = t / self.fwhm;
        (-2.0 * std::f64::consts::LN_2 * arg * arg).exp()
    }

    /// Half-width beyond which the amplitude is below ~2e-10 and the pulse
    /// can be treated as absent for window-sizing purposes.
    #[must_use]
    pub fn support_half_width(&self) -> f64 {
        4.0 * self.fwhm
    }
}

/// Samples per coherence time on the synthesis grid.
const SAMPLES_PER_TAU_C: f64 = 8.0;
/// Spectral truncation: modes kept out to `8 / tau_c` detuning, where the
/// amplitude weight has fallen to ~3e-4 (power ~1e-7).
const NU_MAX_TAU_C: f64 = 8.0;
/// Minimum CW period in coherence times; wrap-around coherence images sit at
/// least 16 tau_c away (envelope ~e^-256).
const CW_BASE_SPAN_TAU_C: f64 = 16.0;

/// Shared discretization for one ensemble: mode frequencies and weights, the
/// periodic time grid, and (when time-domain synthesis is needed) the
/// precomputed `exp(-i nu_k t_j)` matrix.
#[derive(Debug)]
pub struct ModeGrid {
    period: f64,
    dt: f64,
    times: Vec<f64>,
    freqs: Vec<f64>,
    /// Mode amplitude weights, sum of squares = 1.
    weights: Vec<f64>,
    /// Row-major `times.len() x freqs.len()` synthesis matrix; empty for
    /// mode-space-only grids (long-window CW, where no time series is formed).
    synth: Vec<Complex64>,
    omega0: f64,
    pulse: Option<PulseEnvelope>,
    /// Largest delay the window was sized for; consumers reject bigger ones.
    max_delay: f64,
}

impl ModeGrid {
    /// Periodic CW grid able to represent delays up to `max_delay` without
    /// wrap-around artifacts.
    pub fn cw(s: &SpectrumFunction, max_delay: f64) -> Result<Arc<Self>> {
        let tau_c = s.coherence_time();
        let period = f64::max(
            CW_BASE_SPAN_TAU_C * tau_c,
            2.0 * max_delay.abs() + 8.0 * tau_c,
        );
        Self::build(s, period, true, None, max_delay.abs())
    }

    /// Grid for pulsed emission: window covers the stationary pulse at 0, the
    /// delayed pulse at up to `max_delay`, and coherence tails.
    pub fn pulsed(s: &SpectrumFunction, pulse_fwhm: f64, max_delay: f64) -> Result<Arc<Self>> {
        if !(pulse_fwhm.is_finite() && pulse_fwhm > 0.0) {
            return Err(Error::invalid_parameter(
                "pulse_fwhm",
                format!("must be positive and finite, got {pulse_fwhm}"),
            ));
        }
        let tau_c = s.coherence_time();
        let pulse = PulseEnvelope::new(pulse_fwhm);
        let half = max_delay.abs() + pulse.support_half_width() + 6.0 * tau_c;
        Self::build(s, 2.0 * half, true, Some(pulse), max_delay.abs())
    }

    /// Mode-space-only CW grid with a long period (slow-detector windows).
    /// No time grid is materialized; integrated quantities use Parseval sums.
    pub fn cw_unwindowed(s: &SpectrumFunction, period_tau_c: f64) -> Result<Arc<Self>> {
        let tau_c = s.coherence_time();
        let period = period_tau_c * tau_c;
        Self::build(s, period, false, None, period)
    }

    fn build(
        s: &SpectrumFunction,
        period: f64,
        with_times: bool,
        pulse: Option<PulseEnvelope>,
        max_delay: f64,
    ) -> Result<Arc<Self>> {
        let tau_c = s.coherence_time();
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::invalid_parameter(
                "period",
                format!("must be positive and finite, got {period}"),
            ));
        }
        let dnu = std::f64::consts::TAU / period;
        let nu_max = NU_MAX_TAU_C / tau_c;
        let m = (nu_max / dnu).ceil() as i64;
        let freqs: Vec<f64> = (-m..=m).map(|k| k as f64 * dnu).collect();
        let mut weights: Vec<f64> = freqs.iter().map(|nu| s.amplitude(*nu).sqrt()).collect();
        let norm: f64 = weights.iter().map(|w| w * w).sum();
        let norm = norm.sqrt();
        for w in &mut weights {
            *w /= norm;
        }

        let (times, dt, synth) = if with_times {
            let n_t = (period / (tau_c / SAMPLES_PER_TAU_C)).ceil() as usize;
            let dt = period / n_t as f64;
            let times: Vec<f64> = (0..n_t).map(|j| -0.5 * period + j as f64 * dt).collect();
            let mut synth = Vec::with_capacity(n_t * freqs.len());
            for t in &times {
                for nu in &freqs {
                    synth.push(Complex64::from_polar(1.0, -nu * t));
                }
            }
            (times, dt, synth)
        } else {
            (Vec::new(), 0.0, Vec::new())
        };

        Ok(Arc::new(ModeGrid {
            period,
            dt,
            times,
            freqs,
            weights,
            synth,
            omega0: s.center_frequency(),
            pulse,
            max_delay,
        }))
    }

    /// Picks the grid flavor for an ensemble.
    pub fn for_ensemble(
        spec: &EnsembleSpec,
        s: &SpectrumFunction,
        max_delay: f64,
    ) -> Result<Arc<Self>> {
        spec.validate()?;
        match spec.emission_mode {
            EmissionMode::Cw => Self::cw(s, max_delay),
            EmissionMode::Pulsed => Self::pulsed(s, spec.pulse_fwhm.unwrap(), max_delay),
        }
    }

    #[must_use]
    pub fn period(&self) -> f64 {
        self.period
    }

    #[must_use]
    pub fn dt(&self) -> f64 {
        self.dt
    }

    #[must_use]
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    #[must_use]
    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    #[must_use]
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[must_use]
    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    #[must_use]
    pub fn pulse(&self) -> Option<&PulseEnvelope> {
        self.pulse.as_ref()
    }

    #[must_use]
    pub fn max_delay(&self) -> f64 {
        self.max_delay
    }

    /// Errors unless `|delta|` fits in the window the grid was sized for.
    pub fn check_delay(&self, delta: f64) -> Result<()> {
        if delta.abs() <= self.max_delay * (1.0 + 1e-9) + 1e-30 {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "delay {delta:e} s exceeds the window this grid was sized for ({:e} s)",
                self.max_delay
            )))
        }
    }

    /// Expected first-order coherence of the synthesized process,
    /// `gamma_d(tau) = sum w_k^2 exp(-i nu_k tau)` (real by grid symmetry).
    #[must_use]
    pub fn coherence_envelope(&self, tau: f64) -> f64 {
        self.freqs
            .iter()
            .zip(&self.weights)
            .map(|(nu, w)| w * w * (nu * tau).cos())
            .sum()
    }

    /// Synthesizes the envelope-frame time series of one field on the grid.
    ///
    /// `delay` shifts the field (`E(t - delay)`) exactly in mode space and
    /// applies the carrier factor `exp(i omega_0 delay)` plus, when pulsed,
    /// the shifted pulse envelope. `out` must have `times.len()` entries.
    pub(crate) fn synthesize_into(&self, modes: &[Complex64], delay: f64, out: &mut [Complex64]) {
        assert_eq!(out.len(), self.times.len());
        assert!(
            !self.synth.is_empty(),
            "grid has no time-domain synthesis matrix"
        );
        let k = self.freqs.len();
        let carrier = Complex64::from_polar(1.0, wrap_phase(self.omega0 * delay));
        let coeffs: Vec<Complex64> = (0..k)
            .map(|i| {
                modes[i]
                    * self.weights[i]
                    * Complex64::from_polar(1.0, self.freqs[i] * delay)
                    * carrier
            })
            .collect();
        for (j, o) in out.iter_mut().enumerate() {
            let row = &self.synth[j * k..(j + 1) * k];
            let mut acc = Complex64::new(0.0, 0.0);
            for (c, e) in coeffs.iter().zip(row) {
                acc += c * e;
            }
            *o = acc;
        }
        if let Some(p) = &self.pulse {
            for (o, t) in out.iter_mut().zip(&self.times) {
                *o *= p.amplitude(t - delay);
            }
        }
    }

    /// Envelope-frame field value at a single time (pulse envelope included,
    /// no delay or carrier factor).
    pub(crate) fn value_at(&self, modes: &[Complex64], t: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for ((nu, w), m) in self.freqs.iter().zip(&self.weights).zip(modes) {
            acc += m * w * Complex64::from_polar(1.0, -nu * t);
        }
        match &self.pulse {
            Some(p) => acc * p.amplitude(t),
            None => acc,
        }
    }
}

/// One speckle realization: correlated mode amplitudes for points A and B
/// plus their synthesized envelope-frame time series at zero delay.
#[derive(Debug, Clone)]
pub struct FieldRealization {
    index: u64,
    grid: Arc<ModeGrid>,
    modes_a: Vec<Complex64>,
    modes_b: Vec<Complex64>,
    samples_a: Vec<Complex64>,
    samples_b: Vec<Complex64>,
}

impl FieldRealization {
    #[must_use]
    pub fn index(&self) -> u64 {
        self.index
    }

    #[must_use]
    pub fn grid(&self) -> &Arc<ModeGrid> {
        &self.grid
    }

    #[must_use]
    pub fn time_grid(&self) -> &[f64] {
        self.grid.times()
    }

    #[must_use]
    pub fn samples_a(&self) -> &[Complex64] {
        &self.samples_a
    }

    #[must_use]
    pub fn samples_b(&self) -> &[Complex64] {
        &self.samples_b
    }

    /// Raw correlated mode amplitudes (weights not applied).
    #[must_use]
    pub fn modes_a(&self) -> &[Complex64] {
        &self.modes_a
    }

    #[must_use]
    pub fn modes_b(&self) -> &[Complex64] {
        &self.modes_b
    }

    /// Field A delayed by `delta`, synthesized exactly in mode space
    /// (carrier factor and shifted pulse envelope included).
    #[must_use]
    pub fn samples_a_delayed(&self, delta: f64) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.grid.times().len()];
        self.grid.synthesize_into(&self.modes_a, delta, &mut out);
        out
    }
}

/// Per-realization RNG: one ChaCha stream per realization index off the
/// master seed, so realizations are independent and order-free.
fn realization_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Unit-variance circular complex Gaussian.
fn draw_circular(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Mode amplitudes for a single field (one collection point, no partner).
pub(crate) fn draw_single_modes(master_seed: u64, index: u64, n_modes: usize) -> Vec<Complex64> {
    let mut rng = realization_rng(master_seed, index);
    (0..n_modes).map(|_| draw_circular(&mut rng)).collect()
}

/// Draws the correlated mode amplitude pair for one realization.
///
/// The raw draws (z1, z2) per mode are independent of `mu`; the coherence
/// only mixes them. Two calls with different `mu` but the same seed and index
/// therefore share the same underlying randomness, which is what lets a
/// frozen-diffuser scan re-evaluate `mu` against one fixed speckle draw.
pub(crate) fn draw_coupled_modes(
    master_seed: u64,
    index: u64,
    n_modes: usize,
    mu: Complex64,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut rng = realization_rng(master_seed, index);
    let mix = (1.0 - mu.norm_sqr()).max(0.0).sqrt();
    let mut a = Vec::with_capacity(n_modes);
    let mut b = Vec::with_capacity(n_modes);
    for _ in 0..n_modes {
        let z1 = draw_circular(&mut rng);
        let z2 = draw_circular(&mut rng);
        a.push(z1);
        b.push(mu * z1 + mix * z2);
    }
    (a, b)
}

/// Phasor-sum amplitudes: `n_sub` unit phasors at random transverse positions
/// in the source disc. `vcz_argument` is the same dimensionless `x` fed to
/// the Airy coherence (`pi dtheta drho / lambda0`); each sub-source at
/// normalized transverse position u contributes a relative phase `x * u` at
/// point B. The ensemble mean of the empirical A-B mode correlation is then
/// exactly `2 J1(x) / x`.
///
/// Snapshot model: each radiator carries ONE random phase per realization,
/// shared by every mode. Spreading fresh phases over the modes would let the
/// mode sum re-Gaussianize the field (central limit over modes) and erase
/// the finite-n signature g2(0) = 2 - 1/n. The price is that time evolution
/// within a realization is the coherent envelope, so only single-time
/// statistics are meaningful in this mode.
pub(crate) fn draw_phasor_modes(
    master_seed: u64,
    index: u64,
    n_modes: usize,
    n_sub: u32,
    vcz_argument: f64,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut rng = realization_rng(master_seed, index);
    let scale = 1.0 / (n_sub as f64).sqrt();
    let mut sum_a = Complex64::new(0.0, 0.0);
    let mut sum_b = Complex64::new(0.0, 0.0);
    for _ in 0..n_sub {
        // Transverse position in the disc, frozen for the realization.
        let u = loop {
            let ux: f64 = rng.gen_range(-1.0..1.0);
            let uy: f64 = rng.gen_range(-1.0..1.0);
            if ux * ux + uy * uy <= 1.0 {
                break ux;
            }
        };
        let phi = vcz_argument * u;
        let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        sum_a += Complex64::from_polar(1.0, theta);
        sum_b += Complex64::from_polar(1.0, theta + phi);
    }
    let pa = sum_a * scale;
    let pb = sum_b * scale;
    (vec![pa; n_modes], vec![pb; n_modes])
}

fn realization_on(
    grid: &Arc<ModeGrid>,
    spec: &EnsembleSpec,
    mu: &MutualCoherence,
    index: u64,
) -> Result<FieldRealization> {
    if index >= spec.n_realizations {
        return Err(Error::RealizationOutOfRange {
            index,
            n: spec.n_realizations,
        });
    }
    let (modes_a, modes_b) =
        draw_coupled_modes(spec.master_seed, index, grid.freqs().len(), mu.mu());
    let n_t = grid.times().len();
    let mut samples_a = vec![Complex64::new(0.0, 0.0); n_t];
    let mut samples_b = vec![Complex64::new(0.0, 0.0); n_t];
    if n_t > 0 {
        grid.synthesize_into(&modes_a, 0.0, &mut samples_a);
        grid.synthesize_into(&modes_b, 0.0, &mut samples_b);
    }
    Ok(FieldRealization {
        index,
        grid: Arc::clone(grid),
        modes_a,
        modes_b,
        samples_a,
        samples_b,
    })
}

/// Draws realization `realization_index` of the correlated field pair.
///
/// Convenience form that sizes its own grid for zero scan delay; ensemble
/// loops should build one [`ModeGrid`] and use [`sample_pair_fields_on`].
pub fn sample_pair_fields(
    spec: &EnsembleSpec,
    s: &SpectrumFunction,
    mu: &MutualCoherence,
    realization_index: u64,
) -> Result<FieldRealization> {
    let grid = ModeGrid::for_ensemble(spec, s, 0.0)?;
    realization_on(&grid, spec, mu, realization_index)
}

/// Draws a realization on a caller-provided grid (shared across an ensemble).
pub fn sample_pair_fields_on(
    grid: &Arc<ModeGrid>,
    spec: &EnsembleSpec,
    mu: &MutualCoherence,
    realization_index: u64,
) -> Result<FieldRealization> {
    spec.validate()?;
    realization_on(grid, spec, mu, realization_index)
}

/// The frozen-diffuser field: realization 0, to be reused at every scan
/// point. Requires `decorrelation_realizations_per_point = 1`; scanning
/// re-evaluates `mu` against the same underlying draws.
pub fn frozen_speckle_field(
    spec: &EnsembleSpec,
    s: &SpectrumFunction,
    mu: &MutualCoherence,
) -> Result<FieldRealization> {
    spec.validate()?;
    if spec.decorrelation_realizations_per_point != 1 {
        return Err(Error::InvalidInput(format!(
            "frozen speckle requires decorrelation_realizations_per_point = 1, got {}",
            spec.decorrelation_realizations_per_point
        )));
    }
    let grid = ModeGrid::for_ensemble(spec, s, 0.0)?;
    realization_on(&grid, spec, mu, 0)
}

/// Phasor-sum variant of [`sample_pair_fields`] (fidelity mode). Uses
/// `spec.n_sub_sources` discrete sub-sources; `vcz_argument` sets the
/// geometric phase spread between A and B (0 means A = B statistics).
pub fn sample_pair_fields_phasor(
    spec: &EnsembleSpec,
    s: &SpectrumFunction,
    vcz_argument: f64,
    realization_index: u64,
) -> Result<FieldRealization> {
    spec.validate()?;
    let n_sub = spec.n_sub_sources.ok_or_else(|| {
        Error::InvalidInput("phasor-sum sampling needs n_sub_sources set".to_string())
    })?;
    if realization_index >= spec.n_realizations {
        return Err(Error::RealizationOutOfRange {
            index: realization_index,
            n: spec.n_realizations,
        });
    }
    let grid = ModeGrid::for_ensemble(spec, s, 0.0)?;
    let (modes_a, modes_b) = draw_phasor_modes(
        spec.master_seed,
        realization_index,
        grid.freqs().len(),
        n_sub,
        vcz_argument,
    );
    let n_t = grid.times().len();
    let mut samples_a = vec![Complex64::new(0.0, 0.0); n_t];
    let mut samples_b = vec![Complex64::new(0.0, 0.0); n_t];
    grid.synthesize_into(&modes_a, 0.0, &mut samples_a);
    grid.synthesize_into(&modes_b, 0.0, &mut samples_b);
    Ok(FieldRealization {
        index: realization_index,
        grid,
        modes_a,
        modes_b,
        samples_a,
        samples_b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spectrum() -> SpectrumFunction {
        SpectrumFunction::gaussian(2.354e15, 345e-15).unwrap()
    }

    fn cw_spec(n: u64, seed: u64) -> EnsembleSpec {
        EnsembleSpec::cw(n, seed)
    }

    #[test]
    fn validates_ensemble_parameters() {
        let mut spec = cw_spec(0, 1);
        assert!(spec.validate().is_err());
        spec.n_realizations = 10;
        assert!(spec.validate().is_ok());

        let mut pulsed = EnsembleSpec::pulsed(10, 1, 200e-15);
        assert!(pulsed.validate().is_ok());
        pulsed.pulse_fwhm = None;
        assert!(pulsed.validate().is_err());

        let mut phasor = cw_spec(10, 1);
        phasor.n_sub_sources = Some(1);
        assert!(phasor.validate().is_err());
    }

    #[test]
    fn grid_resolution_and_normalization() {
        let s = spectrum();
        let grid = ModeGrid::cw(&s, 0.0).unwrap();
        assert!(grid.dt() <= s.coherence_time() / 8.0 * (1.0 + 1e-12));
        assert!(grid.period() >= 8.0 * s.coherence_time());
        let total: f64 = grid.weights().iter().map(|w| w * w).sum();
        assert!((total - 1.0).abs() < 1e-12);
        // Discrete coherence envelope reproduces the analytic one.
        for &k in &[0.0, 0.5, 1.0, 2.0, 3.0] {
            let tau = k * s.coherence_time();
            let want = s.envelope_at(tau).value.re;
            let got = grid.coherence_envelope(tau);
            assert!(
                (got - want).abs() < 1e-6,
                "tau = {k} tau_c: {got} vs {want}"
            );
        }
    }

    #[test]
    fn realizations_are_deterministic_and_independent_of_mu_draws() {
        let s = spectrum();
        let spec = cw_spec(100, 42);
        let mu0 = MutualCoherence::none();
        let r1 = sample_pair_fields(&spec, &s, &mu0, 7).unwrap();
        let r2 = sample_pair_fields(&spec, &s, &mu0, 7).unwrap();
        assert_eq!(r1.samples_a(), r2.samples_a());
        assert_eq!(r1.samples_b(), r2.samples_b());

        // Same seed, different mu: A-side draws identical (mu only mixes B).
        let mu1 = MutualCoherence::new(num_complex::Complex64::new(0.6, 0.0)).unwrap();
        let r3 = sample_pair_fields(&spec, &s, &mu1, 7).unwrap();
        assert_eq!(r1.modes_a(), r3.modes_a());
        assert_ne!(r1.modes_b(), r3.modes_b());
    }

    #[test]
    fn out_of_range_index_is_rejected() {
        let s = spectrum();
        let spec = cw_spec(5, 1);
        assert!(matches!(
            sample_pair_fields(&spec, &s, &MutualCoherence::none(), 5),
            Err(Error::RealizationOutOfRange { .. })
        ));
    }

    #[test]
    fn delayed_synthesis_matches_direct_evaluation() {
        let s = spectrum();
        let spec = cw_spec(10, 3);
        let r = sample_pair_fields(&spec, &s, &MutualCoherence::none(), 2).unwrap();
        let delta = 0.37 * s.coherence_time();
        let delayed = r.samples_a_delayed(delta);
        let grid = r.grid();
        let carrier = Complex64::from_polar(1.0, wrap_phase(grid.omega0() * delta));
        for (j, t) in grid.times().iter().enumerate().step_by(17) {
            let direct = grid.value_at(r.modes_a(), t - delta) * carrier;
            assert!(
                (delayed[j] - direct).norm() < 1e-10,
                "t = {t}: {:?} vs {:?}",
                delayed[j],
                direct
            );
        }
    }

    /// Ensemble self-tests: circular statistics and the intensity-correlation
    /// (Siegert) relation 1 + |mu|^2, checked at 3 sigma.
    #[test]
    fn circularity_and_siegert_relation() {
        let s = spectrum();
        let n: u64 = 3000;
        for &mu_val in &[0.0, 0.5, 1.0] {
            let spec = cw_spec(n, 11);
            let mu = MutualCoherence::new(Complex64::new(mu_val, 0.0)).unwrap();
            let grid = ModeGrid::cw(&s, 0.0).unwrap();
            // Sample at a fixed instant across the ensemble.
            let t0 = 0.0;
            let mut sum_e = Complex64::new(0.0, 0.0);
            let mut sum_e2 = Complex64::new(0.0, 0.0);
            let mut sum_ia = 0.0;
            let mut sum_ib = 0.0;
            let mut sum_iaib = 0.0;
            let mut sum_iaib_sq = 0.0;
            for i in 0..n {
                let r = sample_pair_fields_on(&grid, &spec, &mu, i).unwrap();
                let ea = grid.value_at(r.modes_a(), t0);
                let eb = grid.value_at(r.modes_b(), t0);
                sum_e += ea;
                sum_e2 += ea * ea;
                let (ia, ib) = (ea.norm_sqr(), eb.norm_sqr());
                sum_ia += ia;
                sum_ib += ib;
                sum_iaib += ia * ib;
                sum_iaib_sq += (ia * ib) * (ia * ib);
            }
            let nf = n as f64;
            // Circularity: <E> = 0 and <E^2> = 0 within 3 sigma (Var ~ 1/N).
            let sigma_mean = (1.0 / nf).sqrt();
            assert!(sum_e.norm() / nf < 3.0 * sigma_mean, "<E> too large");
            assert!(
                sum_e2.norm() / nf < 3.0 * 1.5 * sigma_mean,
                "<E^2> too large"
            );

            let g2 = (sum_iaib / nf) / ((sum_ia / nf) * (sum_ib / nf));
            let var = sum_iaib_sq / nf - (sum_iaib / nf).powi(2);
            let sigma_g2 = (var / nf).sqrt() / ((sum_ia / nf) * (sum_ib / nf));
            let want = 1.0 + mu_val * mu_val;
            assert!(
                (g2 - want).abs() < 3.0 * sigma_g2.max(1e-3),
                "mu = {mu_val}: g2 = {g2}, want {want} (sigma {sigma_g2})"
            );
        }
    }

    #[test]
    fn frozen_speckle_requires_single_realization_mode() {
        let s = spectrum();
        let mut spec = cw_spec(10, 5);
        assert!(frozen_speckle_field(&spec, &s, &MutualCoherence::none()).is_err());
        spec.decorrelation_realizations_per_point = 1;
        let a = frozen_speckle_field(&spec, &s, &MutualCoherence::none()).unwrap();
        let b = frozen_speckle_field(&spec, &s, &MutualCoherence::full()).unwrap();
        // Same underlying draws regardless of mu.
        assert_eq!(a.modes_a(), b.modes_a());
    }

    /// Phasor-sum statistics: g2(0) for a sum of n unit phasors is 2 - 1/n.
    #[test]
    fn phasor_sum_intensity_statistics() {
        let s = spectrum();
        for &n_sub in &[2u32, 20] {
            let mut spec = cw_spec(4000, 17);
            spec.n_sub_sources = Some(n_sub);
            let mut sum_i = 0.0;
            let mut sum_i2 = 0.0;
            let mut sum_i2_sq = 0.0;
            for i in 0..spec.n_realizations {
                let r = sample_pair_fields_phasor(&spec, &s, 0.0, i).unwrap();
                let ia = r.grid().value_at(r.modes_a(), 0.0).norm_sqr();
                sum_i += ia;
                sum_i2 += ia * ia;
                sum_i2_sq += ia.powi(4);
            }
            let nf = spec.n_realizations as f64;
            let mean = sum_i / nf;
            let g2 = (sum_i2 / nf) / (mean * mean);
            let var = sum_i2_sq / nf - (sum_i2 / nf).powi(2);
            let sigma = (var / nf).sqrt() / (mean * mean);
            let want = 2.0 - 1.0 / n_sub as f64;
            assert!(
                (g2 - want).abs() < 3.0 * sigma.max(5e-3),
                "n_sub = {n_sub}: g2 = {g2}, want {want}, sigma {sigma}"
            );
        }
    }

    /// The empirical A-B correlation of phasor fields converges to the Airy
    /// coherence 2 J1(x)/x set by the source geometry.
    #[test]
    fn phasor_sum_reproduces_airy_coherence() {
        let s = spectrum();
        for &x in &[0.0, 1.0, 2.5] {
            let mut spec = cw_spec(3000, 23);
            spec.n_sub_sources = Some(40);
            let mut corr = Complex64::new(0.0, 0.0);
            let mut norm = 0.0;
            for i in 0..spec.n_realizations {
                let r = sample_pair_fields_phasor(&spec, &s, x, i).unwrap();
                let ea = r.grid().value_at(r.modes_a(), 0.0);
                let eb = r.grid().value_at(r.modes_b(), 0.0);
                corr += ea.conj() * eb;
                norm += ea.norm_sqr();
            }
            let got = (corr / norm).re;
            let want = crate::coherence::airy_mu(x);
            assert!(
                (got - want).abs() < 0.06,
                "x = {x}: empirical mu {got}, Airy {want}"
            );
        }
    }
}
