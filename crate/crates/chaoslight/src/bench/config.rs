//! Experiment configuration: a small line-oriented `[section] key = value`
//! format, stored in the file's native units (fs, mm, nm) so that
//! parse(serialize(cfg)) round-trips exactly, with SI accessors for the
//! engines.

use sha2::{Digest, Sha256};

use crate::error::{ConfigError, Error, Result};
use crate::field::EmissionMode;

/// Which computational route a scan should use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Quantum,
    ClassicalMc,
    ClassicalLedger,
}

impl Engine {
    #[must_use]
    pub fn as_str(&self) -> &'static str {
        match self {
            Engine::Quantum => "quantum",
            Engine::ClassicalMc => "classical-mc",
            Engine::ClassicalLedger => "classical-ledger",
        }
    }
}

impl std::str::FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quantum" => Ok(Engine::Quantum),
            "classical-mc" => Ok(Engine::ClassicalMc),
            "classical-ledger" => Ok(Engine::ClassicalLedger),
            other => Err(Error::InvalidInput(format!(
                "unknown engine '{other}' (expected quantum, classical-mc, or classical-ledger)"
            ))),
        }
    }
}

/// What the scan sweeps: the arm delay or the transverse tip separation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanAxis {
    /// Arm delay, configured in femtoseconds.
    Longitudinal,
    /// Tip separation, configured in micrometers.
    Transverse,
}

impl ScanAxis {
    fn as_str(&self) -> &'static str {
        match self {
            ScanAxis::Longitudinal => "longitudinal",
            ScanAxis::Transverse => "transverse",
        }
    }

    fn unit_suffix(&self) -> &'static str {
        match self {
            ScanAxis::Longitudinal => "fs",
            ScanAxis::Transverse => "um",
        }
    }

    /// Scale from the native scan unit to SI.
    fn to_si(self) -> f64 {
        match self {
            ScanAxis::Longitudinal => 1e-15,
            ScanAxis::Transverse => 1e-6,
        }
    }
}

/// Full experiment description. Fields hold the file's native units;
/// accessor methods convert to SI.
#[derive(Debug, Clone)]
pub struct BenchConfig {
    // [source]
    pub emission_mode: EmissionMode,
    pub rep_rate_mhz: f64,
    pub pulse_fwhm_fs: f64,
    pub diameter_mm: f64,
    // [filter]
    pub tau_c_fs: f64,
    pub lambda0_nm: f64,
    /// True when `lambda0_nm` came from the built-in default rather than the
    /// file. Not part of equality or the config hash — it only drives a
    /// origin note in outputs.
    pub lambda0_assumed: bool,
    // [geometry]
    pub d_a_mm: f64,
    pub d_b_mm: f64,
    pub tip_sep_lc: f64,
    pub bs2_present: bool,
    // [scan]
    pub axis: ScanAxis,
    pub from: f64,
    pub to: f64,
    pub step: f64,
    // [counting]
    pub integration_realizations: u64,
    pub trials: u64,
    pub seed: u64,
    pub gamma: f64,
}

impl PartialEq for BenchConfig {
    fn eq(&self, other: &Self) -> bool {
        self.emission_mode == other.emission_mode
            && self.rep_rate_mhz == other.rep_rate_mhz
            && self.pulse_fwhm_fs == other.pulse_fwhm_fs
            && self.diameter_mm == other.diameter_mm
            && self.tau_c_fs == other.tau_c_fs
            && self.lambda0_nm == other.lambda0_nm
            && self.d_a_mm == other.d_a_mm
            && self.d_b_mm == other.d_b_mm
            && self.tip_sep_lc == other.tip_sep_lc
            && self.bs2_present == other.bs2_present
            && self.axis == other.axis
            && self.from == other.from
            && self.to == other.to
            && self.step == other.step
            && self.integration_realizations == other.integration_realizations
            && self.trials == other.trials
            && self.seed == other.seed
            && self.gamma == other.gamma
    }
}

impl BenchConfig {
    /// The nominal bench: 4.5 mm source at 200 mm, 800 nm, tips 40 coherence
    /// lengths apart, recombiner in place, with a delay scan over +-6 tau_c.
    #[must_use]
    pub fn nominal(emission_mode: EmissionMode) -> Self {
        let tau_c_fs = 345.0;
        BenchConfig {
            emission_mode,
            rep_rate_mhz: 78.0,
            pulse_fwhm_fs: 200.0,
            diameter_mm: 4.5,
            tau_c_fs,
            lambda0_nm: 800.0,
            lambda0_assumed: true,
            d_a_mm: 200.0,
            d_b_mm: 200.0,
            tip_sep_lc: 40.0,
            bs2_present: true,
            axis: ScanAxis::Longitudinal,
            from: -6.0 * tau_c_fs,
            to: 6.0 * tau_c_fs,
            step: tau_c_fs / 4.0,
            integration_realizations: 1000,
            trials: 10000,
            seed: 1,
            gamma: 1.0,
        }
    }

    // ---- SI accessors ----

    #[must_use]
    pub fn tau_c(&self) -> f64 {
        self.tau_c_fs * 1e-15
    }

    #[must_use]
    pub fn lambda0(&self) -> f64 {
        self.lambda0_nm * 1e-9
    }

    /// Carrier angular frequency `2 pi c / lambda0`, rad/s.
    #[must_use]
    pub fn omega0(&self) -> f64 {
        std::f64::consts::TAU * crate::spectral::SPEED_OF_LIGHT / self.lambda0()
    }

    #[must_use]
    pub fn source_diameter(&self) -> f64 {
        self.diameter_mm * 1e-3
    }

    #[must_use]
    pub fn distance_a(&self) -> f64 {
        self.d_a_mm * 1e-3
    }

    #[must_use]
    pub fn distance_b(&self) -> f64 {
        self.d_b_mm * 1e-3
    }

    #[must_use]
    pub fn pulse_fwhm(&self) -> f64 {
        self.pulse_fwhm_fs * 1e-15
    }

    /// Transverse coherence length at the collection plane, m.
    #[must_use]
    pub fn transverse_coherence_length(&self) -> f64 {
        self.lambda0() / (self.source_diameter() / self.distance_a())
    }

    /// Tip separation in meters.
    #[must_use]
    pub fn tip_separation(&self) -> f64 {
        self.tip_sep_lc * self.transverse_coherence_length()
    }

    /// Scan positions in SI units (seconds or meters by axis).
    #[must_use]
    pub fn scan_grid(&self) -> Vec<f64> {
        let n = ((self.to - self.from) / self.step + 0.5).floor() as usize + 1;
        let scale = self.axis.to_si();
        (0..n)
            .map(|i| (self.from + i as f64 * self.step) * scale)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let positive: [(&str, f64); 8] = [
            ("source.rep_rate_mhz", self.rep_rate_mhz),
            ("source.pulse_fwhm_fs", self.pulse_fwhm_fs),
            ("source.diameter_mm", self.diameter_mm),
            ("filter.tau_c_fs", self.tau_c_fs),
            ("filter.lambda0_nm", self.lambda0_nm),
            ("geometry.d_a_mm", self.d_a_mm),
            ("geometry.d_b_mm", self.d_b_mm),
            ("scan.step", self.step),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if !(self.tip_sep_lc.is_finite() && self.tip_sep_lc >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "geometry.tip_sep_lc must be non-negative, got {}",
                self.tip_sep_lc
            )));
        }
        if !(self.from.is_finite() && self.to.is_finite() && self.from <= self.to) {
            return Err(Error::InvalidInput(format!(
                "scan range [{}, {}] is not ordered",
                self.from, self.to
            )));
        }
        let n_points = (self.to - self.from) / self.step;
        if n_points > 2e5 {
            return Err(Error::InvalidInput(format!(
                "scan would have {} points; reduce the range or enlarge the step",
                n_points as u64
            )));
        }
        if !(0.0..=1.0).contains(&self.gamma) || !self.gamma.is_finite() {
            return Err(Error::InvalidInput(format!(
                "counting.gamma must lie in [0, 1], got {}",
                self.gamma
            )));
        }
        if self.integration_realizations == 0 {
            return Err(Error::InvalidInput(
                "counting.integration_realizations must be at least 1".to_string(),
            ));
        }
        if self.trials == 0 {
            return Err(Error::InvalidInput(
                "counting.trials must be at least 1".to_string(),
            ));
        }
        Ok(())
    }

    /// Canonical text form: stable section and key order, shortest
    /// round-trip float formatting. The config hash is taken over this.
    #[must_use]
    pub fn to_config_string(&self) -> String {
        let mode = match self.emission_mode {
            EmissionMode::Cw => "cw",
            EmissionMode::Pulsed => "pulsed",
        };
        let sfx = self.axis.unit_suffix();
        format!(
            "[source]\n\
             emission_mode = {mode}\n\
             rep_rate_mhz = {}\n\
             pulse_fwhm_fs = {}\n\
             diameter_mm = {}\n\
             \n\
             [filter]\n\
             tau_c_fs = {}\n\
             lambda0_nm = {}\n\
             \n\
             [geometry]\n\
             d_a_mm = {}\n\
             d_b_mm = {}\n\
             tip_sep_lc = {}\n\
             bs2_present = {}\n\
             \n\
             [scan]\n\
             axis = {}\n\
             from_{sfx} = {}\n\
             to_{sfx} = {}\n\
             step_{sfx} = {}\n\
             \n\
             [counting]\n\
             integration_realizations = {}\n\
             trials = {}\n\
             seed = {}\n\
             gamma = {}\n",
            self.rep_rate_mhz,
            self.pulse_fwhm_fs,
            self.diameter_mm,
            self.tau_c_fs,
            self.lambda0_nm,
            self.d_a_mm,
            self.d_b_mm,
            self.tip_sep_lc,
            self.bs2_present,
            self.axis.as_str(),
            self.from,
            self.to,
            self.step,
            self.integration_realizations,
            self.trials,
            self.seed,
            self.gamma,
        )
    }

    /// First 16 hex digits of the SHA-256 of the canonical form.
    #[must_use]
    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.to_config_string().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

struct Parser<'a> {
    section: Option<&'a str>,
    seen: Vec<String>,
}

fn err_at(line: usize, path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config(ConfigError {
        line: Some(line),
        path: path.into(),
        message: message.into(),
    })
}

fn err_missing(path: &str) -> Error {
    Error::Config(ConfigError {
        line: None,
        path: path.to_string(),
        message: "required key is missing".to_string(),
    })
}

/// Parses the `[section] key = value` experiment format. Unknown sections or
/// keys, duplicates, and malformed values are errors with line positions;
/// missing required keys are errors naming the key.
pub fn parse_bench_config(text: &str) -> Result<BenchConfig> {
    let mut p = Parser {
        section: None,
        seen: Vec::new(),
    };

    // Raw captured values; units-suffixed scan keys are resolved afterwards.
    let mut emission_mode: Option<EmissionMode> = None;
    let mut rep_rate_mhz = 78.0;
    let mut pulse_fwhm_fs = 200.0;
    let mut diameter_mm = 4.5;
    let mut tau_c_fs: Option<f64> = None;
    let mut lambda0_nm: Option<f64> = None;
    let mut d_a_mm = 200.0;
    let mut d_b_mm = 200.0;
    let mut tip_sep_lc = 40.0;
    let mut bs2_present = true;
    let mut axis: Option<ScanAxis> = None;
    let mut from_fs: Option<f64> = None;
    let mut to_fs: Option<f64> = None;
    let mut step_fs: Option<f64> = None;
    let mut from_um: Option<f64> = None;
    let mut to_um: Option<f64> = None;
    let mut step_um: Option<f64> = None;
    let mut integration_realizations = 1000u64;
    let mut trials = 10000u64;
    let mut seed = 1u64;
    let mut gamma = 1.0;

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| err_at(lineno, line, "unterminated section header"))?
                .trim();
            match name {
                "source" | "filter" | "geometry" | "scan" | "counting" => {
                    p.section = Some(match name {
                        "source" => "source",
                        "filter" => "filter",
                        "geometry" => "geometry",
                        "scan" => "scan",
                        _ => "counting",
                    });
                }
                other => {
                    return Err(err_at(lineno, format!("[{other}]"), "unknown section"));
                }
            }
            continue;
        }
        let section = p
            .section
            .ok_or_else(|| err_at(lineno, line, "key appears before any [section] header"))?;
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err_at(lineno, format!("[{section}]"), "expected 'key = value'"))?;
        let key = key.trim();
        let value = value.trim();
        let path = format!("[{section}].{key}");
        if p.seen.contains(&path) {
            return Err(err_at(lineno, path, "duplicate key"));
        }
        p.seen.push(path.clone());

        let parse_f64 = |v: &str| -> Result<f64> {
            v.parse::<f64>()
                .map_err(|_| err_at(lineno, path.clone(), format!("not a number: '{v}'")))
        };
        let parse_u64 = |v: &str| -> Result<u64> {
            v.parse::<u64>()
                .map_err(|_| err_at(lineno, path.clone(), format!("not a whole number: '{v}'")))
        };
        let parse_bool = |v: &str| -> Result<bool> {
            match v {
                "true" => Ok(true),
                "false" => Ok(false),
                _ => Err(err_at(
                    lineno,
                    path.clone(),
                    format!("expected true or false, got '{v}'"),
                )),
            }
        };

        match (section, key) {
            ("source", "emission_mode") => {
                emission_mode = Some(match value {
                    "cw" => EmissionMode::Cw,
                    "pulsed" => EmissionMode::Pulsed,
                    other => {
                        return Err(err_at(
                            lineno,
                            path,
                            format!("expected cw or pulsed, got '{other}'"),
                        ))
                    }
                });
            }
            ("source", "rep_rate_mhz") => rep_rate_mhz = parse_f64(value)?,
            ("source", "pulse_fwhm_fs") => pulse_fwhm_fs = parse_f64(value)?,
            ("source", "diameter_mm") => diameter_mm = parse_f64(value)?,
            ("filter", "tau_c_fs") => tau_c_fs = Some(parse_f64(value)?),
            ("filter", "lambda0_nm") => lambda0_nm = Some(parse_f64(value)?),
            ("geometry", "d_a_mm") => d_a_mm = parse_f64(value)?,
            ("geometry", "d_b_mm") => d_b_mm = parse_f64(value)?,
            ("geometry", "tip_sep_lc") => tip_sep_lc = parse_f64(value)?,
            ("geometry", "bs2_present") => bs2_present = parse_bool(value)?,
            ("scan", "axis") => {
                axis = Some(match value {
                    "longitudinal" => ScanAxis::Longitudinal,
                    "transverse" => ScanAxis::Transverse,
                    other => {
                        return Err(err_at(
                            lineno,
                            path,
                            format!("expected longitudinal or transverse, got '{other}'"),
                        ))
                    }
                });
            }
            ("scan", "from_fs") => from_fs = Some(parse_f64(value)?),
            ("scan", "to_fs") => to_fs = Some(parse_f64(value)?),
            ("scan", "step_fs") => step_fs = Some(parse_f64(value)?),
            ("scan", "from_um") => from_um = Some(parse_f64(value)?),
            ("scan", "to_um") => to_um = Some(parse_f64(value)?),
            ("scan", "step_um") => step_um = Some(parse_f64(value)?),
            ("counting", "integration_realizations") => {
                integration_realizations = parse_u64(value)?
            }
            ("counting", "trials") => trials = parse_u64(value)?,
            ("counting", "seed") => seed = parse_u64(value)?,
            ("counting", "gamma") => gamma = parse_f64(value)?,
            _ => return Err(err_at(lineno, path, "unknown key")),
        }
    }

    let emission_mode = emission_mode.ok_or_else(|| err_missing("[source].emission_mode"))?;
    let tau_c_fs = tau_c_fs.ok_or_else(|| err_missing("[filter].tau_c_fs"))?;
    let axis = axis.ok_or_else(|| err_missing("[scan].axis"))?;
    let (from, to, step) = match axis {
        ScanAxis::Longitudinal => {
            for (k, v) in [("from_um", from_um), ("to_um", to_um), ("step_um", step_um)] {
                if v.is_some() {
                    return Err(Error::Config(ConfigError {
                        line: None,
                        path: format!("[scan].{k}"),
                        message: "scan axis is longitudinal; use the _fs keys".to_string(),
                    }));
                }
            }
            (
                from_fs.ok_or_else(|| err_missing("[scan].from_fs"))?,
                to_fs.ok_or_else(|| err_missing("[scan].to_fs"))?,
                step_fs.ok_or_else(|| err_missing("[scan].step_fs"))?,
            )
        }
        ScanAxis::Transverse => {
            for (k, v) in [("from_fs", from_fs), ("to_fs", to_fs), ("step_fs", step_fs)] {
                if v.is_some() {
                    return Err(Error::Config(ConfigError {
                        line: None,
                        path: format!("[scan].{k}"),
                        message: "scan axis is transverse; use the _um keys".to_string(),
                    }));
                }
            }
            (
                from_um.ok_or_else(|| err_missing("[scan].from_um"))?,
                to_um.ok_or_else(|| err_missing("[scan].to_um"))?,
                step_um.ok_or_else(|| err_missing("[scan].step_um"))?,
            )
        }
    };

    let cfg = BenchConfig {
        emission_mode,
        rep_rate_mhz,
        pulse_fwhm_fs,
        diameter_mm,
        tau_c_fs,
        lambda0_nm: lambda0_nm.unwrap_or(800.0),
        lambda0_assumed: lambda0_nm.is_none(),
        d_a_mm,
        d_b_mm,
        tip_sep_lc,
        bs2_present,
        axis,
        from,
        to,
        step,
        integration_realizations,
        trials,
        seed,
        gamma,
    };
    cfg.validate()?;
    Ok(cfg)
}
