//! `chaoslight` — runs the interferometry bench described by a config file
//! and writes deterministic CSV (plus a fit summary for delay scans).
//!
//! Exit codes: 0 success, 2 configuration/usage problems, 3 runtime
//! failures (unsupported regimes, I/O on outputs).

mod render;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use chaoslight::bench::{
    fit_dip, parse_bench_config, run_compare, run_dip_scan, run_hbt_scan, run_mach_zehnder,
    BenchConfig, Engine, ScanAxis,
};
use chaoslight::Error;

use render::Manifest;

#[derive(Parser)]
#[command(
    name = "chaoslight",
    version,
    about = "Chaotic-light interferometry bench: anti-correlation dip, intensity \
             correlation, and interferometric control scans"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    /// Two-photon amplitude closed form.
    Quantum,
    /// Stochastic-field Monte Carlo.
    ClassicalMc,
    /// Analytic term-by-term expansion of the classical rate.
    ClassicalLedger,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Engine {
        match e {
            EngineArg::Quantum => Engine::Quantum,
            EngineArg::ClassicalMc => Engine::ClassicalMc,
            EngineArg::ClassicalLedger => Engine::ClassicalLedger,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    Longitudinal,
    Transverse,
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment description file.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output CSV path (stdout when omitted).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Override the config's master seed.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Monte Carlo worker threads (default: all cores). Results are
    /// byte-identical for any value.
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
    /// Also write a gnuplot script next to the CSV (needs --out).
    #[arg(long)]
    plot: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Anti-correlation delay scan through the recombining splitter.
    Dip {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum, default_value_t = EngineArg::Quantum)]
        engine: EngineArg,
    },
    /// Intensity-correlation scan with the recombiner removed.
    Hbt {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum, default_value_t = EngineArg::ClassicalMc)]
        engine: EngineArg,
        /// Assert the scan axis; must match the config's [scan].axis.
        #[arg(long, value_enum)]
        axis: Option<AxisArg>,
    },
    /// Single-point interferometric control: first-order fringes and the
    /// joint-rate factorization check.
    Mz {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum, default_value_t = EngineArg::Quantum)]
        engine: EngineArg,
    },
    /// All three engines over one delay scan, with per-term diagnostics.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
    },
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Runtime(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        match e {
            Error::Config(_) | Error::InvalidInput(_) | Error::InvalidParameter { .. } => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn load_config(common: &CommonArgs) -> Result<BenchConfig, Failure> {
    let text = std::fs::read_to_string(&common.config).map_err(|e| {
        Failure::Usage(format!(
            "cannot read config {}: {e}",
            common.config.display()
        ))
    })?;
    let mut cfg = parse_bench_config(&text)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if common.plot && common.out.is_none() {
        return Err(Failure::Usage("--plot needs --out".to_string()));
    }
    Ok(cfg)
}

/// Runs `f` on a dedicated rayon pool when --threads was given; on the
/// global pool otherwise. The engines' ordered reductions make the result
/// identical either way.
fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> Result<T, Failure> + Send,
) -> Result<T, Failure> {
    match threads {
        None => f(),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Failure::Runtime(format!("cannot build thread pool: {e}")))?;
            pool.install(f)
        }
    }
}

struct Outputs {
    csv: String,
    /// (suffix appended to the CSV path, content)
    sidecars: Vec<(&'static str, String)>,
    notes: Vec<String>,
}

fn write_outputs(common: &CommonArgs, outputs: Outputs, elapsed_s: f64) -> Result<(), Failure> {
    match &common.out {
        Some(path) => {
            std::fs::write(path, &outputs.csv)
                .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))?;
            let mut written = vec![path.display().to_string()];
            for (suffix, content) in &outputs.sidecars {
                let side = sidecar_path(path, suffix);
                std::fs::write(&side, content).map_err(|e| {
                    Failure::Runtime(format!("cannot write {}: {e}", side.display()))
                })?;
                written.push(side.display().to_string());
            }
            eprintln!("wrote {} (wall_time_s={elapsed_s:.3})", written.join(", "));
        }
        None => {
            print!("{}", outputs.csv);
            for (suffix, content) in &outputs.sidecars {
                eprintln!("--- {suffix} ---");
                eprintln!("{}", content.trim_end());
            }
            eprintln!("(wall_time_s={elapsed_s:.3})");
        }
    }
    for note in &outputs.notes {
        eprintln!("{note}");
    }
    Ok(())
}

fn sidecar_path(csv: &Path, suffix: &str) -> PathBuf {
    let mut name = csv.file_name().unwrap_or_default().to_os_string();
    name.push(suffix);
    csv.with_file_name(name)
}

fn manifest<'a>(command: &'a str, cfg: &'a BenchConfig, engine_tag: &'a str) -> Manifest<'a> {
    Manifest {
        command,
        config_hash: "",
        master_seed: cfg.seed,
        engine_tag,
        lambda0_assumed: cfg.lambda0_assumed,
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Dip { common, engine } => {
            let cfg = load_config(&common)?;
            let start = Instant::now();
            let scan = with_threads(common.threads, || {
                run_dip_scan(&cfg, engine.into()).map_err(Failure::from)
            })?;
            let mut m = manifest("dip", &cfg, scan.engine.as_str());
            m.config_hash = &scan.config_hash;
            let csv = render::render_dip(&m, &scan);

            // Fit summary: grid converted to fs so the width reads in fs.
            let grid_fs: Vec<f64> = scan.grid.iter().map(|d| d * 1e15).collect();
            let fit_json = match fit_dip(&grid_fs, &scan.values, &scan.stderr) {
                Ok(fit) => serde_json::to_string_pretty(&fit)
                    .map_err(|e| Failure::Runtime(format!("cannot encode fit summary: {e}")))?,
                Err(e) => format!("{{\n  \"error\": \"{e}\"\n}}"),
            };

            let mut sidecars = vec![(".fit.json", fit_json)];
            if common.plot {
                let name = csv_name(&common);
                sidecars.push((
                    ".gp",
                    render::plot_script(&name, "dip", ScanAxis::Longitudinal),
                ));
            }
            write_outputs(
                &common,
                Outputs {
                    csv,
                    sidecars,
                    notes: vec![],
                },
                start.elapsed().as_secs_f64(),
            )
        }
        Command::Hbt {
            common,
            engine,
            axis,
        } => {
            let cfg = load_config(&common)?;
            if let Some(flag) = axis {
                let want = match flag {
                    AxisArg::Longitudinal => ScanAxis::Longitudinal,
                    AxisArg::Transverse => ScanAxis::Transverse,
                };
                if cfg.axis != want {
                    return Err(Failure::Usage(format!(
                        "--axis {} contradicts the config's [scan].axis; \
                         fix one of them",
                        match flag {
                            AxisArg::Longitudinal => "longitudinal",
                            AxisArg::Transverse => "transverse",
                        }
                    )));
                }
            }
            let start = Instant::now();
            let scan = with_threads(common.threads, || {
                run_hbt_scan(&cfg, engine.into()).map_err(Failure::from)
            })?;
            let mut m = manifest("hbt", &cfg, scan.engine.as_str());
            m.config_hash = &scan.config_hash;
            let csv = render::render_hbt(&m, &scan, cfg.axis);
            let mut sidecars = Vec::new();
            if common.plot {
                let name = csv_name(&common);
                sidecars.push((".gp", render::plot_script(&name, "hbt", cfg.axis)));
            }
            write_outputs(
                &common,
                Outputs {
                    csv,
                    sidecars,
                    notes: vec![],
                },
                start.elapsed().as_secs_f64(),
            )
        }
        Command::Mz { common, engine } => {
            let cfg = load_config(&common)?;
            let start = Instant::now();
            let mz = with_threads(common.threads, || {
                run_mach_zehnder(&cfg, engine.into()).map_err(Failure::from)
            })?;
            let mut m = manifest("mz", &cfg, mz.engine.as_str());
            m.config_hash = &mz.config_hash;
            let csv = render::render_mz(&m, &mz);
            let mut sidecars = Vec::new();
            if common.plot {
                let name = csv_name(&common);
                sidecars.push((
                    ".gp",
                    render::plot_script(&name, "mz", ScanAxis::Longitudinal),
                ));
            }
            let mut note = String::new();
            let _ = write!(
                note,
                "visibility={:.6} max_factorization_residual={:.3e}",
                mz.visibility, mz.max_residual
            );
            write_outputs(
                &common,
                Outputs {
                    csv,
                    sidecars,
                    notes: vec![note],
                },
                start.elapsed().as_secs_f64(),
            )
        }
        Command::Compare { common } => {
            let cfg = load_config(&common)?;
            let start = Instant::now();
            let cmp = with_threads(common.threads, || run_compare(&cfg).map_err(Failure::from))?;
            let mut m = manifest("compare", &cfg, "quantum+classical-ledger+classical-mc");
            m.config_hash = &cmp.quantum.config_hash;
            let csv = render::render_compare(&m, &cmp);
            let mut sidecars = Vec::new();
            if common.plot {
                let name = csv_name(&common);
                sidecars.push((
                    ".gp",
                    render::plot_script(&name, "compare", ScanAxis::Longitudinal),
                ));
            }
            write_outputs(
                &common,
                Outputs {
                    csv,
                    sidecars,
                    notes: vec![],
                },
                start.elapsed().as_secs_f64(),
            )
        }
    }
}

/// CSV file name as referenced from the gnuplot script (same directory).
fn csv_name(common: &CommonArgs) -> String {
    common
        .out
        .as_ref()
        .and_then(|p| p.file_name())
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scan.csv".to_string())
}
