//! Experiment-shaped layer: configuration files, scan drivers, dip fitting.

pub mod config;
pub mod fit;
pub mod scan;

pub use config::{parse_bench_config, BenchConfig, Engine, ScanAxis};
pub use fit::{fit_dip, FitResult};
pub use scan::{
    add_counting_noise, run_compare, run_dip_scan, run_hbt_scan, run_mach_zehnder, CompareResult,
    MzScan, ScanResult,
};
