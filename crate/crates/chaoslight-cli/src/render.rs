//! Deterministic text rendering: CSV with a `# key=value` manifest header,
//! and companion gnuplot scripts. Everything here is pure string building so
//! outputs are byte-stable for identical inputs regardless of thread count.

use chaoslight::bench::{CompareResult, MzScan, ScanAxis, ScanResult};

/// Run metadata stamped into every CSV. Wall time deliberately stays out of
/// the file (it would break byte-for-byte reproducibility); the CLI reports
/// it on stderr instead.
pub struct Manifest<'a> {
    pub command: &'a str,
    pub config_hash: &'a str,
    pub master_seed: u64,
    pub engine_tag: &'a str,
    pub lambda0_assumed: bool,
}

/// Nine significant digits, scientific: enough to round-trip visual
/// comparisons without dragging full f64 noise into diffs.
fn num(v: f64) -> String {
    format!("{v:.8e}")
}

fn push_manifest(out: &mut String, m: &Manifest) {
    out.push_str(&format!("# command={}\n", m.command));
    out.push_str(&format!("# config_hash={}\n", m.config_hash));
    out.push_str(&format!("# master_seed={}\n", m.master_seed));
    out.push_str(&format!("# engine_tag={}\n", m.engine_tag));
    out.push_str(&format!("# tool_version={}\n", env!("CARGO_PKG_VERSION")));
    if m.lambda0_assumed {
        out.push_str("# lambda0_source=assumed-default-800nm\n");
    }
}

pub fn render_dip(m: &Manifest, scan: &ScanResult) -> String {
    let mut out = String::new();
    push_manifest(&mut out, m);
    out.push_str("delta_fs,rate,stderr,n\n");
    for i in 0..scan.grid.len() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            num(scan.grid[i] * 1e15),
            num(scan.values[i]),
            num(scan.stderr[i]),
            scan.n_samples
        ));
    }
    out
}

pub fn render_hbt(m: &Manifest, scan: &ScanResult, axis: ScanAxis) -> String {
    let mut out = String::new();
    push_manifest(&mut out, m);
    let (col, scale) = match axis {
        ScanAxis::Transverse => ("dx_um", 1e6),
        ScanAxis::Longitudinal => ("delta_fs", 1e15),
    };
    out.push_str(&format!("{col},g2,stderr,n\n"));
    for i in 0..scan.grid.len() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            num(scan.grid[i] * scale),
            num(scan.values[i]),
            num(scan.stderr[i]),
            scan.n_samples
        ));
    }
    out
}

pub fn render_mz(m: &Manifest, mz: &MzScan) -> String {
    let mut out = String::new();
    push_manifest(&mut out, m);
    out.push_str(&format!("# visibility={}\n", num(mz.visibility)));
    out.push_str(&format!(
        "# max_factorization_residual={}\n",
        num(mz.max_residual)
    ));
    out.push_str("delta_fs,singles1,singles2,joint,factorization_residual\n");
    for p in &mz.points {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            num(p.delta * 1e15),
            num(p.singles_1),
            num(p.singles_2),
            num(p.joint),
            num(p.residual)
        ));
    }
    out
}

pub fn render_compare(m: &Manifest, cmp: &CompareResult) -> String {
    let mut out = String::new();
    push_manifest(&mut out, m);
    // Term-by-term diagnostics: sampled expansion terms against their
    // analytic values, with a 3-sigma verdict per term. The curves below
    // stay as computed; disagreement between routes is data, not an error.
    for tc in &cmp.terms {
        let est = tc.estimate.ledger.named();
        let sig = tc.estimate.stderr.named();
        let want = tc.analytic.named();
        for k in 0..est.len() {
            let (name, e) = est[k];
            let s = sig[k].1;
            let w = want[k].1;
            let ok = (e - w).abs() <= 3.0 * s;
            out.push_str(&format!(
                "# term delta_fs={} name={} estimate={} stderr={} analytic={} within_3sigma={}\n",
                num(tc.estimate.delta * 1e15),
                name,
                num(e),
                num(s),
                num(w),
                ok
            ));
        }
    }
    out.push_str("delta_fs,quantum,classical_ledger,classical_mc,mc_stderr,n\n");
    for i in 0..cmp.quantum.grid.len() {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            num(cmp.quantum.grid[i] * 1e15),
            num(cmp.quantum.values[i]),
            num(cmp.ledger.values[i]),
            num(cmp.monte_carlo.values[i]),
            num(cmp.monte_carlo.stderr[i]),
            cmp.monte_carlo.n_samples
        ));
    }
    out
}

/// A minimal gnuplot script next to the CSV; no plotting dependency in the
/// tool itself.
pub fn plot_script(csv_name: &str, command: &str, axis: ScanAxis) -> String {
    let xlabel = match (command, axis) {
        ("hbt", ScanAxis::Transverse) => "detector separation (um)",
        _ => "delay (fs)",
    };
    let mut out = String::new();
    out.push_str("set datafile separator ','\n");
    out.push_str("set datafile commentschars '#'\n");
    out.push_str(&format!("set xlabel '{xlabel}'\n"));
    match command {
        "mz" => {
            out.push_str("set ylabel 'normalized rate'\n");
            out.push_str(&format!(
                "plot '{csv_name}' using 1:2 with lines title 'singles 1', \\\n     '' using 1:3 with lines title 'singles 2', \\\n     '' using 1:4 with lines title 'joint'\n"
            ));
        }
        "compare" => {
            out.push_str("set ylabel 'normalized coincidence rate'\n");
            out.push_str(&format!(
                "plot '{csv_name}' using 1:2 with lines title 'quantum', \\\n     '' using 1:3 with lines title 'classical ledger', \\\n     '' using 1:4:5 with yerrorbars title 'classical MC'\n"
            ));
        }
        "hbt" => {
            out.push_str("set ylabel 'g2'\n");
            out.push_str(&format!(
                "plot '{csv_name}' using 1:2:3 with yerrorbars title 'g2', '' using 1:2 with lines\n"
            ));
        }
        _ => {
            out.push_str("set ylabel 'normalized coincidence rate'\n");
            out.push_str(&format!(
                "plot '{csv_name}' using 1:2:3 with yerrorbars title 'rate', '' using 1:2 with lines\n"
            ));
        }
    }
    out
}
