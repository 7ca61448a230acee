//! Gaussian-dip fitting for coincidence scans.
//!
//! Model: `rate(delta) = b * (1 - c * exp(-((delta - m) / w)^2))` with
//! baseline `b`, contrast `c`, center `m`, and 1/e half-width `w`, fitted by
//! Levenberg-Marquardt with the analytic Jacobian. Weighted by `1/sigma^2`
//! when per-point uncertainties are supplied, unweighted otherwise.

// Index loops are kept explicit throughout: the 4x4 normal-equation algebra
// reads off the subscripts directly.
#![allow(clippy::needless_range_loop)]

use serde::Serialize;

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 200;
const COST_TOLERANCE: f64 = 1e-14;
const LAMBDA_INIT: f64 = 1e-3;
const LAMBDA_UP: f64 = 10.0;
const LAMBDA_DOWN: f64 = 0.1;

/// Fitted dip parameters. `width` is the 1/e half-width in the grid's units;
/// `depth` is the absolute dip depth `baseline * contrast`.
#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub baseline: f64,
    pub contrast: f64,
    pub center: f64,
    pub width: f64,
    pub depth: f64,
    pub contrast_stderr: f64,
    pub width_stderr: f64,
    pub residual_rms: f64,
    pub iterations: usize,
    pub converged: bool,
    /// False when the fitted width is degenerate: wider than the scan span,
    /// or with an uncertainty comparable to the value itself. The contrast
    /// may still be meaningful (a flat scan fits c ~ 0 with garbage width).
    pub width_reliable: bool,
}

fn model(p: &[f64; 4], x: f64) -> f64 {
    let u = (x - p[2]) / p[3];
    p[0] * (1.0 - p[1] * (-u * u).exp())
}

fn jacobian_row(p: &[f64; 4], x: f64) -> [f64; 4] {
    let u = (x - p[2]) / p[3];
    let e = (-u * u).exp();
    [
        1.0 - p[1] * e,
        -p[0] * e,
        -p[0] * p[1] * e * 2.0 * u / p[3],
        -p[0] * p[1] * e * 2.0 * u * u / p[3],
    ]
}

/// Solves the 4x4 system `a x = b` in place by Gaussian elimination with
/// partial pivoting. Returns None when the pivot collapses (singular system).
fn solve4(a: &mut [[f64; 4]; 4], b: &mut [f64; 4]) -> Option<[f64; 4]> {
    for col in 0..4 {
        let pivot =
            (col..4).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..4 {
            let f = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 4];
    for col in (0..4).rev() {
        let mut s = b[col];
        for k in col + 1..4 {
            s -= a[col][k] * x[k];
        }
        x[col] = s / a[col][col];
    }
    Some(x)
}

/// Inverts a symmetric 4x4 matrix column-by-column; None when singular.
fn invert4(m: &[[f64; 4]; 4]) -> Option<[[f64; 4]; 4]> {
    let mut inv = [[0.0; 4]; 4];
    for col in 0..4 {
        let mut a = *m;
        let mut e = [0.0; 4];
        e[col] = 1.0;
        let x = solve4(&mut a, &mut e)?;
        for row in 0..4 {
            inv[row][col] = x[row];
        }
    }
    Some(inv)
}

fn weighted_cost(grid: &[f64], values: &[f64], weights: &[f64], p: &[f64; 4]) -> f64 {
    grid.iter()
        .zip(values)
        .zip(weights)
        .map(|((&x, &y), &w)| {
            let r = model(p, x) - y;
            w * r * r
        })
        .sum()
}

/// Starting guesses: baseline from the outer quartiles, center at the
/// minimum, width from the half-depth crossings around it.
fn initial_guess(grid: &[f64], values: &[f64]) -> [f64; 4] {
    let n = grid.len();
    let quart = (n / 4).max(1);
    let edge_sum: f64 = values[..quart].iter().chain(&values[n - quart..]).sum();
    let baseline = (edge_sum / (2 * quart) as f64).max(1e-12);

    let (i_min, &y_min) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .expect("non-empty scan");
    let center = grid[i_min];
    let contrast = ((baseline - y_min) / baseline).clamp(0.01, 1.0);

    let half = baseline - 0.5 * (baseline - y_min);
    let mut left = grid[0];
    for i in (0..i_min).rev() {
        if values[i] >= half {
            left = grid[i];
            break;
        }
    }
    let mut right = grid[n - 1];
    for i in i_min..n {
        if values[i] >= half {
            right = grid[i];
            break;
        }
    }
    let span = grid[n - 1] - grid[0];
    // Half width at half depth -> 1/e half-width: w = hwhm / sqrt(ln 2).
    let hwhm = 0.5 * (right - left).abs();
    let width = if hwhm > 0.0 {
        hwhm / (2f64).ln().sqrt()
    } else {
        span / 4.0
    };
    [baseline, contrast, center, width.max(span / (n as f64))]
}

/// Fits the dip model to a scan. `stderr` may be empty or all-zero for
/// noise-free curves (unit weights are used); otherwise each point is
/// weighted by `1/stderr^2` and zero entries get the smallest nonzero sigma.
pub fn fit_dip(grid: &[f64], values: &[f64], stderr: &[f64]) -> Result<FitResult> {
    if grid.len() != values.len() || (!stderr.is_empty() && stderr.len() != grid.len()) {
        return Err(Error::InvalidInput(format!(
            "fit arrays disagree in length: {} grid, {} values, {} stderr",
            grid.len(),
            values.len(),
            stderr.len()
        )));
    }
    if grid.len() < 7 {
        return Err(Error::InvalidInput(format!(
            "dip fit needs at least 7 points, got {}",
            grid.len()
        )));
    }
    if grid.iter().chain(values).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(
            "fit input contains non-finite values".to_string(),
        ));
    }

    let n = grid.len();
    let weighted = stderr.iter().any(|&s| s > 0.0);
    let weights: Vec<f64> = if weighted {
        let floor = stderr
            .iter()
            .copied()
            .filter(|&s| s > 0.0)
            .fold(f64::INFINITY, f64::min);
        stderr
            .iter()
            .map(|&s| {
                let s = if s > 0.0 { s } else { floor };
                1.0 / (s * s)
            })
            .collect()
    } else {
        vec![1.0; n]
    };

    let mut p = initial_guess(grid, values);
    let mut lambda = LAMBDA_INIT;
    let mut cost = weighted_cost(grid, values, &weights, &p);
    let mut converged = false;
    let mut iterations = 0;

    for iter in 0..MAX_ITERATIONS {
        iterations = iter + 1;
        // Normal equations J^T W J and gradient J^T W r.
        let mut jtj = [[0.0; 4]; 4];
        let mut jtr = [0.0; 4];
        for ((&x, &y), &w) in grid.iter().zip(values).zip(&weights) {
            let row = jacobian_row(&p, x);
            let r = model(&p, x) - y;
            for a in 0..4 {
                jtr[a] += w * row[a] * r;
                for b in a..4 {
                    jtj[a][b] += w * row[a] * row[b];
                }
            }
        }
        for a in 0..4 {
            for b in 0..a {
                jtj[a][b] = jtj[b][a];
            }
        }

        let mut damped = jtj;
        for (a, row) in damped.iter_mut().enumerate() {
            row[a] += lambda * jtj[a][a].max(1e-300);
        }
        let mut rhs = jtr.map(|v| -v);
        let Some(step) = solve4(&mut damped, &mut rhs) else {
            lambda *= LAMBDA_UP;
            continue;
        };

        let mut trial = p;
        for a in 0..4 {
            trial[a] += step[a];
        }
        trial[3] = trial[3].abs().max(1e-300); // width sign is a gauge choice
        let trial_cost = weighted_cost(grid, values, &weights, &trial);

        if trial_cost <= cost {
            let rel_drop = (cost - trial_cost) / cost.max(1e-300);
            p = trial;
            cost = trial_cost;
            lambda = (lambda * LAMBDA_DOWN).max(1e-12);
            if rel_drop < COST_TOLERANCE {
                converged = true;
                break;
            }
        } else {
            lambda *= LAMBDA_UP;
            if lambda > 1e12 {
                // Stuck: the surface is flat in every useful direction.
                converged = cost.is_finite();
                break;
            }
        }
    }

    // Covariance from the undamped normal equations at the optimum. With
    // real per-point sigmas this is the parameter covariance directly; with
    // unit weights it is scaled by the reduced chi^2.
    let mut jtj = [[0.0; 4]; 4];
    for (&x, &w) in grid.iter().zip(&weights) {
        let row = jacobian_row(&p, x);
        for a in 0..4 {
            for b in a..4 {
                jtj[a][b] += w * row[a] * row[b];
            }
        }
    }
    for a in 0..4 {
        for b in 0..a {
            jtj[a][b] = jtj[b][a];
        }
    }
    let dof = (n - 4).max(1) as f64;
    let scale = if weighted { 1.0 } else { cost / dof };
    let (contrast_stderr, width_stderr) = match invert4(&jtj) {
        Some(cov) => (
            (cov[1][1] * scale).max(0.0).sqrt(),
            (cov[3][3] * scale).max(0.0).sqrt(),
        ),
        None => (f64::INFINITY, f64::INFINITY),
    };

    let residual_rms = {
        let ss: f64 = grid
            .iter()
            .zip(values)
            .map(|(&x, &y)| {
                let r = model(&p, x) - y;
                r * r
            })
            .sum();
        (ss / n as f64).sqrt()
    };

    let span = grid[n - 1] - grid[0];
    let width = p[3].abs();
    let width_reliable = converged
        && width_stderr.is_finite()
        && width_stderr < 0.5 * width
        && width < span
        && p[1] > 3.0 * contrast_stderr;

    Ok(FitResult {
        baseline: p[0],
        contrast: p[1].clamp(0.0, 1.0),
        center: p[2],
        width,
        depth: p[0] * p[1].clamp(0.0, 1.0),
        contrast_stderr,
        width_stderr,
        residual_rms,
        iterations,
        converged,
        width_reliable,
    })
}
