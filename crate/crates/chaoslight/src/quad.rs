//! Gauss-Legendre quadrature on finite intervals.

/// Nodes and weights for n-point Gauss-Legendre quadrature on [-1, 1].
///
/// Newton iteration on the Legendre polynomial from the Chebyshev initial
/// guess; converges to machine precision in a handful of steps for any
/// practical n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    // Roots come in +/- pairs; solve the upper half.
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Recurrence for P_n(x) and P'_n(x).
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Maps the reference rule onto [a, b].
pub fn scaled(nodes: &[f64], weights: &[f64], a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let xs = nodes.iter().map(|t| mid + half * t).collect();
    let ws = weights.iter().map(|w| w * half).collect();
    (xs, ws)
}
