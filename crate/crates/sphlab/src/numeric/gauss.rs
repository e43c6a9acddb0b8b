//! Gauss-Legendre quadrature nodes and weights on [-1, 1].
//!
//! Nodes are computed once per order by Newton iteration on the Legendre
//! recurrence, accurate to machine precision; no tabulated constants.

use std::sync::OnceLock;

/// Legendre P_n(x) and its derivative via the three-term recurrence.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0f64;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    // P'_n(x) = n (x P_n - P_{n-1}) / (x^2 - 1), valid off the endpoints.
    let dp = (n as f64) * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

fn compute(n: usize) -> Vec<(f64, f64)> {
    let mut out = vec![(0.0f64, 0.0f64); n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..64 {
            let (p, dp) = legendre_pair(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() <= 1e-15 * (1.0 + x.abs()) {
                break;
            }
        }
        let (_, dp) = legendre_pair(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // The guess at i = 0 converges to the largest root; store nodes
        // in ascending order.
        out[i] = (-x, w);
        out[n - 1 - i] = (x, w);
    }
    // The symmetric midpoint of odd orders lands on exactly zero.
    if n % 2 == 1 {
        out[n / 2].0 = 0.0;
    }
    out
}

/// Nodes and weights of the 7-point rule.
pub fn gl7() -> &'static [(f64, f64)] {
    static CACHE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    CACHE.get_or_init(|| compute(7))
}

/// Nodes and weights of the 15-point rule.
pub fn gl15() -> &'static [(f64, f64)] {
    static CACHE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    CACHE.get_or_init(|| compute(15))
}
