//! Shared numerical kernels: compensated summation, least squares,
//! Gauss-Legendre nodes, a complex Hessenberg QR eigensolver, and a
//! banded LU factorization.

pub mod banded;
pub mod eigen;
pub mod gauss;

/// Neumaier compensated summation. The result is independent of the
/// platform's FMA behaviour and deterministic for a fixed input order.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Ordinary least squares fit y = intercept + slope * x.
/// Returns (intercept, slope). Requires xs.len() == ys.len() >= 2 and
/// at least two distinct x values.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2);
    let n = xs.len() as f64;
    let mx = compensated_sum(xs.iter().copied()) / n;
    let my = compensated_sum(ys.iter().copied()) / n;
    let sxx = compensated_sum(xs.iter().map(|&x| (x - mx) * (x - mx)));
    let sxy = compensated_sum(xs.iter().zip(ys).map(|(&x, &y)| (x - mx) * (y - my)));
    assert!(sxx > 0.0, "degenerate abscissae in linear_fit");
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}
