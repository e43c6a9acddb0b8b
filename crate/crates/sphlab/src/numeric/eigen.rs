//! Polynomial roots via the balanced companion matrix.
//!
//! The companion matrix is upper Hessenberg, so a single-shift complex QR
//! iteration with Wilkinson shifts and deflation finds all eigenvalues.
//! Two Newton polish steps on the monic polynomial tighten simple roots
//! to near machine precision.

use num_complex::Complex64;

type C = Complex64;

/// Dense square complex matrix in row-major order.
struct Mat {
    n: usize,
    a: Vec<C>,
}

impl Mat {
    fn zeros(n: usize) -> Self {
        Mat {
            n,
            a: vec![C::new(0.0, 0.0); n * n],
        }
    }
    #[inline]
    fn at(&self, i: usize, j: usize) -> C {
        self.a[i * self.n + j]
    }
    #[inline]
    fn set(&mut self, i: usize, j: usize, v: C) {
        self.a[i * self.n + j] = v;
    }
}

/// Diagonal similarity scaling by powers of two; exact in floating point.
fn balance(h: &mut Mat) {
    let n = h.n;
    for _ in 0..6 {
        let mut stable = true;
        for i in 0..n {
            let mut c = 0.0f64;
            let mut r = 0.0f64;
            for j in 0..n {
                if j != i {
                    c += h.at(j, i).norm();
                    r += h.at(i, j).norm();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let mut f = 1.0f64;
            let (mut c2, mut r2) = (c, r);
            while c2 < r2 / 2.0 {
                c2 *= 2.0;
                r2 /= 2.0;
                f *= 2.0;
            }
            while c2 > r2 * 2.0 {
                c2 /= 2.0;
                r2 *= 2.0;
                f /= 2.0;
            }
            if f != 1.0 && (c2 + r2) < 0.95 * (c + r) {
                stable = false;
                let inv = 1.0 / f;
                for j in 0..n {
                    let v = h.at(i, j) * inv;
                    h.set(i, j, v);
                }
                for j in 0..n {
                    let v = h.at(j, i) * f;
                    h.set(j, i, v);
                }
            }
        }
        if stable {
            break;
        }
    }
}

/// Complex Givens rotation G = [[c, s], [-conj(s), c]], c real, with
/// G * [a, b]^T = [r, 0]^T.
fn givens(a: C, b: C) -> (f64, C) {
    let na = a.norm();
    let nb = b.norm();
    if nb == 0.0 {
        return (1.0, C::new(0.0, 0.0));
    }
    if na == 0.0 {
        return (0.0, b.conj() / nb);
    }
    let t = na.hypot(nb);
    let c = na / t;
    let s = (a / na) * b.conj() / t;
    (c, s)
}

fn wilkinson_shift(a: C, b: C, c: C, d: C) -> C {
    // Eigenvalue of [[a, b], [c, d]] closer to d.
    let tr = a + d;
    let det = a * d - b * c;
    let disc = (tr * tr * 0.25 - det).sqrt();
    let l1 = tr * 0.5 + disc;
    let l2 = tr * 0.5 - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Eigenvalues of an upper Hessenberg matrix by explicit single-shift QR.
fn hessenberg_eigenvalues(mut h: Mat) -> Result<Vec<C>, &'static str> {
    let n = h.n;
    let mut eigs: Vec<C> = Vec::with_capacity(n);
    if n == 0 {
        return Ok(eigs);
    }
    let eps = f64::EPSILON;
    let norm_scale: f64 = (0..n)
        .map(|i| (0..n).map(|j| h.at(i, j).norm()).sum::<f64>())
        .fold(0.0, f64::max)
        .max(1.0);
    let mut hi = n; // active block is 0..hi
    let mut iters = 0usize;
    let mut since_deflation = 0usize;
    let max_iters = 90 * n + 200;
    while hi > 0 {
        if iters > max_iters {
            return Err("QR iteration failed to converge");
        }
        // Zero negligible subdiagonals.
        for k in 1..hi {
            let s = h.at(k - 1, k - 1).norm() + h.at(k, k).norm();
            let s = if s == 0.0 { norm_scale } else { s };
            if h.at(k, k - 1).norm() <= eps * s {
                h.set(k, k - 1, C::new(0.0, 0.0));
            }
        }
        if hi == 1 || h.at(hi - 1, hi - 2).norm() == 0.0 {
            eigs.push(h.at(hi - 1, hi - 1));
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        // Start of the unreduced block ending at hi-1.
        let mut lo = hi - 1;
        while lo > 0 && h.at(lo, lo - 1).norm() != 0.0 {
            lo -= 1;
        }
        iters += 1;
        since_deflation += 1;
        let m = hi - 1;
        let sigma = if since_deflation % 14 == 0 {
            // Exceptional shift to break symmetric stalls.
            h.at(m, m) + h.at(m, m - 1) * C::new(1.25, 0.75)
        } else {
            wilkinson_shift(h.at(m - 1, m - 1), h.at(m - 1, m), h.at(m, m - 1), h.at(m, m))
        };
        for i in lo..hi {
            let v = h.at(i, i) - sigma;
            h.set(i, i, v);
        }
        // QR factorization of the shifted block via Givens rotations.
        let mut rots: Vec<(f64, C, usize)> = Vec::with_capacity(hi - lo);
        for k in lo..hi - 1 {
            let (c, s) = givens(h.at(k, k), h.at(k + 1, k));
            for j in k..hi {
                let x = h.at(k, j);
                let y = h.at(k + 1, j);
                h.set(k, j, x * c + y * s);
                h.set(k + 1, j, -x * s.conj() + y * c);
            }
            rots.push((c, s, k));
        }
        // Form R Q by applying the adjoint rotations on the right.
        for &(c, s, k) in &rots {
            let top = (k + 2).min(hi);
            for i in lo..top {
                let x = h.at(i, k);
                let y = h.at(i, k + 1);
                h.set(i, k, x * c + y * s.conj());
                h.set(i, k + 1, -x * s + y * c);
            }
        }
        for i in lo..hi {
            let v = h.at(i, i) + sigma;
            h.set(i, i, v);
        }
    }
    eigs.reverse();
    Ok(eigs)
}

fn horner_pair(coeffs: &[C], z: C) -> (C, C) {
    let mut p = C::new(0.0, 0.0);
    let mut dp = C::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Roots of a complex polynomial given by ascending coefficients.
///
/// The input must be trimmed (nonzero leading coefficient) with degree >= 1.
/// Roots are returned with multiplicity, ordered deterministically.
pub fn poly_roots(coeffs: &[C]) -> Result<Vec<C>, &'static str> {
    let n = coeffs.len();
    if n < 2 {
        return Err("polynomial must have degree >= 1");
    }
    let lead = coeffs[n - 1];
    if lead.norm() == 0.0 {
        return Err("leading coefficient is zero");
    }
    let deg = n - 1;
    let monic: Vec<C> = coeffs.iter().map(|&c| c / lead).collect();
    let mut h = Mat::zeros(deg);
    for i in 0..deg - 1 {
        h.set(i + 1, i, C::new(1.0, 0.0));
    }
    for i in 0..deg {
        h.set(i, deg - 1, -monic[i]);
    }
    balance(&mut h);
    let mut roots = hessenberg_eigenvalues(h)?;
    // Two Newton polish steps per root on the monic polynomial.
    for r in roots.iter_mut() {
        for _ in 0..2 {
            let (p, dp) = horner_pair(&monic, *r);
            if dp.norm() > 1e-300 {
                let step = p / dp;
                if step.norm().is_finite() {
                    *r -= step;
                }
            }
        }
    }
    roots.sort_by(|a, b| {
        a.re.total_cmp(&b.re)
            .then_with(|| a.im.total_cmp(&b.im))
    });
    Ok(roots)
}
