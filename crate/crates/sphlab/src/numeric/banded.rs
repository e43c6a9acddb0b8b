//! Banded LU factorization with partial pivoting, LAPACK band storage.
//!
//! Element (i, j) with |i - j| within the band lives at
//! data[j * ldab + (kl + ku + i - j)]; the extra kl rows hold pivot
//! fill-in. Column-major storage keeps the rank-1 update contiguous.

pub struct BandedLU {
    n: usize,
    kl: usize,
    ku: usize, // effective upper bandwidth after fill-in: ku + kl
    ldab: usize,
    data: Vec<f64>,
    piv: Vec<usize>,
    factored: bool,
}

#[derive(Debug, PartialEq)]
pub enum BandedError {
    Singular(usize),
}

impl BandedLU {
    /// A zero matrix with kl sub- and ku superdiagonals.
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        BandedLU {
            n,
            kl,
            ku,
            ldab,
            data: vec![0.0; ldab * n],
            piv: vec![0; n],
            factored: false,
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i + self.ku + self.kl >= j && j + self.kl >= i);
        j * self.ldab + (self.kl + self.ku + i - j)
    }

    /// Add v to entry (i, j). Panics outside the declared band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(!self.factored);
        assert!(j <= i + self.ku && i <= j + self.kl, "entry outside band");
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(!self.factored);
        assert!(j <= i + self.ku && i <= j + self.kl, "entry outside band");
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    /// LU factorization with partial pivoting confined to the band.
    pub fn factor(&mut self) -> Result<(), BandedError> {
        assert!(!self.factored);
        let n = self.n;
        let kl = self.kl;
        let kuw = self.ku + self.kl; // working upper bandwidth
        for k in 0..n {
            let rmax = (k + kl).min(n - 1);
            // Pivot search in column k.
            let mut p = k;
            let mut pmax = self.data[self.idx(k, k)].abs();
            for i in k + 1..=rmax {
                let v = self.data[self.idx(i, k)].abs();
                if v > pmax {
                    pmax = v;
                    p = i;
                }
            }
            if pmax == 0.0 {
                return Err(BandedError::Singular(k));
            }
            self.piv[k] = p;
            let cmax = (k + kuw).min(n - 1);
            if p != k {
                for j in k..=cmax {
                    let a = self.idx(k, j);
                    let b = self.idx(p, j);
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.idx(k, k)];
            let inv = 1.0 / pivot;
            for i in k + 1..=rmax {
                let m = self.idx(i, k);
                self.data[m] *= inv;
            }
            // Rank-1 trailing update, column by column (contiguous).
            for j in k + 1..=cmax {
                let akj = self.data[self.idx(k, j)];
                if akj == 0.0 {
                    continue;
                }
                let col = self.idx(k + 1, j);
                let mul = self.idx(k + 1, k);
                for t in 0..rmax.saturating_sub(k) {
                    self.data[col + t] -= self.data[mul + t] * akj;
                }
            }
        }
        self.factored = true;
        Ok(())
    }

    /// Solve A x = b in place. Requires a prior successful factor().
    pub fn solve(&self, b: &mut [f64]) {
        assert!(self.factored);
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let kl = self.kl;
        let kuw = self.ku + self.kl;
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let rmax = (k + kl).min(n - 1);
            let bk = b[k];
            if bk != 0.0 {
                for i in k + 1..=rmax {
                    b[i] -= self.data[self.idx(i, k)] * bk;
                }
            }
        }
        for k in (0..n).rev() {
            let cmax = (k + kuw).min(n - 1);
            let mut s = b[k];
            for j in k + 1..=cmax {
                s -= self.data[self.idx(k, j)] * b[j];
            }
            b[k] = s / self.data[self.idx(k, k)];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    /// Dense reference solve via Gaussian elimination with partial pivoting.
    fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut m: Vec<Vec<f64>> = a.to_vec();
        let mut x = b.to_vec();
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs())).unwrap();
            m.swap(k, p);
            x.swap(k, p);
            for i in k + 1..n {
                let f = m[i][k] / m[k][k];
                for j in k..n {
                    m[i][j] -= f * m[k][j];
                }
                x[i] -= f * x[k];
            }
        }
        for k in (0..n).rev() {
            for j in k + 1..n {
                x[k] -= m[k][j] * x[j];
            }
            x[k] /= m[k][k];
        }
        x
    }

    #[test]
    fn matches_dense_on_random_banded_systems() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for &(n, kl, ku) in &[(12usize, 2usize, 3usize), (25, 4, 1), (40, 5, 5)] {
            let mut dense = vec![vec![0.0f64; n]; n];
            let mut band = BandedLU::new(n, kl, ku);
            for i in 0..n {
                for j in 0..n {
                    if j <= i + ku && i <= j + kl {
                        let v: f64 = rng.random_range(-1.0..1.0);
                        let v = if i == j { v + 6.0 } else { v };
                        dense[i][j] = v;
                        band.set(i, j, v);
                    }
                }
            }
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            band.factor().unwrap();
            let mut x = b.clone();
            band.solve(&mut x);
            let want = dense_solve(&dense, &b);
            for i in 0..n {
                assert!((x[i] - want[i]).abs() < 1e-10, "row {i}: {} vs {}", x[i], want[i]);
            }
        }
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        // [[0, 1], [1, 0]] needs the row swap.
        let mut band = BandedLU::new(2, 1, 1);
        band.set(0, 1, 1.0);
        band.set(1, 0, 1.0);
        band.factor().unwrap();
        let mut b = vec![2.0, 3.0];
        band.solve(&mut b);
        assert!((b[0] - 3.0).abs() < 1e-15);
        assert!((b[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn singular_matrix_reported() {
        let mut band = BandedLU::new(3, 1, 1);
        band.set(0, 0, 1.0);
        band.set(1, 1, 0.0);
        band.set(2, 2, 1.0);
        assert_eq!(band.factor(), Err(BandedError::Singular(1)));
    }

    #[test]
    fn poisson_1d_quadratic_solution() {
        // -u'' = 2 with u(0) = u(1) = 0 has u(x) = x(1-x); the 3-point
        // stencil reproduces it exactly.
        let m = 63usize;
        let h = 1.0 / (m as f64 + 1.0);
        let mut band = BandedLU::new(m, 1, 1);
        for i in 0..m {
            band.set(i, i, 2.0 / (h * h));
            if i > 0 {
                band.set(i, i - 1, -1.0 / (h * h));
            }
            if i + 1 < m {
                band.set(i, i + 1, -1.0 / (h * h));
            }
        }
        band.factor().unwrap();
        let mut b = vec![2.0; m];
        band.solve(&mut b);
        for i in 0..m {
            let x = (i as f64 + 1.0) * h;
            assert!((b[i] - x * (1.0 - x)).abs() < 1e-12);
        }
    }
}
