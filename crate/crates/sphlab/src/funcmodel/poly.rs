//! Complex polynomials with exact coefficient arithmetic.
//!
//! Coefficients are stored ascending with exact trailing zeros trimmed,
//! so the zero polynomial has an empty coefficient vector. Derivatives
//! and ring operations stay at the coefficient level; nothing here is
//! approximated except the tolerance-based Euclidean GCD.

use num_complex::Complex64;

type C = Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<C>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<C>) -> Self {
        while coeffs.last().is_some_and(|c| c.re == 0.0 && c.im == 0.0) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn constant(c: C) -> Self {
        Poly::new(vec![c])
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, with None for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn inf_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn eval(&self, z: C) -> C {
        let mut p = C::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            p = p * z + c;
        }
        p
    }

    /// Value and derivative in one Horner pass.
    pub fn eval_pair(&self, z: C) -> (C, C) {
        let mut p = C::new(0.0, 0.0);
        let mut dp = C::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    /// Exact coefficient-level derivative.
    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::zero();
        }
        Poly::new(
            self.coeffs[1..]
                .iter()
                .enumerate()
                .map(|(i, &c)| c * (i as f64 + 1.0))
                .collect(),
        )
    }

    pub fn scale(&self, s: C) -> Poly {
        Poly::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![C::new(0.0, 0.0); n];
        for (i, &c) in self.coeffs.iter().enumerate() {
            out[i] += c;
        }
        for (i, &c) in other.coeffs.iter().enumerate() {
            out[i] += c;
        }
        Poly::new(out)
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(C::new(-1.0, 0.0)))
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![C::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    /// Long division: self = q * div + r with deg r < deg div.
    /// Panics if div is zero.
    pub fn divmod(&self, div: &Poly) -> (Poly, Poly) {
        assert!(!div.is_zero(), "division by the zero polynomial");
        let dd = div.coeffs.len() - 1;
        if self.coeffs.len() <= dd {
            return (Poly::zero(), self.clone());
        }
        let lead = div.coeffs[dd];
        let mut rem = self.coeffs.clone();
        let qn = rem.len() - dd;
        let mut q = vec![C::new(0.0, 0.0); qn];
        for k in (0..qn).rev() {
            let f = rem[k + dd] / lead;
            q[k] = f;
            if f.re != 0.0 || f.im != 0.0 {
                for (j, &dc) in div.coeffs.iter().enumerate() {
                    rem[k + j] -= f * dc;
                }
            }
        }
        rem.truncate(dd);
        (Poly::new(q), Poly::new(rem))
    }

    /// Coefficients divided by the max modulus; zero stays zero.
    pub fn normalized(&self) -> Poly {
        let m = self.inf_norm();
        if m == 0.0 {
            return Poly::zero();
        }
        self.scale(C::new(1.0 / m, 0.0))
    }

    /// Drops leading coefficients below `rel_tol` times the max modulus.
    /// Used where near-cancellation of the leading term must count as a
    /// genuine degree drop.
    pub fn trim_leading(&self, rel_tol: f64) -> Poly {
        let m = self.inf_norm();
        if m == 0.0 {
            return Poly::zero();
        }
        let mut c = self.coeffs.clone();
        while c.last().is_some_and(|t| t.norm() <= rel_tol * m) {
            c.pop();
        }
        Poly::new(c)
    }
}

/// Approximate monic GCD by the Euclidean algorithm on normalized
/// coefficients. A remainder whose norm falls below `tol` relative to
/// the working pair ends the recursion. Exact common factors survive;
/// coprime pairs return a constant.
pub fn gcd_approx(a: &Poly, b: &Poly, tol: f64) -> Poly {
    let mut f = a.normalized();
    let mut g = b.normalized();
    if f.degree() < g.degree() {
        std::mem::swap(&mut f, &mut g);
    }
    let mut guard = 0;
    loop {
        if g.is_zero() || g.inf_norm() == 0.0 {
            return monicize(&f);
        }
        let g_trim = g.trim_leading(1e-12);
        if g_trim.is_zero() {
            return monicize(&f);
        }
        let (_, r) = f.divmod(&g_trim);
        // Tolerance applies to the raw remainder while the working pair
        // has inf-norm near one; normalizing first would mask smallness.
        let r = if r.inf_norm() <= tol * (1.0 + f.inf_norm()) {
            Poly::zero()
        } else {
            r.normalized()
        };
        f = g_trim;
        g = r;
        guard += 1;
        if guard > 256 {
            // Ill-conditioned input; fall back to the current divisor.
            return monicize(&f);
        }
    }
}

fn monicize(p: &Poly) -> Poly {
    match p.coeffs.last() {
        None => Poly::zero(),
        Some(&l) => p.scale(l.inv()),
    }
}
