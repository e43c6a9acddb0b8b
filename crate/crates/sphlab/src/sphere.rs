//! The Riemann sphere with the chordal metric, normalized to diameter 1.
//!
//! With this normalization the distance from 0 to infinity is exactly 1
//! and the total area of the sphere is pi. Rigid motions are the maps
//! T(z) = phase * (z - a) / (1 + conj(a) z) with |phase| = 1; they are
//! exact isometries of the chordal metric.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// A point on the Riemann sphere. `Finite` carries a complex number with
/// finite components; the point at infinity is explicit. No magnitude
/// threshold silently converts a large finite value to `Infinity`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SpherePoint {
    Finite(Complex64),
    Infinity,
}

impl SpherePoint {
    /// Wraps a computed value, mapping non-finite components to `Infinity`.
    /// This is for arithmetic results that overflow the representable
    /// range, not a coercion of large finite inputs.
    pub fn from_value(z: Complex64) -> Self {
        if z.re.is_finite() && z.im.is_finite() {
            SpherePoint::Finite(z)
        } else {
            SpherePoint::Infinity
        }
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, SpherePoint::Infinity)
    }

    pub fn finite(&self) -> Option<Complex64> {
        match self {
            SpherePoint::Finite(z) => Some(*z),
            SpherePoint::Infinity => None,
        }
    }
}

impl From<Complex64> for SpherePoint {
    fn from(z: Complex64) -> Self {
        SpherePoint::from_value(z)
    }
}

/// Chordal distance between two sphere points; values lie in [0, 1].
///
/// For finite points sigma(z, w) = |z - w| / (sqrt(1+|z|^2) sqrt(1+|w|^2))
/// and sigma(z, inf) = 1 / sqrt(1+|z|^2). When both arguments have
/// modulus > 1 the identity sigma(z, w) = sigma(1/z, 1/w) is used, which
/// keeps every intermediate bounded.
pub fn chordal_distance(p: SpherePoint, q: SpherePoint) -> f64 {
    match (p, q) {
        (SpherePoint::Infinity, SpherePoint::Infinity) => 0.0,
        (SpherePoint::Finite(z), SpherePoint::Infinity)
        | (SpherePoint::Infinity, SpherePoint::Finite(z)) => 1.0 / 1.0f64.hypot(z.norm()),
        (SpherePoint::Finite(z), SpherePoint::Finite(w)) => {
            if z == w {
                return 0.0;
            }
            // Canonical argument order: the same float operations run for
            // both (z, w) and (w, z), so symmetry is exact.
            let (z, w) = order_pair(z, w);
            let nz = z.norm();
            let nw = w.norm();
            if nz > 1.0 && nw > 1.0 {
                let zi = safe_inv(z, nz);
                let wi = safe_inv(w, nw);
                let d = (zi - wi).norm();
                (d / 1.0f64.hypot(zi.norm())) / 1.0f64.hypot(wi.norm())
            } else {
                let d = (z - w).norm();
                (d / 1.0f64.hypot(nz)) / 1.0f64.hypot(nw)
            }
        }
    }
}

fn order_pair(z: Complex64, w: Complex64) -> (Complex64, Complex64) {
    use std::cmp::Ordering;
    let key = |v: Complex64| (v.norm(), v.re, v.im);
    let (kz, kw) = (key(z), key(w));
    let ord = kz.0.total_cmp(&kw.0).then(kz.1.total_cmp(&kw.1)).then(kz.2.total_cmp(&kw.2));
    if ord == Ordering::Greater {
        (w, z)
    } else {
        (z, w)
    }
}

/// 1/z computed as (conj(z)/|z|)/|z|; `Complex64::inv` squares the
/// modulus internally and overflows for |z| beyond about 1e154.
fn safe_inv(z: Complex64, n: f64) -> Complex64 {
    (z.conj() / n) / n
}

/// A rotation of the sphere: T(z) = phase * (z - a) / (1 + conj(a) z).
/// The constructor normalizes `phase` to unit modulus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidMotion {
    pub a: Complex64,
    pub phase: Complex64,
}

impl RigidMotion {
    /// Panics if `phase` is zero or either parameter is non-finite.
    pub fn new(a: Complex64, phase: Complex64) -> Self {
        assert!(a.re.is_finite() && a.im.is_finite(), "pivot must be finite");
        assert!(
            phase.norm() > 0.0 && phase.norm().is_finite(),
            "phase must be a nonzero finite complex number"
        );
        RigidMotion {
            a,
            phase: phase / phase.norm(),
        }
    }

    pub fn identity() -> Self {
        RigidMotion {
            a: Complex64::new(0.0, 0.0),
            phase: Complex64::new(1.0, 0.0),
        }
    }

    pub fn apply(&self, p: SpherePoint) -> SpherePoint {
        match p {
            SpherePoint::Finite(z) => {
                let den = Complex64::new(1.0, 0.0) + self.a.conj() * z;
                if den.norm() == 0.0 {
                    return SpherePoint::Infinity;
                }
                SpherePoint::from_value(self.phase * (z - self.a) / den)
            }
            SpherePoint::Infinity => {
                if self.a.norm() == 0.0 {
                    SpherePoint::Infinity
                } else {
                    SpherePoint::from_value(self.phase / self.a.conj())
                }
            }
        }
    }

    /// The inverse motion, again in the same parametric family.
    pub fn inverse(&self) -> Self {
        RigidMotion {
            a: -(self.phase * self.a),
            phase: self.phase.conj(),
        }
    }
}
