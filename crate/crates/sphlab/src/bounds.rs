//! Sharp pointwise bounds on the spherical derivative over the unit
//! disk, plus empirical verification sweeps.
//!
//! Three bound families are implemented: the area-conditioned bound
//! sqrt(C/(1-C)) / (1-|z|^2) for functions of normalized spherical area
//! at most C < 1, and two bounds for functions whose spherical
//! derivative stays at least c everywhere: the quadratic-density bound
//! (1/c)/(1-|z|^2)^2 and its refinement
//! (1 + sqrt(1 - 4c^2(1-|z|^2)^2)) / (2c(1-|z|^2)^2), which is sharp at
//! the origin. Verification sweeps a geometric radial grid (the bounds
//! blow up at the boundary) and reports any node where the function
//! exceeds its bound.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::funcmodel::MeroFunc;
use crate::quadrature::{self, Domain2D, QuadError};

type C = Complex64;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("point {0} lies outside the open unit disk")]
    OutsideDisk(C),
    #[error("parameter out of range: {0}")]
    ParameterRange(String),
    #[error("hypothesis `{what}` fails: required {required:.6}, actual {actual:.6}")]
    HypothesisViolated {
        what: String,
        required: f64,
        actual: f64,
    },
    #[error("evaluation failed: {0}")]
    Eval(String),
    #[error(transparent)]
    Quad(#[from] QuadError),
}

/// Density of the curvature -4 conformal metric on the unit disk:
/// 1/(1-|z|^2).
pub fn poincare_density_disk(z: C) -> Result<f64, BoundsError> {
    let n2 = z.norm_sqr();
    if n2 >= 1.0 {
        return Err(BoundsError::OutsideDisk(z));
    }
    Ok(1.0 / (1.0 - n2))
}

/// Bound on f# at z for functions of normalized spherical area at most
/// C over the unit disk; only meaningful for C < 1.
pub fn dufresnoy_yamashita_bound(c_area: f64, z: C) -> Result<f64, BoundsError> {
    if !(c_area > 0.0 && c_area < 1.0) {
        return Err(BoundsError::ParameterRange(format!(
            "area bound {c_area} must lie in (0, 1); at 1 and beyond no pointwise bound exists"
        )));
    }
    Ok((c_area / (1.0 - c_area)).sqrt() * poincare_density_disk(z)?)
}

fn check_lower_bound_param(c: f64) -> Result<(), BoundsError> {
    if !(c > 0.0 && c <= 0.5) {
        return Err(BoundsError::ParameterRange(format!(
            "derivative floor {c} must lie in (0, 1/2]; above 1/2 no function qualifies"
        )));
    }
    Ok(())
}

/// Bound on f# at z for functions with f# >= c throughout the disk.
pub fn steinmetz_bound(c: f64, z: C) -> Result<f64, BoundsError> {
    check_lower_bound_param(c)?;
    let lam = poincare_density_disk(z)?;
    Ok((1.0 / c) * lam * lam)
}

/// Refinement of `steinmetz_bound`, sharp at the origin.
pub fn fkr_bound(c: f64, z: C) -> Result<f64, BoundsError> {
    check_lower_bound_param(c)?;
    let n2 = z.norm_sqr();
    if n2 >= 1.0 {
        return Err(BoundsError::OutsideDisk(z));
    }
    let t = 1.0 - n2;
    let disc = (1.0 - 4.0 * c * c * t * t).max(0.0);
    Ok((1.0 + disc.sqrt()) / (2.0 * c * t * t))
}

/// The exact maximum of f#(0) over functions with f# >= c on the disk.
pub fn extremal_sharp_at_zero(c: f64) -> Result<f64, BoundsError> {
    check_lower_bound_param(c)?;
    let disc = (1.0 - 4.0 * c * c).max(0.0);
    Ok((1.0 + disc.sqrt()) / (2.0 * c))
}

/// Factor below which the boundary asymptotics of the refined bound can
/// be pushed for functions meromorphic beyond the closed disk.
pub fn refined_asymptotic_factor() -> f64 {
    (3.0 - 5.0f64.sqrt()) / 2.0
}

/// Grid minimum of f# over concentric rings reaching |z| = 1 - 1e-3;
/// an upper estimate of the infimum over the disk.
pub fn min_spherical_derivative(f: &MeroFunc, resolution: usize) -> Result<f64, BoundsError> {
    let resolution = resolution.max(8);
    let r_max = 1.0 - 1e-3;
    let mut min = match f.jet(C::new(0.0, 0.0)) {
        Ok(j) => j.sph_deriv,
        Err(e) => return Err(BoundsError::Eval(e.to_string())),
    };
    for i in 0..resolution {
        let r = r_max * (i as f64 + 1.0) / resolution as f64;
        for k in 0..2 * resolution {
            let th = std::f64::consts::TAU * k as f64 / (2 * resolution) as f64;
            let z = C::from_polar(r, th);
            match f.jet(z) {
                Ok(j) => min = min.min(j.sph_deriv),
                Err(e) => return Err(BoundsError::Eval(e.to_string())),
            }
        }
    }
    Ok(min)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundKind {
    /// Area-conditioned bound with declared area bound C < 1.
    Dufresnoy { c_area: f64 },
    /// Quadratic-density bound with declared derivative floor c.
    Steinmetz { c: f64 },
    /// Refined bound with declared derivative floor c.
    Fkr { c: f64 },
}

impl BoundKind {
    fn name(&self) -> &'static str {
        match self {
            BoundKind::Dufresnoy { .. } => "dufresnoy",
            BoundKind::Steinmetz { .. } => "steinmetz",
            BoundKind::Fkr { .. } => "fkr",
        }
    }

    fn value_at(&self, z: C) -> Result<f64, BoundsError> {
        match *self {
            BoundKind::Dufresnoy { c_area } => dufresnoy_yamashita_bound(c_area, z),
            BoundKind::Steinmetz { c } => steinmetz_bound(c, z),
            BoundKind::Fkr { c } => fkr_bound(c, z),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub bound_name: String,
    pub parameters: BTreeMap<String, f64>,
    /// Nodes where f# exceeded the bound: (z, f#(z), bound(z)).
    pub grid_violations: Vec<(C, f64, f64)>,
    pub max_ratio: f64,
}

/// Radial grid accumulating geometrically toward the boundary, where
/// the bounds blow up: r_i = 1 - 10^(-3i/63), i = 0..63.
fn radial_grid() -> Vec<f64> {
    (0..64)
        .map(|i| 1.0 - 10.0f64.powf(-3.0 * i as f64 / 63.0))
        .collect()
}

/// Verifies a bound for a concrete function on the standard grid. The
/// hypothesis behind the bound is checked first (with 1e-3 slack so
/// quadrature noise cannot reject a valid function) and its failure is
/// an error, not a report.
pub fn verify_bound(
    f: &MeroFunc,
    bound: BoundKind,
    resolution: usize,
) -> Result<BoundReport, BoundsError> {
    let mut parameters = BTreeMap::new();
    match bound {
        BoundKind::Dufresnoy { c_area } => {
            if !(c_area > 0.0 && c_area < 1.0) {
                return Err(BoundsError::ParameterRange(format!(
                    "area bound {c_area} must lie in (0, 1)"
                )));
            }
            let disk = Domain2D::disk(C::new(0.0, 0.0), 1.0).expect("unit disk");
            let area = quadrature::spherical_area(f, &disk, 1e-6)?;
            if area.value > c_area + 1e-3 {
                return Err(BoundsError::HypothesisViolated {
                    what: "normalized spherical area <= C".into(),
                    required: c_area,
                    actual: area.value,
                });
            }
            parameters.insert("C".into(), c_area);
            parameters.insert("area_measured".into(), area.value);
        }
        BoundKind::Steinmetz { c } | BoundKind::Fkr { c } => {
            check_lower_bound_param(c)?;
            let inf = min_spherical_derivative(f, 64)?;
            if inf < c - 1e-3 {
                return Err(BoundsError::HypothesisViolated {
                    what: "spherical derivative >= c".into(),
                    required: c,
                    actual: inf,
                });
            }
            parameters.insert("c".into(), c);
            parameters.insert("inf_measured".into(), inf);
        }
    }
    let angles = (2 * resolution.max(8)).min(1024).max(128);
    // One task per ring, merged in ring order: the report is identical
    // for any thread count.
    let rows: Vec<Result<(Vec<(C, f64, f64)>, f64), BoundsError>> = radial_grid()
        .par_iter()
        .map(|&r| {
            let mut violations = Vec::new();
            let mut worst = 0.0f64;
            for k in 0..angles {
                let th = std::f64::consts::TAU * k as f64 / angles as f64;
                let z = C::from_polar(r, th);
                let fs = f
                    .jet(z)
                    .map_err(|e| BoundsError::Eval(e.to_string()))?
                    .sph_deriv;
                let b = bound.value_at(z)?;
                if fs / b > worst {
                    worst = fs / b;
                }
                if fs > b * (1.0 + 1e-6) {
                    violations.push((z, fs, b));
                }
            }
            Ok((violations, worst))
        })
        .collect();
    let mut grid_violations = Vec::new();
    let mut max_ratio = 0.0f64;
    for row in rows {
        let (violations, worst) = row?;
        grid_violations.extend(violations);
        max_ratio = max_ratio.max(worst);
    }
    Ok(BoundReport {
        bound_name: bound.name().to_string(),
        parameters,
        grid_violations,
        max_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcmodel::poly::Poly;
    use crate::funcmodel::RationalFunc;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn scaled_identity(a: f64) -> MeroFunc {
        MeroFunc::Rational(
            RationalFunc::new(
                Poly::new(vec![c(0.0, 0.0), c(a, 0.0)]),
                Poly::constant(c(1.0, 0.0)),
            )
            .unwrap(),
        )
    }

    #[test]
    fn density_frozen_values() {
        assert_eq!(poincare_density_disk(c(0.0, 0.0)).unwrap(), 1.0);
        assert!((poincare_density_disk(c(0.5, 0.0)).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        let v = poincare_density_disk(c(0.99, 0.0)).unwrap();
        assert!((v - 1.0 / (1.0 - 0.9801)).abs() < 1e-10);
        assert!((v - 50.251256).abs() < 1e-5);
        assert!(poincare_density_disk(c(1.0, 0.0)).is_err());
    }

    #[test]
    fn area_bound_frozen_values() {
        assert!((dufresnoy_yamashita_bound(0.5, c(0.0, 0.0)).unwrap() - 1.0).abs() < 1e-15);
        assert!((dufresnoy_yamashita_bound(0.2, c(0.0, 0.0)).unwrap() - 0.5).abs() < 1e-15);
        assert!(dufresnoy_yamashita_bound(1.0, c(0.0, 0.0)).is_err());
        assert!(dufresnoy_yamashita_bound(-0.1, c(0.0, 0.0)).is_err());
        // Blows up monotonically as the area bound approaches 1.
        let a = dufresnoy_yamashita_bound(0.9, c(0.0, 0.0)).unwrap();
        let b = dufresnoy_yamashita_bound(0.99, c(0.0, 0.0)).unwrap();
        let d = dufresnoy_yamashita_bound(0.9999, c(0.0, 0.0)).unwrap();
        assert!(a < b && b < d && d > 99.0);
    }

    #[test]
    fn area_bound_monotonicity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let c1: f64 = rng.random_range(0.05..0.9);
            let c2: f64 = rng.random_range(c1..0.95);
            let r1: f64 = rng.random_range(0.0..0.9);
            let r2: f64 = rng.random_range(r1..0.95);
            let z1 = C::from_polar(r1, rng.random_range(0.0..std::f64::consts::TAU));
            let z2 = C::from_polar(r2, 0.0);
            assert!(
                dufresnoy_yamashita_bound(c1, z1).unwrap()
                    <= dufresnoy_yamashita_bound(c2, z1).unwrap() + 1e-12
            );
            assert!(
                dufresnoy_yamashita_bound(c1, z1).unwrap()
                    <= dufresnoy_yamashita_bound(c1, z2).unwrap() + 1e-12
            );
        }
    }

    #[test]
    fn quadratic_density_frozen_values() {
        assert!((steinmetz_bound(0.5, c(0.0, 0.0)).unwrap() - 2.0).abs() < 1e-15);
        assert!((steinmetz_bound(0.3, c(0.0, 0.0)).unwrap() - 10.0 / 3.0).abs() < 1e-14);
        let v = steinmetz_bound(0.5, c(0.5, 0.0)).unwrap();
        assert!((v - 2.0 * 16.0 / 9.0).abs() < 1e-13);
        assert!(steinmetz_bound(0.6, c(0.0, 0.0)).is_err());
        assert!(steinmetz_bound(0.0, c(0.0, 0.0)).is_err());
    }

    #[test]
    fn refined_bound_frozen_values() {
        assert!((fkr_bound(0.5, c(0.0, 0.0)).unwrap() - 1.0).abs() < 1e-15);
        assert!((fkr_bound(0.3, c(0.0, 0.0)).unwrap() - 3.0).abs() < 1e-14);
        assert!(fkr_bound(0.51, c(0.0, 0.0)).is_err());
    }

    #[test]
    fn refined_below_quadratic_everywhere() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let cc: f64 = rng.random_range(0.01..0.5);
            let r: f64 = rng.random_range(0.0..0.999);
            let z = C::from_polar(r, rng.random_range(0.0..std::f64::consts::TAU));
            let fk = fkr_bound(cc, z).unwrap();
            let st = steinmetz_bound(cc, z).unwrap();
            assert!(fk <= st * (1.0 + 1e-14), "fkr {fk} > steinmetz {st}");
        }
    }

    #[test]
    fn origin_value_matches_extremal() {
        for cc in [0.05, 0.1, 0.25, 0.4, 0.5] {
            let a = fkr_bound(cc, c(0.0, 0.0)).unwrap();
            let b = extremal_sharp_at_zero(cc).unwrap();
            assert!((a - b).abs() < 1e-15);
        }
        assert!((extremal_sharp_at_zero(0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!((extremal_sharp_at_zero(0.3).unwrap() - 3.0).abs() < 1e-14);
        // Strictly decreasing in c; diverges like 1/c at the bottom.
        let mut prev = f64::INFINITY;
        for cc in [0.01, 0.1, 0.2, 0.3, 0.4, 0.5] {
            let v = extremal_sharp_at_zero(cc).unwrap();
            assert!(v < prev);
            prev = v;
        }
        let small = 1e-3;
        let v = extremal_sharp_at_zero(small).unwrap();
        assert!((v * small - 1.0).abs() < 0.01);
    }

    #[test]
    fn boundary_asymptotics_of_refined_bound() {
        // (1-|z|^2)^2 * bound -> 1/c as |z| -> 1, monotonically here.
        for cc in [0.2, 0.5] {
            let mut prev_gap = f64::INFINITY;
            for k in 2..=6 {
                let r = 1.0 - 10.0f64.powi(-k);
                let z = c(r, 0.0);
                let t = 1.0 - z.norm_sqr();
                let v = fkr_bound(cc, z).unwrap() * t * t;
                let gap = (v - 1.0 / cc).abs();
                assert!(gap <= prev_gap + 1e-15);
                prev_gap = gap;
                if k == 6 {
                    assert!(gap < 1e-6 / cc, "gap {gap} too large at k={k}");
                }
            }
        }
    }

    #[test]
    fn refined_factor_value() {
        let v = refined_asymptotic_factor();
        assert!((v - (3.0 - 5.0f64.sqrt()) / 2.0).abs() < 1e-16);
        assert!(v > 0.38 && v < 0.382);
    }

    #[test]
    fn min_derivative_identity_map() {
        let f = scaled_identity(1.0);
        let v = min_spherical_derivative(&f, 64).unwrap();
        // Minimum at the outermost ring: 1/(1 + (1 - 1e-3)^2).
        let want = 1.0 / (1.0 + (1.0 - 1e-3) * (1.0 - 1e-3));
        assert!((v - want).abs() < 1e-12, "got {v}, want {want}");
        assert!((v - 0.5005).abs() < 1e-3);
    }

    #[test]
    fn min_derivative_constant_is_zero() {
        let f = MeroFunc::Rational(RationalFunc::constant(c(0.7, -0.2)));
        assert_eq!(min_spherical_derivative(&f, 32).unwrap(), 0.0);
    }

    #[test]
    fn min_derivative_universal_ceiling_sample() {
        // No meromorphic function keeps its spherical derivative above
        // 1/2 on the whole disk; random rationals must respect that.
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let deg_n = rng.random_range(0..=4usize);
            let deg_d = rng.random_range(0..=4usize);
            let num: Vec<(f64, f64)> = (0..=deg_n)
                .map(|_| (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)))
                .collect();
            let den: Vec<(f64, f64)> = (0..=deg_d)
                .map(|_| (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)))
                .collect();
            let f = match RationalFunc::from_coeff_pairs(&num, &den) {
                Ok(f) => f,
                Err(_) => continue,
            };
            let v = min_spherical_derivative(&MeroFunc::Rational(f), 48).unwrap();
            assert!(v <= 0.51, "sweep found inf estimate {v} above 1/2 + slack");
        }
    }

    #[test]
    fn verify_area_bound_on_sharp_example() {
        // a chosen so the area equals C: a^2/(1+a^2) = 0.4.
        let a = (0.4f64 / 0.6).sqrt();
        let f = scaled_identity(a);
        let rep = verify_bound(&f, BoundKind::Dufresnoy { c_area: 0.4 }, 64).unwrap();
        assert!(rep.grid_violations.is_empty());
        // Sharp at the origin: ratio reaches 1 there.
        assert!((rep.max_ratio - 1.0).abs() < 1e-9, "max_ratio {}", rep.max_ratio);
    }

    #[test]
    fn verify_refined_bound_identity_map() {
        let f = scaled_identity(1.0);
        let rep = verify_bound(&f, BoundKind::Fkr { c: 0.45 }, 64).unwrap();
        assert!(rep.grid_violations.is_empty(), "violations {:?}", rep.grid_violations);
        assert!(rep.max_ratio <= 1.0 + 1e-6);
        let rep = verify_bound(&f, BoundKind::Steinmetz { c: 0.45 }, 64).unwrap();
        assert!(rep.grid_violations.is_empty());
    }

    #[test]
    fn verify_rejects_false_hypothesis() {
        let f = scaled_identity(1.0);
        let r = verify_bound(&f, BoundKind::Dufresnoy { c_area: 0.1 }, 64);
        assert!(matches!(r, Err(BoundsError::HypothesisViolated { .. })));
        // Derivative floor 0.5 fails for z (inf is just above 0.5 only
        // inside; at the rim it dips to ~0.5005 > 0.5 - so use a
        // function that genuinely dips: 2z has inf 2/(1+4r^2) -> 0.4.
        let g = scaled_identity(2.0);
        let r = verify_bound(&g, BoundKind::Fkr { c: 0.5 }, 64);
        assert!(matches!(r, Err(BoundsError::HypothesisViolated { .. })));
    }

    #[test]
    fn report_serializes_with_parameters() {
        let f = scaled_identity(1.0);
        let rep = verify_bound(&f, BoundKind::Fkr { c: 0.45 }, 32).unwrap();
        let s = serde_json::to_string(&rep).unwrap();
        assert!(s.contains("\"bound_name\":\"fkr\""));
        assert!(s.contains("\"c\""));
    }
}
