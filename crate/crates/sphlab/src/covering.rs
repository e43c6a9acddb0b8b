//! Covering counts of rational maps and measure estimates on the sphere.
//!
//! The preimage count n_f(w, D) comes from the roots of p - w q (of q
//! alone for w at infinity), found through a balanced companion matrix
//! and polished by two Newton steps. Summing counts against an
//! equal-area sample grid of the sphere integrates the covering number,
//! which independently reproduces the spherical-area integral without
//! touching quadrature; the two must agree, and tests hold them to it.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::funcmodel::{MeroFunc, RationalFunc};
use crate::numeric::eigen::poly_roots;
use crate::quadrature::{self, Domain2D, QuadError};
use crate::sphere::{chordal_distance, SpherePoint};

type C = Complex64;

#[derive(Debug, Error)]
pub enum CoveringError {
    #[error("root {root} lies within 1e-9 of the domain boundary; the count is ambiguous")]
    BoundaryRoot { root: C },
    #[error("target equation is identically zero (w is the function's constant value)")]
    DegenerateTarget,
    #[error("sphere grid resolution {0} is below the minimum of 16")]
    ResolutionTooLow(usize),
    #[error("degree {0} exceeds the oracle cost guard of 6")]
    DegreeTooHigh(usize),
    #[error("spherical area {area:.6} exceeds the declared bound {bound:.6}")]
    AreaBoundViolated { area: f64, bound: f64 },
    #[error("sample set carries weight {total:.6} < required {alpha:.6}")]
    InsufficientMeasure { total: f64, alpha: f64 },
    #[error("fewer than three distinct points in the sample set")]
    DegenerateSet,
    #[error("eigenvalue solve failed: {0}")]
    Roots(&'static str),
    #[error(transparent)]
    Quad(#[from] QuadError),
}

/// Weighted point sample of (a subset of) the sphere. Weights are
/// spherical areas; a full-sphere sample carries total weight pi.
#[derive(Debug, Clone, Serialize)]
pub struct SphereSampleSet {
    pub points: Vec<(SpherePoint, f64)>,
    pub total_weight: f64,
}

impl SphereSampleSet {
    fn from_points(points: Vec<(SpherePoint, f64)>) -> Self {
        let total_weight = points.iter().map(|(_, w)| w).sum();
        SphereSampleSet {
            points,
            total_weight,
        }
    }
}

/// Equal-area sample grid with `bands` latitude bands. Band j has
/// exact measure pi/bands split evenly among its sample points, so the
/// total weight is exactly pi. Longitude counts track the band
/// circumference and successive bands are rotated against each other.
pub fn equal_area_sphere_grid(bands: usize) -> SphereSampleSet {
    let k = bands.max(1);
    let mut points = Vec::new();
    let band_measure = std::f64::consts::PI / k as f64;
    for j in 0..k {
        let z_height = (j as f64 + 0.5) / k as f64;
        let rho = (z_height * (1.0 - z_height)).sqrt();
        let m = ((4.0 * k as f64 * rho).round() as usize).max(1);
        let w = band_measure / m as f64;
        let stagger = (j as f64 * std::f64::consts::FRAC_1_SQRT_2).fract();
        let modulus = (z_height / (1.0 - z_height)).sqrt();
        for i in 0..m {
            let theta = std::f64::consts::TAU * (i as f64 + stagger) / m as f64;
            let p = SpherePoint::Finite(C::from_polar(modulus, theta));
            points.push((p, w));
        }
    }
    SphereSampleSet::from_points(points)
}

/// Preimage counts of `w` under `f` inside `D`: with multiplicity and
/// distinct (roots closer than 1e-7 times the domain diameter merge).
pub fn covering_count(
    f: &RationalFunc,
    w: SpherePoint,
    domain: &Domain2D,
) -> Result<(usize, usize), CoveringError> {
    // For |w| > 1 count preimages of 1/w under 1/f instead; the root set
    // of q - (1/w) p is identical to that of p - w q but conditioned.
    let h = match w {
        SpherePoint::Infinity => f.den().clone(),
        SpherePoint::Finite(w) => {
            if w.norm() <= 1.0 {
                f.num().sub(&f.den().scale(w))
            } else {
                let wi = w.inv();
                f.den().sub(&f.num().scale(wi))
            }
        }
    };
    let h = h.trim_leading(1e-12);
    if h.is_zero() {
        return Err(CoveringError::DegenerateTarget);
    }
    if h.degree() == Some(0) {
        return Ok((0, 0));
    }
    let roots = poly_roots(h.coeffs()).map_err(CoveringError::Roots)?;
    let mut inside: Vec<C> = Vec::new();
    for r in roots {
        let d = domain.boundary_distance(r);
        if d.abs() < 1e-9 {
            return Err(CoveringError::BoundaryRoot { root: r });
        }
        if d > 0.0 {
            inside.push(r);
        }
    }
    let with_multiplicity = inside.len();
    let tol = 1e-7 * domain.diameter();
    let mut representatives: Vec<C> = Vec::new();
    for r in inside {
        if !representatives.iter().any(|&s| (r - s).norm() <= tol) {
            representatives.push(r);
        }
    }
    Ok((with_multiplicity, representatives.len()))
}

/// Integrates the covering number over the sphere sample grid:
/// (1/pi) * sum_w n_f(w, D) * weight(w). Independent estimate of the
/// normalized spherical area of f over D.
pub fn covering_area_oracle(
    f: &RationalFunc,
    domain: &Domain2D,
    sphere_grid_resolution: usize,
) -> Result<f64, CoveringError> {
    if sphere_grid_resolution < 16 {
        return Err(CoveringError::ResolutionTooLow(sphere_grid_resolution));
    }
    if f.degree() > 6 {
        return Err(CoveringError::DegreeTooHigh(f.degree()));
    }
    domain.validate()?;
    let grid = equal_area_sphere_grid(sphere_grid_resolution);
    // Per-sample counts in parallel; the sum runs in grid order so the
    // result does not depend on the thread count.
    let terms: Vec<Result<f64, CoveringError>> = grid
        .points
        .par_iter()
        .map(|&(w, weight)| covering_count(f, w, domain).map(|(n, _)| n as f64 * weight))
        .collect();
    let mut acc = 0.0;
    for t in terms {
        acc += t?;
    }
    Ok(acc / std::f64::consts::PI)
}

/// The low-multiplicity set construction: given an area bound C, let m
/// be the largest integer <= C; the sphere points covered at most m
/// times (distinct count) must fill measure at least
/// eps = pi * (1 - C/(m+1)), up to grid error.
#[derive(Debug, Clone, Serialize)]
pub struct CoveringReport {
    pub m: u32,
    pub epsilon: f64,
    pub measure_low: f64,
    pub sampled_e: SphereSampleSet,
}

pub fn low_multiplicity_report(
    f: &RationalFunc,
    domain: &Domain2D,
    c_bound: f64,
    resolution: usize,
) -> Result<CoveringReport, CoveringError> {
    if resolution < 16 {
        return Err(CoveringError::ResolutionTooLow(resolution));
    }
    if !(c_bound > 0.0) {
        return Err(CoveringError::AreaBoundViolated {
            area: f64::NAN,
            bound: c_bound,
        });
    }
    let mf = MeroFunc::Rational(f.clone());
    let area = quadrature::spherical_area(&mf, domain, 1e-6)?;
    if area.value > c_bound + 1e-3 {
        return Err(CoveringError::AreaBoundViolated {
            area: area.value,
            bound: c_bound,
        });
    }
    let m = c_bound.floor() as u32;
    let epsilon = std::f64::consts::PI * (1.0 - c_bound / (m as f64 + 1.0));
    let grid = equal_area_sphere_grid(resolution);
    let mut kept = Vec::new();
    for &(w, weight) in &grid.points {
        let (_, distinct) = covering_count(f, w, domain)?;
        if distinct <= m as usize {
            kept.push((w, weight));
        }
    }
    let sampled_e = SphereSampleSet::from_points(kept);
    Ok(CoveringReport {
        m,
        epsilon,
        measure_low: sampled_e.total_weight,
        sampled_e,
    })
}

/// Three pairwise separated points inside a sample set of weight at
/// least `alpha`, by greedy farthest-point selection plus one polish
/// sweep over each slot. `delta_target` is the separation the planar
/// pigeonhole argument guarantees for measure alpha.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SeparatedTriple {
    pub a: SpherePoint,
    pub b: SpherePoint,
    pub c: SpherePoint,
    pub achieved_delta: f64,
    pub delta_target: f64,
}

pub fn three_separated_points(
    e: &SphereSampleSet,
    alpha: f64,
) -> Result<SeparatedTriple, CoveringError> {
    if !(alpha > 0.0) || e.total_weight < alpha {
        return Err(CoveringError::InsufficientMeasure {
            total: e.total_weight,
            alpha,
        });
    }
    let pts: Vec<SpherePoint> = e.points.iter().map(|&(p, _)| p).collect();
    // Need three points that are pairwise strictly apart.
    let argmax = |score: &dyn Fn(SpherePoint) -> f64| -> usize {
        let mut best = 0usize;
        let mut best_v = f64::NEG_INFINITY;
        for (i, &p) in pts.iter().enumerate() {
            let v = score(p);
            if v > best_v {
                best_v = v;
                best = i;
            }
        }
        best
    };
    let mut a = pts[0];
    let mut b = pts[argmax(&|p| chordal_distance(a, p))];
    let mut c = pts[argmax(&|p| chordal_distance(a, p).min(chordal_distance(b, p)))];
    // One polish sweep: re-pick each slot against the other two.
    a = pts[argmax(&|p| chordal_distance(p, b).min(chordal_distance(p, c)))];
    b = pts[argmax(&|p| chordal_distance(a, p).min(chordal_distance(p, c)))];
    c = pts[argmax(&|p| chordal_distance(a, p).min(chordal_distance(b, p)))];
    let achieved_delta = chordal_distance(a, b)
        .min(chordal_distance(a, c))
        .min(chordal_distance(b, c));
    if achieved_delta <= 0.0 {
        return Err(CoveringError::DegenerateSet);
    }
    let delta_target = (alpha / std::f64::consts::PI).sqrt() / 2.0f64.sqrt();
    Ok(SeparatedTriple {
        a,
        b,
        c,
        achieved_delta,
        delta_target,
    })
}
