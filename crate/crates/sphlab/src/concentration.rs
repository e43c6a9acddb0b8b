//! Bubble detection and mass accounting for indexed families.
//!
//! A family concentrates at a point p when the spherical derivatives of
//! its members blow up there while staying bounded nearby. This module
//! finds such points by regressing the per-cell local maximum of f_n^#
//! against n, estimates the mass each point absorbs (normalized so a
//! single full cover of the sphere has mass 1), identifies the limit
//! away from the concentration set, and tests whether the masses are
//! integers.
//!
//! Detection statistic: within each grid cell the local maximum is
//! computed by a constrained pattern search, not a fixed subsample.
//! A cell containing a concentration point then sees its maximum grow
//! like a power of n regardless of how the grid aligns with the point;
//! cells at distance d saturate once n exceeds 1/d and regress flat.

use std::collections::VecDeque;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::funcmodel::{FamilySpec, MeroFunc};
use crate::numeric::linear_fit;
use crate::quadrature::{self, Domain2D, QuadError};
use crate::sphere::{chordal_distance, SpherePoint};

type C = Complex64;

/// Growth exponent above which a cell is considered to be blowing up.
/// Genuine concentration gives exponent 1 at the point and near 0 one
/// saturation length away; 0.5 splits the two regimes robustly.
const GROWTH_THRESHOLD: f64 = 0.5;

/// A cluster wider than this many cells is a curve of non-normality,
/// not an isolated point.
const MAX_CLUSTER_DIAMETER: usize = 10;

/// Tolerance handed to the quadrature engine for mass integrals.
const MASS_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ConcError {
    #[error("schedule has {got} indices, need at least {needed}")]
    ScheduleTooShort { needed: usize, got: usize },
    #[error("resolution {got} too low, need at least {needed}")]
    ResolutionTooLow { needed: usize, got: usize },
    #[error(
        "family is not quasi-normal here: {clusters} flagged clusters \
         (cell size {cell_size:.4}); the flagged set is not a small finite set"
    )]
    NotQuasiNormal {
        /// Centers of every flagged cell.
        flagged: Vec<C>,
        cell_size: f64,
        clusters: usize,
    },
    #[error("no concentration at this point: alpha {alpha:.4} stays below 1 - {uncertainty:.4}")]
    NotConcentrated { alpha: f64, uncertainty: f64 },
    #[error("probe {point} too close ({distance:.4} < {required:.4})")]
    ProbeTooClose {
        point: C,
        distance: f64,
        required: f64,
    },
    #[error("bad epsilon schedule: {0}")]
    EpsSchedule(String),
    #[error("evaluation failed: {0}")]
    Func(String),
    #[error(transparent)]
    Quad(#[from] QuadError),
}

/// One detected concentration point with the evidence for it.
#[derive(Debug, Clone, Serialize)]
pub struct IrregularPoint {
    pub location: C,
    /// Fitted exponent of f_n^#(z_n) against n along the witness chain.
    pub marty_growth_exponent: f64,
    /// (n, z_n, f_n^#(z_n)) with strictly increasing derivatives.
    pub witness: Vec<(u64, C, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MassEstimate {
    pub p: C,
    pub estimate: f64,
    pub uncertainty: f64,
}

/// Full mass accounting for a family on a domain.
#[derive(Debug, Clone, Serialize)]
pub struct MassProfile {
    pub s: Vec<IrregularPoint>,
    pub alpha: Vec<MassEstimate>,
    /// Area of the largest member outside small disks around S.
    pub residual_area: f64,
    /// Declared area bound; |S| never exceeds its floor.
    pub order_bound: f64,
    pub quantized: Vec<(C, bool)>,
}

/// Limit behavior of the family at one probe point.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeLimit {
    pub probe: C,
    pub value: SpherePoint,
    /// False when the last two members disagree and show no clear
    /// drift toward infinity.
    pub converged: bool,
}

fn bounding_box(d: &Domain2D) -> (f64, f64, f64, f64) {
    match *d {
        Domain2D::Rectangle { x0, x1, y0, y1 } => (x0, x1, y0, y1),
        Domain2D::Disk { center, radius } | Domain2D::DiskMinusPoints { center, radius, .. } => (
            center.re - radius,
            center.re + radius,
            center.im - radius,
            center.im + radius,
        ),
        Domain2D::Annulus { center, r_out, .. } => (
            center.re - r_out,
            center.re + r_out,
            center.im - r_out,
            center.im + r_out,
        ),
    }
}

/// f_n^# sampled on a regular grid of cell centers over the bounding
/// box of the domain; entries outside the domain are NaN.
#[derive(Debug, Clone, Serialize)]
pub struct MartyField {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub resolution: usize,
    /// Row-major: index j * resolution + i holds the value at
    /// (x0 + (i+0.5)hx, y0 + (j+0.5)hy).
    pub values: Vec<f64>,
}

impl MartyField {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.resolution + i]
    }

    pub fn point(&self, i: usize, j: usize) -> C {
        let hx = (self.x1 - self.x0) / self.resolution as f64;
        let hy = (self.y1 - self.y0) / self.resolution as f64;
        C::new(
            self.x0 + (i as f64 + 0.5) * hx,
            self.y0 + (j as f64 + 0.5) * hy,
        )
    }

    /// Largest unmasked entry with its location.
    pub fn max(&self) -> Option<(C, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (k, &v) in self.values.iter().enumerate() {
            if v.is_nan() {
                continue;
            }
            if best.map_or(true, |(_, bv)| v > bv) {
                best = Some((k, v));
            }
        }
        best.map(|(k, v)| (self.point(k % self.resolution, k / self.resolution), v))
    }

    /// Header line naming the geometry fields, one line with their
    /// values, then the grid rows (row-major, NaN for masked cells).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x0,x1,y0,y1,resolution\n");
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
            self.x0, self.x1, self.y0, self.y1, self.resolution
        ));
        for j in 0..self.resolution {
            let row: Vec<String> = (0..self.resolution)
                .map(|i| {
                    let v = self.value(i, j);
                    if v.is_nan() {
                        "nan".to_string()
                    } else {
                        format!("{v:.16e}")
                    }
                })
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

pub fn marty_field(
    f: &MeroFunc,
    d: &Domain2D,
    resolution: usize,
) -> Result<MartyField, ConcError> {
    if resolution < 8 {
        return Err(ConcError::ResolutionTooLow {
            needed: 8,
            got: resolution,
        });
    }
    let (x0, x1, y0, y1) = bounding_box(d);
    let hx = (x1 - x0) / resolution as f64;
    let hy = (y1 - y0) / resolution as f64;
    let mut values = vec![f64::NAN; resolution * resolution];
    for j in 0..resolution {
        for i in 0..resolution {
            let z = C::new(x0 + (i as f64 + 0.5) * hx, y0 + (j as f64 + 0.5) * hy);
            if !d.contains(z) {
                continue;
            }
            let jet = f.jet(z).map_err(|e| ConcError::Func(e.to_string()))?;
            values[j * resolution + i] = jet.sph_deriv;
        }
    }
    Ok(MartyField {
        x0,
        x1,
        y0,
        y1,
        resolution,
        values,
    })
}

/// Spherical derivative, or None where evaluation fails.
fn deriv_at(f: &MeroFunc, z: C) -> Option<f64> {
    f.jet(z).ok().map(|j| j.sph_deriv)
}

/// Pattern search maximizing f^# over rect (intersected with the
/// domain when given). Deterministic: fixed move order, strict
/// improvement, step halving until min_step.
fn pattern_max(
    f: &MeroFunc,
    start: C,
    mut step: f64,
    min_step: f64,
    rect: (f64, f64, f64, f64),
    d: Option<&Domain2D>,
) -> Option<(C, f64)> {
    let (x0, x1, y0, y1) = rect;
    let admissible = |z: C| {
        z.re >= x0 && z.re <= x1 && z.im >= y0 && z.im <= y1 && d.map_or(true, |d| d.contains(z))
    };
    if !admissible(start) {
        return None;
    }
    let mut best = start;
    let mut best_v = deriv_at(f, start)?;
    let mut evals = 0usize;
    while step >= min_step && evals < 400 {
        let mut moved = false;
        for (dx, dy) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
            let z = C::new(
                (best.re + dx).clamp(x0, x1),
                (best.im + dy).clamp(y0, y1),
            );
            if !admissible(z) {
                continue;
            }
            evals += 1;
            if let Some(v) = deriv_at(f, z) {
                if v > best_v {
                    best = z;
                    best_v = v;
                    moved = true;
                }
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    Some((best, best_v))
}

/// Local maximum of f^# over one grid cell: a 3x3 interior seed grid
/// followed by pattern search clamped to the cell. Returns None when
/// no point of the cell lies in the domain.
fn cell_local_max(f: &MeroFunc, rect: (f64, f64, f64, f64), d: &Domain2D) -> Option<f64> {
    let (x0, x1, y0, y1) = rect;
    let w = (x1 - x0).max(y1 - y0);
    let mut seed: Option<(C, f64)> = None;
    for ui in 0..3 {
        for vi in 0..3 {
            let z = C::new(
                x0 + (0.25 + 0.25 * ui as f64) * (x1 - x0),
                y0 + (0.25 + 0.25 * vi as f64) * (y1 - y0),
            );
            if !d.contains(z) {
                continue;
            }
            if let Some(v) = deriv_at(f, z) {
                if seed.map_or(true, |(_, sv)| v > sv) {
                    seed = Some((z, v));
                }
            }
        }
    }
    let (z0, _) = seed?;
    pattern_max(f, z0, w / 4.0, w / 512.0, rect, Some(d)).map(|(_, v)| v)
}

pub fn detect_irregular_points(
    family: &FamilySpec,
    d: &Domain2D,
    resolution: usize,
) -> Result<Vec<IrregularPoint>, ConcError> {
    if family.indices.len() < 4 {
        return Err(ConcError::ScheduleTooShort {
            needed: 4,
            got: family.indices.len(),
        });
    }
    if resolution < 8 {
        return Err(ConcError::ResolutionTooLow {
            needed: 8,
            got: resolution,
        });
    }
    let (x0, x1, y0, y1) = bounding_box(d);
    let hx = (x1 - x0) / resolution as f64;
    let hy = (y1 - y0) / resolution as f64;
    let members: Vec<(u64, MeroFunc)> = family
        .indices
        .iter()
        .map(|&n| (n, family.member(n)))
        .collect();
    let log_n: Vec<f64> = members.iter().map(|(n, _)| (*n as f64).ln()).collect();

    let mut flagged = vec![false; resolution * resolution];
    for j in 0..resolution {
        for i in 0..resolution {
            let rect = (
                x0 + i as f64 * hx,
                x0 + (i + 1) as f64 * hx,
                y0 + j as f64 * hy,
                y0 + (j + 1) as f64 * hy,
            );
            let mut log_max = Vec::with_capacity(members.len());
            for (_, f) in &members {
                match cell_local_max(f, rect, d) {
                    Some(v) => log_max.push(v.max(1e-300).ln()),
                    None => break,
                }
            }
            if log_max.len() != members.len() {
                continue;
            }
            let (_, slope) = linear_fit(&log_n, &log_max);
            if slope > GROWTH_THRESHOLD {
                flagged[j * resolution + i] = true;
            }
        }
    }

    // Cluster flagged cells by 8-adjacency.
    let mut seen = vec![false; resolution * resolution];
    let mut clusters: Vec<Vec<(usize, usize)>> = Vec::new();
    for j in 0..resolution {
        for i in 0..resolution {
            let k = j * resolution + i;
            if !flagged[k] || seen[k] {
                continue;
            }
            let mut cluster = Vec::new();
            let mut queue = VecDeque::from([(i, j)]);
            seen[k] = true;
            while let Some((ci, cj)) = queue.pop_front() {
                cluster.push((ci, cj));
                for dj in -1i64..=1 {
                    for di in -1i64..=1 {
                        let (ni, nj) = (ci as i64 + di, cj as i64 + dj);
                        if ni < 0 || nj < 0 || ni >= resolution as i64 || nj >= resolution as i64 {
                            continue;
                        }
                        let nk = nj as usize * resolution + ni as usize;
                        if flagged[nk] && !seen[nk] {
                            seen[nk] = true;
                            queue.push_back((ni as usize, nj as usize));
                        }
                    }
                }
            }
            clusters.push(cluster);
        }
    }

    // A finite concentration set is only guaranteed under the area
    // bound; too many clusters or an extended cluster means the family
    // is not quasi-normal here.
    let cluster_cap = family
        .area_bound
        .map(|c| c.max(0.0).floor() as usize)
        .unwrap_or(usize::MAX);
    let too_wide = clusters.iter().any(|cl| {
        let di = cl.iter().map(|&(i, _)| i).max().unwrap() - cl.iter().map(|&(i, _)| i).min().unwrap();
        let dj = cl.iter().map(|&(_, j)| j).max().unwrap() - cl.iter().map(|&(_, j)| j).min().unwrap();
        di.max(dj) > MAX_CLUSTER_DIAMETER
    });
    if clusters.len() > cluster_cap || too_wide {
        let centers: Vec<C> = flagged
            .iter()
            .enumerate()
            .filter(|(_, &f)| f)
            .map(|(k, _)| {
                C::new(
                    x0 + ((k % resolution) as f64 + 0.5) * hx,
                    y0 + ((k / resolution) as f64 + 0.5) * hy,
                )
            })
            .collect();
        return Err(ConcError::NotQuasiNormal {
            flagged: centers,
            cell_size: hx.max(hy),
            clusters: clusters.len(),
        });
    }

    let mut points = Vec::with_capacity(clusters.len());
    let (_, last) = members.last().expect("schedule nonempty");
    for cluster in &clusters {
        let i_min = cluster.iter().map(|&(i, _)| i).min().unwrap();
        let i_max = cluster.iter().map(|&(i, _)| i).max().unwrap();
        let j_min = cluster.iter().map(|&(_, j)| j).min().unwrap();
        let j_max = cluster.iter().map(|&(_, j)| j).max().unwrap();
        // Half-cell margin so a peak on the cluster edge stays inside.
        let rect = (
            (x0 + i_min as f64 * hx - 0.5 * hx).max(x0),
            (x0 + (i_max + 1) as f64 * hx + 0.5 * hx).min(x1),
            (y0 + j_min as f64 * hy - 0.5 * hy).max(y0),
            (y0 + (j_max + 1) as f64 * hy + 0.5 * hy).min(y1),
        );
        // One 4x-finer pass over the cluster box seeds the polish.
        let nx = 4 * (i_max - i_min + 1);
        let ny = 4 * (j_max - j_min + 1);
        let mut seed: Option<(C, f64)> = None;
        for fj in 0..ny {
            for fi in 0..nx {
                let z = C::new(
                    rect.0 + (fi as f64 + 0.5) * (rect.1 - rect.0) / nx as f64,
                    rect.2 + (fj as f64 + 0.5) * (rect.3 - rect.2) / ny as f64,
                );
                if !d.contains(z) {
                    continue;
                }
                if let Some(v) = deriv_at(last, z) {
                    if seed.map_or(true, |(_, sv)| v > sv) {
                        seed = Some((z, v));
                    }
                }
            }
        }
        let Some((seed_z, _)) = seed else { continue };
        let min_step = 1e-12 * (hx.max(hy));
        let Some((location, _)) = pattern_max(last, seed_z, hx.max(hy) / 4.0, min_step, rect, Some(d))
        else {
            continue;
        };

        // Witness chain: each member's argmax near the location.
        let mut raw = Vec::with_capacity(members.len());
        for (n, f) in &members {
            if let Some((zn, vn)) = pattern_max(f, location, hx.max(hy) / 4.0, min_step, rect, Some(d)) {
                raw.push((*n, zn, vn));
            }
        }
        let exponent = {
            let xs: Vec<f64> = raw.iter().map(|(n, _, _)| (*n as f64).ln()).collect();
            let ys: Vec<f64> = raw.iter().map(|(_, _, v)| v.max(1e-300).ln()).collect();
            linear_fit(&xs, &ys).1
        };
        let mut witness: Vec<(u64, C, f64)> = Vec::with_capacity(raw.len());
        for entry in raw {
            if witness.last().map_or(true, |&(_, _, prev)| entry.2 > prev) {
                witness.push(entry);
            }
        }
        points.push(IrregularPoint {
            location,
            marty_growth_exponent: exponent,
            witness,
        });
    }
    points.sort_by(|a, b| {
        (a.location.re, a.location.im)
            .partial_cmp(&(b.location.re, b.location.im))
            .expect("finite locations")
    });
    Ok(points)
}

fn validate_eps_schedule(eps: &[f64]) -> Result<(), ConcError> {
    if eps.len() < 3 {
        return Err(ConcError::EpsSchedule(format!(
            "need at least 3 radii, got {}",
            eps.len()
        )));
    }
    if eps.iter().any(|&e| !e.is_finite() || e <= 0.0) {
        return Err(ConcError::EpsSchedule("radii must be positive".into()));
    }
    if eps.windows(2).any(|w| w[0] <= w[1]) {
        return Err(ConcError::EpsSchedule("radii must strictly decrease".into()));
    }
    Ok(())
}

/// Concentrated mass at p, normalized so one full cover of the sphere
/// is 1, with a conservative uncertainty.
///
/// For each radius the mass of the shrinking disk is extrapolated in n
/// from the last two members (two-point fit of I(n) = a - b/n^2). The
/// background left by the limit density is estimated on the outer
/// half-annulus with the same extrapolation, which cancels the tail
/// the bubble itself leaks there (the tail dies like 1/n^2 while a
/// genuine background survives), scaled 4/3 to the full disk and
/// subtracted. The corrected a_eps are extrapolated linearly to
/// eps = 0. The uncertainty adds the worst fit residual, the largest
/// subtraction magnitude, the Richardson disagreement against the
/// previous index pair, and the quadrature error bounds.
pub fn estimate_mass(
    family: &FamilySpec,
    p: C,
    eps_schedule: &[f64],
    d: &Domain2D,
) -> Result<(f64, f64), ConcError> {
    validate_eps_schedule(eps_schedule)?;
    if family.indices.len() < 2 {
        return Err(ConcError::ScheduleTooShort {
            needed: 2,
            got: family.indices.len(),
        });
    }
    let margin = d.boundary_distance(p);
    let eps_max = eps_schedule[0];
    if margin < eps_max - 1e-12 {
        return Err(ConcError::ProbeTooClose {
            point: p,
            distance: margin,
            required: eps_max,
        });
    }
    let k = family.indices.len();
    let (n1, n2) = (family.indices[k - 2], family.indices[k - 1]);
    let f1 = family.member(n1);
    let f2 = family.member(n2);
    let (w1, w2) = ((n1 as f64).powi(2), (n2 as f64).powi(2));
    let prev = (k >= 3).then(|| {
        let n0 = family.indices[k - 3];
        (family.member(n0), (n0 as f64).powi(2))
    });

    let mut a_vals = Vec::with_capacity(eps_schedule.len());
    let mut max_residual = 0.0f64;
    let mut spread_n = 0.0f64;
    let mut quad_err = 0.0f64;
    for &eps in eps_schedule {
        let disk = Domain2D::disk(p, eps).map_err(ConcError::Quad)?;
        let i1 = quadrature::spherical_area(&f1, &disk, MASS_TOL)?;
        let i2 = quadrature::spherical_area(&f2, &disk, MASS_TOL)?;
        let rich = (w2 * i2.value - w1 * i1.value) / (w2 - w1);
        let ann = Domain2D::annulus(p, eps / 2.0, eps).map_err(ConcError::Quad)?;
        let b1 = quadrature::spherical_area(&f1, &ann, MASS_TOL)?;
        let b2 = quadrature::spherical_area(&f2, &ann, MASS_TOL)?;
        let bg_rich = (w2 * b2.value - w1 * b1.value) / (w2 - w1);
        // Scale the outer half-annulus to the full disk assuming a
        // locally flat background: area ratio 4/3. A negative
        // extrapolation is noise; subtract nothing but keep its
        // magnitude in the uncertainty.
        let raw = bg_rich * 4.0 / 3.0;
        let residual = raw.max(0.0);
        max_residual = max_residual.max(raw.abs());
        // Richardson amplifies errors by w/(w2 - w1).
        quad_err += (w2 * i2.error_estimate + w1 * i1.error_estimate) / (w2 - w1)
            + (w2 * b2.error_estimate + w1 * b1.error_estimate) / (w2 - w1) * 4.0 / 3.0;
        if let Some((f0, w0)) = &prev {
            let i0 = quadrature::spherical_area(f0, &disk, MASS_TOL)?;
            let rich_prev = (w1 * i1.value - w0 * i0.value) / (w1 - w0);
            spread_n = spread_n.max((rich - rich_prev).abs());
        }
        a_vals.push(rich - residual);
    }
    let (intercept, slope) = linear_fit(eps_schedule, &a_vals);
    let fit_residual = eps_schedule
        .iter()
        .zip(&a_vals)
        .map(|(&e, &a)| (a - (intercept + slope * e)).abs())
        .fold(0.0f64, f64::max);
    let alpha = intercept;
    let uncertainty = fit_residual + max_residual + spread_n + quad_err;
    if alpha < 1.0 - uncertainty {
        return Err(ConcError::NotConcentrated { alpha, uncertainty });
    }
    Ok((alpha, uncertainty))
}

/// Values of the family at probe points away from the concentration
/// set, judged on the last two members: agreement within 0.01 chordal
/// is convergence; otherwise a consistent drift toward the north pole
/// (distance to infinity at most 0.05 and shrunk by 0.6x) reports the
/// limit as infinity; anything else is flagged unconverged.
pub fn limit_off_s(
    family: &FamilySpec,
    d: &Domain2D,
    s: &[C],
    probes: &[C],
) -> Result<Vec<ProbeLimit>, ConcError> {
    if family.indices.len() < 2 {
        return Err(ConcError::ScheduleTooShort {
            needed: 2,
            got: family.indices.len(),
        });
    }
    let k = family.indices.len();
    let f1 = family.member(family.indices[k - 2]);
    let f2 = family.member(family.indices[k - 1]);
    let mut out = Vec::with_capacity(probes.len());
    for &probe in probes {
        let bd = d.boundary_distance(probe);
        if bd < 0.05 - 1e-12 {
            return Err(ConcError::ProbeTooClose {
                point: probe,
                distance: bd,
                required: 0.05,
            });
        }
        for &sp in s {
            let dist = (probe - sp).norm();
            if dist < 0.05 - 1e-12 {
                return Err(ConcError::ProbeTooClose {
                    point: probe,
                    distance: dist,
                    required: 0.05,
                });
            }
        }
        let v1 = f1
            .jet(probe)
            .map_err(|e| ConcError::Func(e.to_string()))?
            .value;
        let v2 = f2
            .jet(probe)
            .map_err(|e| ConcError::Func(e.to_string()))?
            .value;
        let (value, converged) = if chordal_distance(v1, v2) <= 0.01 {
            (v2, true)
        } else {
            let d1 = chordal_distance(v1, SpherePoint::Infinity);
            let d2 = chordal_distance(v2, SpherePoint::Infinity);
            if d2 <= 0.6 * d1 && d2 <= 0.05 {
                (SpherePoint::Infinity, true)
            } else {
                (v2, false)
            }
        };
        out.push(ProbeLimit {
            probe,
            value,
            converged,
        });
    }
    Ok(out)
}

/// True where the mass estimate sits within max(tol, uncertainty) of
/// an integer.
pub fn quantization_check(profile: &MassProfile, tol: f64) -> Vec<(C, bool)> {
    profile
        .alpha
        .iter()
        .map(|m| {
            let gap = (m.estimate - m.estimate.round()).abs();
            (m.p, gap <= tol.max(m.uncertainty))
        })
        .collect()
}

/// Detects the concentration set, estimates each mass, and accounts
/// for the leftover area of the largest member. Radii larger than a
/// point's distance to the boundary are dropped for that point.
pub fn mass_profile(
    family: &FamilySpec,
    d: &Domain2D,
    resolution: usize,
    eps_schedule: &[f64],
    quant_tol: f64,
) -> Result<MassProfile, ConcError> {
    validate_eps_schedule(eps_schedule)?;
    let s = detect_irregular_points(family, d, resolution)?;
    let mut alpha = Vec::with_capacity(s.len());
    for pt in &s {
        let margin = d.boundary_distance(pt.location);
        let local: Vec<f64> = eps_schedule
            .iter()
            .copied()
            .filter(|&e| e <= margin)
            .collect();
        if local.len() < 3 {
            return Err(ConcError::ProbeTooClose {
                point: pt.location,
                distance: margin,
                required: eps_schedule[eps_schedule.len() - 3],
            });
        }
        let (est, unc) = estimate_mass(family, pt.location, &local, d)?;
        alpha.push(MassEstimate {
            p: pt.location,
            estimate: est,
            uncertainty: unc,
        });
    }
    let last = family.member(family.largest_index());
    let hole = *eps_schedule.last().expect("validated nonempty");
    let residual_area = if s.is_empty() {
        quadrature::spherical_area(&last, d, MASS_TOL)?.value
    } else {
        match d {
            Domain2D::Disk { center, radius } => {
                let excluded: Vec<(C, f64)> = s.iter().map(|pt| (pt.location, hole)).collect();
                let dmp = Domain2D::disk_minus_points(*center, *radius, excluded)
                    .map_err(ConcError::Quad)?;
                quadrature::spherical_area(&last, &dmp, MASS_TOL)?.value
            }
            _ => {
                let total = quadrature::spherical_area(&last, d, MASS_TOL)?.value;
                let mut removed = 0.0;
                for pt in &s {
                    let k = Domain2D::disk(pt.location, hole).map_err(ConcError::Quad)?;
                    removed += quadrature::spherical_area(&last, &k, MASS_TOL)?.value;
                }
                (total - removed).max(0.0)
            }
        }
    };
    let mut profile = MassProfile {
        s,
        alpha,
        residual_area,
        order_bound: family.area_bound.unwrap_or(f64::INFINITY),
        quantized: Vec::new(),
    };
    profile.quantized = quantization_check(&profile, quant_tol);
    Ok(profile)
}
