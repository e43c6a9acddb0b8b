//! Finite-difference side of the curvature equation.
//!
//! For a meromorphic f without critical points, u = log f^# solves
//! -Delta u = 4 e^{2u}. This module verifies that identity on grids
//! (liouville_residual), solves the Dirichlet problem
//! -Delta u = V e^{2u} by damped Newton with a direct banded solver
//! (solve_liouville), checks the discrete mean-value inequality
//! (superharmonic_check), and tabulates how log f_n^# blows up along a
//! family schedule (blowup_demo).

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::funcmodel::{FamilySpec, MeroFunc};
use crate::numeric::banded::BandedLU;
use crate::numeric::eigen::poly_roots;

type C = Complex64;

/// Below this the logarithm is meaningless at grid scale: the function
/// has a critical point (or pole of multiplicity > 1) nearby.
const CRITICAL_FLOOR: f64 = 1e-8;

const NEWTON_CAP: usize = 200;

#[derive(Debug, Error)]
pub enum LiouvilleError {
    #[error("grid invalid: {0}")]
    GridInvalid(String),
    #[error("spherical derivative vanishes at {} grid node(s); log f# undefined there", nodes.len())]
    CriticalPoint { nodes: Vec<C> },
    #[error("bad input data: {0}")]
    InvalidData(String),
    #[error("Newton stalled at residual {residual:.3e} after {iters} iterations")]
    NewtonDiverged {
        residual: f64,
        iters: usize,
        best: Box<PDESolution>,
    },
    #[error("evaluation failed: {0}")]
    Func(String),
    #[error("linear solve failed: singular pivot")]
    Singular,
}

/// Uniform node grid on a rectangle, boundary nodes included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid2D {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Grid2D {
    pub fn new(
        x0: f64,
        x1: f64,
        y0: f64,
        y1: f64,
        nx: usize,
        ny: usize,
    ) -> Result<Self, LiouvilleError> {
        if !(x0.is_finite() && x1.is_finite() && y0.is_finite() && y1.is_finite() && x0 < x1 && y0 < y1)
        {
            return Err(LiouvilleError::GridInvalid(
                "rectangle must be finite with positive extent".into(),
            ));
        }
        if nx < 8 || ny < 8 {
            return Err(LiouvilleError::GridInvalid(format!(
                "need at least 8 nodes per side, got {nx} x {ny}"
            )));
        }
        let hx = (x1 - x0) / (nx - 1) as f64;
        let hy = (y1 - y0) / (ny - 1) as f64;
        if (hx - hy).abs() > 1e-12 * hx.max(hy) {
            return Err(LiouvilleError::GridInvalid(format!(
                "spacing must be square: hx = {hx:.6e}, hy = {hy:.6e}"
            )));
        }
        Ok(Grid2D {
            x0,
            x1,
            y0,
            y1,
            nx,
            ny,
        })
    }

    pub fn h(&self) -> f64 {
        (self.x1 - self.x0) / (self.nx - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, i: usize, j: usize) -> C {
        C::new(
            self.x0 + i as f64 * self.h(),
            self.y0 + j as f64 * self.h(),
        )
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn is_interior(&self, i: usize, j: usize) -> bool {
        i > 0 && j > 0 && i + 1 < self.nx && j + 1 < self.ny
    }

    /// Header naming the geometry fields, their values, then the grid
    /// rows (row-major).
    pub fn values_to_csv(&self, values: &[f64]) -> String {
        let mut out = String::from("x0,x1,y0,y1,nx,ny\n");
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{},{}\n",
            self.x0, self.x1, self.y0, self.y1, self.nx, self.ny
        ));
        for j in 0..self.ny {
            let row: Vec<String> = (0..self.nx)
                .map(|i| {
                    let v = values[self.index(i, j)];
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

#[derive(Debug, Clone, Serialize)]
pub struct PDESolution {
    /// Full grid, boundary values included, row-major.
    pub u: Vec<f64>,
    pub residual_norm: f64,
    pub newton_iters: usize,
    pub converged: bool,
}

fn sph_derivs(f: &MeroFunc, g: &Grid2D) -> Result<Vec<f64>, LiouvilleError> {
    let mut out = Vec::with_capacity(g.len());
    for j in 0..g.ny {
        for i in 0..g.nx {
            let jet = f
                .jet(g.node(i, j))
                .map_err(|e| LiouvilleError::Func(e.to_string()))?;
            out.push(jet.sph_deriv);
        }
    }
    Ok(out)
}

fn critical_nodes(g: &Grid2D, fs: &[f64], skip: impl Fn(C) -> bool) -> Vec<C> {
    let mut nodes = Vec::new();
    for j in 0..g.ny {
        for i in 0..g.nx {
            let z = g.node(i, j);
            if skip(z) {
                continue;
            }
            if fs[g.index(i, j)] <= CRITICAL_FLOOR {
                nodes.push(z);
            }
        }
    }
    nodes
}

/// r = -Delta_h log f# - 4 (f#)^2 at interior nodes (NaN on the
/// boundary); max |r| = O(h^2) where f has no critical points.
pub fn liouville_residual(f: &MeroFunc, g: &Grid2D) -> Result<Vec<f64>, LiouvilleError> {
    let fs = sph_derivs(f, g)?;
    let bad = critical_nodes(g, &fs, |_| false);
    if !bad.is_empty() {
        return Err(LiouvilleError::CriticalPoint { nodes: bad });
    }
    let u: Vec<f64> = fs.iter().map(|v| v.ln()).collect();
    let h2 = g.h() * g.h();
    let mut r = vec![f64::NAN; g.len()];
    for j in 1..g.ny - 1 {
        for i in 1..g.nx - 1 {
            let k = g.index(i, j);
            let lap = (u[k - 1] + u[k + 1] + u[k - g.nx] + u[k + g.nx] - 4.0 * u[k]) / h2;
            r[k] = -lap - 4.0 * fs[k] * fs[k];
        }
    }
    Ok(r)
}

/// Damped Newton for -Delta_h u = V e^{2u} with Dirichlet data, started
/// from the discrete-harmonic extension of the boundary values.
///
/// `v` and `boundary` are full-grid arrays; only interior entries of
/// `v` and boundary entries of `boundary` are read.
pub fn solve_liouville(
    v: &[f64],
    boundary: &[f64],
    g: &Grid2D,
) -> Result<PDESolution, LiouvilleError> {
    if v.len() != g.len() || boundary.len() != g.len() {
        return Err(LiouvilleError::InvalidData(format!(
            "grid has {} nodes, got v: {}, boundary: {}",
            g.len(),
            v.len(),
            boundary.len()
        )));
    }
    for j in 0..g.ny {
        for i in 0..g.nx {
            let k = g.index(i, j);
            if g.is_interior(i, j) {
                if !v[k].is_finite() || v[k] < 0.0 {
                    return Err(LiouvilleError::InvalidData(format!(
                        "V must be finite and nonnegative, got {} at node ({i},{j})",
                        v[k]
                    )));
                }
            } else if !boundary[k].is_finite() {
                return Err(LiouvilleError::InvalidData(format!(
                    "boundary value {} at node ({i},{j})",
                    boundary[k]
                )));
            }
        }
    }

    let (nx, ny) = (g.nx, g.ny);
    let (mx, my) = (nx - 2, ny - 2);
    let n_int = mx * my;
    let h2 = g.h() * g.h();
    let idx = |i: usize, j: usize| (j - 1) * mx + (i - 1);

    // Full-grid state with fixed boundary entries.
    let mut u: Vec<f64> = boundary.to_vec();
    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            u[g.index(i, j)] = 0.0;
        }
    }

    // F(u) restricted to interior nodes.
    let residual = |u: &[f64]| -> Vec<f64> {
        let mut r = vec![0.0; n_int];
        for j in 1..ny - 1 {
            for i in 1..nx - 1 {
                let k = g.index(i, j);
                let lap =
                    (u[k - 1] + u[k + 1] + u[k - nx] + u[k + nx] - 4.0 * u[k]) / h2;
                r[idx(i, j)] = -lap - v[k] * (2.0 * u[k]).exp();
            }
        }
        r
    };
    let norm_inf = |r: &[f64]| r.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    let scale = |u: &[f64]| 1.0 + u.iter().fold(0.0f64, |m, &x| m.max(x.abs()));

    // Initial iterate: discrete-harmonic extension (one linear solve).
    {
        let mut lap = BandedLU::new(n_int, mx, mx);
        let mut rhs = vec![0.0; n_int];
        for j in 1..ny - 1 {
            for i in 1..nx - 1 {
                let row = idx(i, j);
                lap.set(row, row, 4.0 / h2);
                for (oi, oj) in [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)] {
                    if g.is_interior(oi, oj) {
                        lap.set(row, idx(oi, oj), -1.0 / h2);
                    } else {
                        rhs[row] += u[g.index(oi, oj)] / h2;
                    }
                }
            }
        }
        lap.factor().map_err(|_| LiouvilleError::Singular)?;
        lap.solve(&mut rhs);
        for j in 1..ny - 1 {
            for i in 1..nx - 1 {
                u[g.index(i, j)] = rhs[idx(i, j)];
            }
        }
    }

    let mut res = residual(&u);
    let mut res_norm = norm_inf(&res);
    let mut best = (u.clone(), res_norm);
    let mut iters = 0usize;
    while res_norm > 1e-10 * scale(&u) {
        if iters >= NEWTON_CAP {
            let (bu, bn) = best;
            return Err(LiouvilleError::NewtonDiverged {
                residual: bn,
                iters,
                best: Box::new(PDESolution {
                    u: bu,
                    residual_norm: bn,
                    newton_iters: iters,
                    converged: false,
                }),
            });
        }
        iters += 1;
        // J = -Delta_h - diag(2 V e^{2u}); solve J delta = -F.
        let mut jac = BandedLU::new(n_int, mx, mx);
        let mut rhs = vec![0.0; n_int];
        for j in 1..ny - 1 {
            for i in 1..nx - 1 {
                let row = idx(i, j);
                let k = g.index(i, j);
                jac.set(row, row, 4.0 / h2 - 2.0 * v[k] * (2.0 * u[k]).exp());
                for (oi, oj) in [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)] {
                    if g.is_interior(oi, oj) {
                        jac.set(row, idx(oi, oj), -1.0 / h2);
                    }
                }
                rhs[row] = -res[idx(i, j)];
            }
        }
        jac.factor().map_err(|_| LiouvilleError::Singular)?;
        jac.solve(&mut rhs);

        // Halve the step until the residual actually decreases.
        let mut t = 1.0f64;
        let mut accepted = false;
        while t >= 2.0f64.powi(-30) {
            let mut trial = u.clone();
            for j in 1..ny - 1 {
                for i in 1..nx - 1 {
                    trial[g.index(i, j)] += t * rhs[idx(i, j)];
                }
            }
            let trial_res = residual(&trial);
            let trial_norm = norm_inf(&trial_res);
            if trial_norm < res_norm {
                u = trial;
                res = trial_res;
                res_norm = trial_norm;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if res_norm < best.1 {
            best = (u.clone(), res_norm);
        }
        if !accepted {
            let (bu, bn) = best;
            return Err(LiouvilleError::NewtonDiverged {
                residual: bn,
                iters,
                best: Box::new(PDESolution {
                    u: bu,
                    residual_norm: bn,
                    newton_iters: iters,
                    converged: false,
                }),
            });
        }
    }
    Ok(PDESolution {
        residual_norm: res_norm,
        newton_iters: iters,
        converged: true,
        u,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SuperharmonicReport {
    pub violations: usize,
    /// Most negative margin u - mean(4 neighbors) seen (0 when every
    /// node satisfies the inequality with room to spare).
    pub worst: f64,
    /// Nodes excluded because f# vanishes at them or a neighbor.
    pub excluded: Vec<C>,
}

/// Mean-value inequality for raw grid values: at interior nodes,
/// u >= mean of the 4 neighbors - 1e-8 * (1 + max|u|).
pub fn superharmonic_check_values(u: &[f64], g: &Grid2D) -> (usize, f64) {
    let tol = 1e-8 * (1.0 + u.iter().fold(0.0f64, |m, &x| m.max(x.abs())));
    let mut violations = 0usize;
    let mut worst = 0.0f64;
    for j in 1..g.ny - 1 {
        for i in 1..g.nx - 1 {
            let k = g.index(i, j);
            let mean = 0.25 * (u[k - 1] + u[k + 1] + u[k - g.nx] + u[k + g.nx]);
            let margin = u[k] - mean;
            if margin < worst {
                worst = margin;
            }
            if margin < -tol {
                violations += 1;
            }
        }
    }
    (violations, worst)
}

/// Mean-value inequality for u = log f#. Nodes where f# is below the
/// critical floor (and their stencil dependents) are excluded and
/// reported rather than failing the whole check.
pub fn superharmonic_check(
    f: &MeroFunc,
    g: &Grid2D,
) -> Result<SuperharmonicReport, LiouvilleError> {
    let fs = sph_derivs(f, g)?;
    let ok: Vec<bool> = fs.iter().map(|&v| v > CRITICAL_FLOOR).collect();
    let excluded: Vec<C> = critical_nodes(g, &fs, |_| false);
    let u: Vec<f64> = fs
        .iter()
        .map(|&v| if v > CRITICAL_FLOOR { v.ln() } else { 0.0 })
        .collect();
    let tol = 1e-8
        * (1.0
            + u.iter()
                .zip(&ok)
                .filter(|(_, &o)| o)
                .map(|(&x, _)| x.abs())
                .fold(0.0f64, f64::max));
    let mut violations = 0usize;
    let mut worst = 0.0f64;
    for j in 1..g.ny - 1 {
        for i in 1..g.nx - 1 {
            let k = g.index(i, j);
            if !(ok[k] && ok[k - 1] && ok[k + 1] && ok[k - g.nx] && ok[k + g.nx]) {
                continue;
            }
            let mean = 0.25 * (u[k - 1] + u[k + 1] + u[k - g.nx] + u[k + g.nx]);
            let margin = u[k] - mean;
            if margin < worst {
                worst = margin;
            }
            if margin < -tol {
                violations += 1;
            }
        }
    }
    Ok(SuperharmonicReport {
        violations,
        worst,
        excluded,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BlowupRow {
    pub n: u64,
    pub max_u: f64,
    pub min_u: f64,
    /// (1/pi) integral of e^{2 u_n} over the grid rectangle by the
    /// trapezoid rule: the member's spherical-area mass.
    pub mass: f64,
}

/// Critical points of a rational member inside the slightly enlarged
/// grid rectangle. Formula members get no exclusion holes.
fn member_holes(f: &MeroFunc, g: &Grid2D, n: u64) -> Vec<(C, f64)> {
    let Some(r) = f.as_rational() else {
        return Vec::new();
    };
    let w = r
        .num()
        .derivative()
        .mul(r.den())
        .sub(&r.num().mul(&r.den().derivative()))
        .trim_leading(1e-12);
    if w.is_zero() || w.degree() == Some(0) {
        return Vec::new();
    }
    let radius = (2.0 * g.h()).max(1.0 / (n as f64).sqrt());
    let margin = 2.0 * g.h();
    match poly_roots(w.coeffs()) {
        Ok(roots) => roots
            .into_iter()
            .filter(|z| {
                z.re >= g.x0 - margin
                    && z.re <= g.x1 + margin
                    && z.im >= g.y0 - margin
                    && z.im <= g.y1 + margin
            })
            .map(|z| (z, radius))
            .collect(),
        Err(_) => Vec::new(),
    }
}

/// One row per scheduled index: extremes of u_n = log f_n^# away from
/// shrinking holes around the member's critical points, plus the
/// trapezoid mass of e^{2 u_n} over the whole rectangle.
pub fn blowup_demo(family: &FamilySpec, g: &Grid2D) -> Result<Vec<BlowupRow>, LiouvilleError> {
    let mut rows = Vec::with_capacity(family.indices.len());
    for &n in &family.indices {
        let f = family.member(n);
        let fs = sph_derivs(&f, g)?;
        let holes = member_holes(&f, g, n);
        let in_hole = |z: C| holes.iter().any(|&(c, r)| (z - c).norm() <= r);
        let bad = critical_nodes(g, &fs, in_hole);
        if !bad.is_empty() {
            return Err(LiouvilleError::CriticalPoint { nodes: bad });
        }
        let mut max_u = f64::NEG_INFINITY;
        let mut min_u = f64::INFINITY;
        for j in 0..g.ny {
            for i in 0..g.nx {
                let z = g.node(i, j);
                if in_hole(z) {
                    continue;
                }
                let lu = fs[g.index(i, j)].ln();
                max_u = max_u.max(lu);
                min_u = min_u.min(lu);
            }
        }
        let h2 = g.h() * g.h();
        let mut mass = 0.0f64;
        for j in 0..g.ny {
            let wy = if j == 0 || j == g.ny - 1 { 0.5 } else { 1.0 };
            for i in 0..g.nx {
                let wx = if i == 0 || i == g.nx - 1 { 0.5 } else { 1.0 };
                let v = fs[g.index(i, j)];
                mass += wx * wy * v * v;
            }
        }
        mass *= h2 / std::f64::consts::PI;
        rows.push(BlowupRow {
            n,
            max_u,
            min_u,
            mass,
        });
    }
    Ok(rows)
}
