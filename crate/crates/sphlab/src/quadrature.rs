//! Adaptive 2-D integration of powers of the spherical derivative.
//!
//! Cells carry a tensor Gauss-Legendre 7/15 pair; the absolute
//! difference of the two estimates drives worst-first refinement. Disks
//! and annuli integrate in polar coordinates with the Jacobian folded
//! into the integrand, so no boundary staircase appears. Cells where the
//! spherical derivative exceeds 1e3 at any node are force-refined toward
//! a floor width of 1e-7 times the domain diameter; cells at the floor
//! contribute a midpoint estimate with inflated error. All refinement
//! and summation is sequential and deterministic: reruns are
//! bit-identical.

use std::collections::BinaryHeap;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::funcmodel::MeroFunc;
use crate::numeric::{compensated_sum, gauss};

type C = Complex64;

/// Default cap on the number of leaf cells per integral.
pub const DEFAULT_CELL_BUDGET: usize = 1 << 22;

/// Spherical-derivative level above which a cell is treated as holding a
/// spike and refined regardless of its error indicator.
const SPIKE_LEVEL: f64 = 1e3;

/// Floor width as a fraction of the domain diameter.
const FLOOR_FRACTION: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Domain2D {
    Rectangle {
        x0: f64,
        x1: f64,
        y0: f64,
        y1: f64,
    },
    Disk {
        center: C,
        radius: f64,
    },
    Annulus {
        center: C,
        r_in: f64,
        r_out: f64,
    },
    /// A disk with small disks removed. A hole concentric with the
    /// outer circle turns the base into an exact annulus; remaining
    /// holes are subtracted with signed panels, which requires the
    /// integrand to be evaluable inside them.
    DiskMinusPoints {
        center: C,
        radius: f64,
        excluded: Vec<(C, f64)>,
    },
}

impl Domain2D {
    pub fn rectangle(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self, QuadError> {
        let d = Domain2D::Rectangle { x0, x1, y0, y1 };
        d.validate()?;
        Ok(d)
    }

    pub fn disk(center: C, radius: f64) -> Result<Self, QuadError> {
        let d = Domain2D::Disk { center, radius };
        d.validate()?;
        Ok(d)
    }

    pub fn annulus(center: C, r_in: f64, r_out: f64) -> Result<Self, QuadError> {
        let d = Domain2D::Annulus { center, r_in, r_out };
        d.validate()?;
        Ok(d)
    }

    pub fn disk_minus_points(
        center: C,
        radius: f64,
        excluded: Vec<(C, f64)>,
    ) -> Result<Self, QuadError> {
        let d = Domain2D::DiskMinusPoints {
            center,
            radius,
            excluded,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<(), QuadError> {
        let bad = |msg: String| Err(QuadError::InvalidDomain(msg));
        let finite = |v: f64| v.is_finite();
        match self {
            Domain2D::Rectangle { x0, x1, y0, y1 } => {
                if ![*x0, *x1, *y0, *y1].iter().all(|v| finite(*v)) {
                    return bad("rectangle bounds must be finite".into());
                }
                if x0 >= x1 || y0 >= y1 {
                    return bad(format!("empty rectangle [{x0},{x1}]x[{y0},{y1}]"));
                }
            }
            Domain2D::Disk { center, radius } => {
                if !finite(center.re) || !finite(center.im) || !finite(*radius) {
                    return bad("disk parameters must be finite".into());
                }
                if *radius <= 0.0 {
                    return bad(format!("disk radius {radius} must be positive"));
                }
            }
            Domain2D::Annulus { center, r_in, r_out } => {
                if !finite(center.re) || !finite(center.im) || !finite(*r_in) || !finite(*r_out) {
                    return bad("annulus parameters must be finite".into());
                }
                if *r_in < 0.0 || r_in >= r_out {
                    return bad(format!("annulus radii {r_in} < {r_out} violated"));
                }
            }
            Domain2D::DiskMinusPoints {
                center,
                radius,
                excluded,
            } => {
                Domain2D::Disk {
                    center: *center,
                    radius: *radius,
                }
                .validate()?;
                for (i, (p, r)) in excluded.iter().enumerate() {
                    if !finite(p.re) || !finite(p.im) || !finite(*r) || *r <= 0.0 {
                        return bad(format!("hole {i} must have finite center and positive radius"));
                    }
                    if (p - center).norm() + r >= *radius {
                        return bad(format!("hole {i} is not strictly inside the disk"));
                    }
                }
                for i in 0..excluded.len() {
                    for j in i + 1..excluded.len() {
                        let (pi, ri) = excluded[i];
                        let (pj, rj) = excluded[j];
                        if (pi - pj).norm() <= ri + rj {
                            return bad(format!("holes {i} and {j} overlap"));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Domain2D::Rectangle { x0, x1, y0, y1 } => (x1 - x0).hypot(y1 - y0),
            Domain2D::Disk { radius, .. } => 2.0 * radius,
            Domain2D::Annulus { r_out, .. } => 2.0 * r_out,
            Domain2D::DiskMinusPoints { radius, .. } => 2.0 * radius,
        }
    }

    /// Distance from `z` to the boundary, positive inside the domain and
    /// negative outside.
    pub fn boundary_distance(&self, z: C) -> f64 {
        match self {
            Domain2D::Rectangle { x0, x1, y0, y1 } => {
                let dx = (z.re - x0).min(x1 - z.re);
                let dy = (z.im - y0).min(y1 - z.im);
                if dx >= 0.0 && dy >= 0.0 {
                    dx.min(dy)
                } else {
                    // Outside: negative of the distance to the rectangle.
                    let ox = (-dx).max(0.0);
                    let oy = (-dy).max(0.0);
                    -ox.hypot(oy)
                }
            }
            Domain2D::Disk { center, radius } => radius - (z - center).norm(),
            Domain2D::Annulus { center, r_in, r_out } => {
                let d = (z - center).norm();
                (r_out - d).min(d - r_in)
            }
            Domain2D::DiskMinusPoints {
                center,
                radius,
                excluded,
            } => {
                let mut m = radius - (z - center).norm();
                for (p, r) in excluded {
                    m = m.min((z - p).norm() - r);
                }
                m
            }
        }
    }

    pub fn contains(&self, z: C) -> bool {
        self.boundary_distance(z) > 0.0
    }

    fn panels(&self) -> Vec<Panel> {
        match self {
            Domain2D::Rectangle { x0, x1, y0, y1 } => vec![Panel {
                sign: 1.0,
                kind: PanelKind::Cart {
                    x0: *x0,
                    x1: *x1,
                    y0: *y0,
                    y1: *y1,
                },
            }],
            Domain2D::Disk { center, radius } => vec![Panel::polar(1.0, *center, 0.0, *radius)],
            Domain2D::Annulus { center, r_in, r_out } => {
                vec![Panel::polar(1.0, *center, *r_in, *r_out)]
            }
            Domain2D::DiskMinusPoints {
                center,
                radius,
                excluded,
            } => {
                // At most one hole can contain the center (they are
                // pairwise disjoint); a concentric hole becomes the inner
                // radius of an annulus instead of a signed panel.
                let concentric = excluded
                    .iter()
                    .position(|(p, _)| (p - center).norm() <= 1e-14 * radius);
                let mut panels = Vec::new();
                match concentric {
                    Some(k) => panels.push(Panel::polar(1.0, *center, excluded[k].1, *radius)),
                    None => panels.push(Panel::polar(1.0, *center, 0.0, *radius)),
                }
                for (i, (p, r)) in excluded.iter().enumerate() {
                    if Some(i) == concentric {
                        continue;
                    }
                    panels.push(Panel::polar(-1.0, *p, 0.0, *r));
                }
                panels
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    sign: f64,
    kind: PanelKind,
}

#[derive(Debug, Clone, Copy)]
enum PanelKind {
    Cart { x0: f64, x1: f64, y0: f64, y1: f64 },
    /// Integration of g(center + r e^{i theta}) * r over theta in
    /// [0, 2pi] and r in [r0, r1]; cells subdivide this box.
    Polar { center: C, r0: f64, r1: f64 },
}

impl Panel {
    fn polar(sign: f64, center: C, r0: f64, r1: f64) -> Panel {
        Panel {
            sign,
            kind: PanelKind::Polar { center, r0, r1 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadResult {
    /// Integral divided by pi.
    pub value: f64,
    /// Bound on the quadrature error, same normalization as `value`.
    pub error_estimate: f64,
    /// Leaf cells used.
    pub cells: u64,
    pub converged: bool,
}

#[derive(Debug, Error)]
pub enum QuadError {
    #[error("cell budget exhausted before reaching tolerance (partial value {})", .partial.value)]
    BudgetExceeded { partial: QuadResult },
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// One leaf or refinable cell: a sub-box of a panel in its own
/// parameters (x/y for cartesian, theta/r for polar).
#[derive(Debug, Clone, Copy)]
struct Cell {
    panel: usize,
    u0: f64,
    u1: f64,
    v0: f64,
    v1: f64,
    coarse: f64,
    fine: f64,
    midpoint: f64,
    spike: bool,
}

struct CellEval {
    coarse: f64,
    fine: f64,
    midpoint: f64,
    spike: bool,
}

fn eval_cell(g: &dyn Fn(C) -> f64, panel: &Panel, u0: f64, u1: f64, v0: f64, v1: f64) -> CellEval {
    let um = 0.5 * (u0 + u1);
    let uh = 0.5 * (u1 - u0);
    let vm = 0.5 * (v0 + v1);
    let vh = 0.5 * (v1 - v0);
    let sample = |u: f64, v: f64| -> f64 {
        match panel.kind {
            PanelKind::Cart { .. } => g(C::new(u, v)),
            PanelKind::Polar { center, .. } => {
                // u is the angle, v the radius; the Jacobian rides along.
                let z = center + C::from_polar(v, u);
                g(z) * v
            }
        }
    };
    let mut spike_probe = 0.0f64;
    let mut tensor = |rule: &[(f64, f64)], track: bool| -> f64 {
        let mut acc = 0.0;
        for &(xu, wu) in rule {
            let u = um + uh * xu;
            let mut row = 0.0;
            for &(xv, wv) in rule {
                let v = vm + vh * xv;
                let s = sample(u, v);
                if track && s > spike_probe {
                    spike_probe = s;
                }
                row += wv * s;
            }
            acc += wu * row;
        }
        acc * uh * vh
    };
    let coarse = tensor(gauss::gl7(), false);
    let fine = tensor(gauss::gl15(), true);
    let area = 4.0 * uh * vh;
    let midpoint = sample(um, vm) * area;
    // The spike test looks at raw integrand samples; undo the Jacobian
    // scale so the threshold means the same thing in both coordinates.
    let spike = match panel.kind {
        PanelKind::Cart { .. } => spike_probe > SPIKE_LEVEL * SPIKE_LEVEL,
        PanelKind::Polar { .. } => {
            let rmax = v1.max(1e-300);
            spike_probe / rmax > SPIKE_LEVEL * SPIKE_LEVEL
        }
    };
    CellEval {
        coarse,
        fine,
        midpoint,
        spike,
    }
}

impl Cell {
    fn err(&self) -> f64 {
        (self.fine - self.coarse).abs()
    }

    /// Physical edge lengths (arc length at the outer radius for polar
    /// cells, so angular splitting stops once arcs are short).
    fn extents(&self, panel: &Panel) -> (f64, f64) {
        match panel.kind {
            PanelKind::Cart { .. } => (self.u1 - self.u0, self.v1 - self.v0),
            PanelKind::Polar { .. } => ((self.u1 - self.u0) * self.v1, self.v1 - self.v0),
        }
    }

    /// A cell is at the floor when no dimension is worth halving.
    fn width(&self, panel: &Panel) -> f64 {
        let (wu, wv) = self.extents(panel);
        wu.max(wv)
    }
}

#[derive(Debug)]
struct HeapEntry {
    forced: bool,
    err: f64,
    seq: u64,
    cell: Cell,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.seq == other.seq
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.forced
            .cmp(&other.forced)
            .then(self.err.total_cmp(&other.err))
            .then(other.seq.cmp(&self.seq))
    }
}

struct Integrator<'a> {
    g: &'a dyn Fn(C) -> f64,
    panels: Vec<Panel>,
    floor_width: f64,
    tol_raw: f64,
    budget: usize,
}

impl Integrator<'_> {
    fn run(&self) -> Result<QuadResult, QuadError> {
        let mut heap: BinaryHeap<HeapEntry> = BinaryHeap::new();
        let mut leaves: Vec<Cell> = Vec::new();
        let mut seq = 0u64;
        let mut total_err = 0.0f64;
        let mut n_forced = 0usize;
        let mut n_cells = 0usize;

        let force_tol = self.tol_raw * 1e-3;
        let push = |cell: Cell,
                        heap: &mut BinaryHeap<HeapEntry>,
                        leaves: &mut Vec<Cell>,
                        total_err: &mut f64,
                        n_forced: &mut usize,
                        seq: &mut u64| {
            let panel = &self.panels[cell.panel];
            let at_floor = cell.width(panel) <= self.floor_width;
            if at_floor {
                // Floor cells are permanent: midpoint value, error
                // widened by both rule disagreements.
                *total_err += (cell.fine - cell.midpoint).abs() + cell.err();
                leaves.push(cell);
                return;
            }
            let err = cell.err();
            *total_err += err;
            let forced = cell.spike && err > force_tol;
            if forced {
                *n_forced += 1;
            }
            heap.push(HeapEntry {
                forced,
                err,
                seq: *seq,
                cell,
            });
            *seq += 1;
        };

        for (pi, panel) in self.panels.iter().enumerate() {
            let (u0, u1, v0, v1, nu, nv) = match panel.kind {
                PanelKind::Cart { x0, x1, y0, y1 } => (x0, x1, y0, y1, 2usize, 2usize),
                PanelKind::Polar { r0, r1, .. } => {
                    (0.0, std::f64::consts::TAU, r0, r1, 4usize, 2usize)
                }
            };
            for i in 0..nu {
                for j in 0..nv {
                    let (a0, a1) = split_interval(u0, u1, i, nu);
                    let (b0, b1) = split_interval(v0, v1, j, nv);
                    let e = eval_cell(self.g, panel, a0, a1, b0, b1);
                    n_cells += 1;
                    let cell = Cell {
                        panel: pi,
                        u0: a0,
                        u1: a1,
                        v0: b0,
                        v1: b1,
                        coarse: e.coarse,
                        fine: e.fine,
                        midpoint: e.midpoint,
                        spike: e.spike,
                    };
                    push(cell, &mut heap, &mut leaves, &mut total_err, &mut n_forced, &mut seq);
                }
            }
        }

        while (total_err > self.tol_raw || n_forced > 0) && !heap.is_empty() {
            if n_cells + 3 > self.budget {
                let partial = self.finish(&heap, &leaves, n_cells, false);
                return Err(QuadError::BudgetExceeded { partial });
            }
            let top = heap.pop().expect("heap nonempty");
            if top.forced {
                n_forced -= 1;
            }
            total_err -= top.err;
            let cell = top.cell;
            let panel = &self.panels[cell.panel];
            // Split only dimensions that are physically long, keeping
            // cells near-square; otherwise angular refinement multiplies
            // cells without bound as the radius shrinks.
            let (wu, wv) = cell.extents(panel);
            let split_u = wu >= 0.5 * wv;
            let split_v = wv >= 0.5 * wu;
            let um = 0.5 * (cell.u0 + cell.u1);
            let vm = 0.5 * (cell.v0 + cell.v1);
            let us: &[(f64, f64)] = if split_u {
                &[(cell.u0, um), (um, cell.u1)]
            } else {
                &[(cell.u0, cell.u1)]
            };
            let vs: &[(f64, f64)] = if split_v {
                &[(cell.v0, vm), (vm, cell.v1)]
            } else {
                &[(cell.v0, cell.v1)]
            };
            n_cells += us.len() * vs.len() - 1;
            for &(a0, a1) in us {
                for &(b0, b1) in vs {
                    let e = eval_cell(self.g, panel, a0, a1, b0, b1);
                    let child = Cell {
                        panel: cell.panel,
                        u0: a0,
                        u1: a1,
                        v0: b0,
                        v1: b1,
                        coarse: e.coarse,
                        fine: e.fine,
                        midpoint: e.midpoint,
                        spike: e.spike,
                    };
                    push(child, &mut heap, &mut leaves, &mut total_err, &mut n_forced, &mut seq);
                }
            }
        }

        Ok(self.finish(&heap, &leaves, n_cells, n_forced == 0))
    }

    /// Deterministic final reduction: leaves sorted by panel and
    /// coordinates, compensated sums for value and error.
    fn finish(
        &self,
        heap: &BinaryHeap<HeapEntry>,
        floor_leaves: &[Cell],
        n_cells: usize,
        tol_candidate: bool,
    ) -> QuadResult {
        let mut all: Vec<&Cell> = heap
            .iter()
            .map(|e| &e.cell)
            .chain(floor_leaves.iter())
            .collect();
        all.sort_by(|a, b| {
            a.panel
                .cmp(&b.panel)
                .then(a.u0.total_cmp(&b.u0))
                .then(a.v0.total_cmp(&b.v0))
        });
        let floor = self.floor_width;
        let contribution = |c: &&Cell| -> (f64, f64) {
            let panel = &self.panels[c.panel];
            if c.width(panel) <= floor {
                (
                    panel.sign * c.midpoint,
                    (c.fine - c.midpoint).abs() + c.err(),
                )
            } else {
                (panel.sign * c.fine, c.err())
            }
        };
        let value = compensated_sum(all.iter().map(|c| contribution(c).0));
        let err = compensated_sum(all.iter().map(|c| contribution(c).1));
        let inv_pi = 1.0 / std::f64::consts::PI;
        QuadResult {
            value: value * inv_pi,
            error_estimate: err * inv_pi,
            cells: n_cells as u64,
            converged: tol_candidate && err <= self.tol_raw,
        }
    }
}

fn split_interval(a: f64, b: f64, i: usize, n: usize) -> (f64, f64) {
    let h = (b - a) / n as f64;
    (a + h * i as f64, if i + 1 == n { b } else { a + h * (i + 1) as f64 })
}

fn integrate(
    g: &dyn Fn(C) -> f64,
    domain: &Domain2D,
    tol: f64,
    budget: usize,
) -> Result<QuadResult, QuadError> {
    domain.validate()?;
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(QuadError::InvalidParameter(format!(
            "tolerance {tol} must be positive and finite"
        )));
    }
    let integ = Integrator {
        g,
        panels: domain.panels(),
        floor_width: FLOOR_FRACTION * domain.diameter(),
        tol_raw: tol * std::f64::consts::PI,
        budget,
    };
    integ.run()
}

/// Normalized spherical area of the image of `domain` under `f`,
/// counting multiplicities: the integral of (f#)^2 over the domain,
/// divided by pi.
pub fn spherical_area(f: &MeroFunc, domain: &Domain2D, tol: f64) -> Result<QuadResult, QuadError> {
    spherical_area_with_budget(f, domain, tol, DEFAULT_CELL_BUDGET)
}

pub fn spherical_area_with_budget(
    f: &MeroFunc,
    domain: &Domain2D,
    tol: f64,
    budget: usize,
) -> Result<QuadResult, QuadError> {
    let g = |z: C| -> f64 {
        match f.jet(z) {
            Ok(j) => j.sph_deriv * j.sph_deriv,
            Err(_) => 0.0,
        }
    };
    integrate(&g, domain, tol, budget)
}

/// The integral of (f#)^s over the domain, divided by pi.
pub fn ls_integral(
    f: &MeroFunc,
    domain: &Domain2D,
    s: f64,
    tol: f64,
) -> Result<QuadResult, QuadError> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(QuadError::InvalidParameter(format!(
            "exponent {s} must be positive and finite"
        )));
    }
    let g = |z: C| -> f64 {
        match f.jet(z) {
            Ok(j) => {
                if s == 2.0 {
                    j.sph_deriv * j.sph_deriv
                } else {
                    j.sph_deriv.powf(s)
                }
            }
            Err(_) => 0.0,
        }
    };
    integrate(&g, domain, tol, DEFAULT_CELL_BUDGET)
}

/// Per-annulus normalized areas over the dyadic annuli
/// R/2^n < |z - z0| < R/2^(n-1), n = 1..levels. Partial sums of the
/// returned list are monotone by nonnegativity; their convergence as
/// levels grow signals that the singularity at z0 carries no residual
/// area.
pub fn annulus_area_series(
    f: &MeroFunc,
    z0: C,
    radius: f64,
    levels: usize,
) -> Result<Vec<f64>, QuadError> {
    if levels == 0 {
        return Err(QuadError::InvalidParameter("levels must be >= 1".into()));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(QuadError::InvalidParameter(format!(
            "radius {radius} must be positive and finite"
        )));
    }
    let tol = 1e-8;
    let mut out = Vec::with_capacity(levels);
    for n in 1..=levels {
        let r_out = radius / (1u64 << (n - 1)) as f64;
        let domain = Domain2D::annulus(z0, r_out * 0.5, r_out)?;
        let r = spherical_area(f, &domain, tol)?;
        out.push(r.value);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcmodel::{builtin_family, MeroFunc, RationalFunc};
    use crate::funcmodel::poly::Poly;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn scaled_identity(n: f64) -> MeroFunc {
        MeroFunc::Rational(
            RationalFunc::new(
                Poly::new(vec![c(0.0, 0.0), c(n, 0.0)]),
                Poly::constant(c(1.0, 0.0)),
            )
            .unwrap(),
        )
    }

    /// Closed-form normalized area of f(z) = z over Disk(0, r).
    fn s_of(r: f64) -> f64 {
        r * r / (1.0 + r * r)
    }

    fn random_rational(rng: &mut ChaCha8Rng, max_deg: usize) -> RationalFunc {
        loop {
            let dn = rng.random_range(0..=max_deg);
            let dd = rng.random_range(0..=max_deg);
            if dn == 0 && dd == 0 {
                continue;
            }
            let num: Vec<(f64, f64)> = (0..=dn)
                .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let den: Vec<(f64, f64)> = (0..=dd)
                .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            if den.last().map(|&(a, b)| a.abs() + b.abs() < 0.2).unwrap_or(true) {
                continue;
            }
            if num.last().map(|&(a, b)| a.abs() + b.abs() < 0.2).unwrap_or(true) {
                continue;
            }
            if let Ok(f) = RationalFunc::from_coeff_pairs(&num, &den) {
                if !f.num().is_zero() && f.degree() == dn.max(dd) {
                    return f;
                }
            }
        }
    }

    #[test]
    fn identity_on_unit_disk() {
        let f = scaled_identity(1.0);
        let d = Domain2D::disk(c(0.0, 0.0), 1.0).unwrap();
        let r = spherical_area(&f, &d, 1e-8).unwrap();
        assert!(r.converged);
        assert!(r.error_estimate <= 1e-8);
        assert!((r.value - 0.5).abs() <= 1e-8, "got {}", r.value);
    }

    #[test]
    fn triple_scaling_on_unit_disk() {
        let f = scaled_identity(3.0);
        let d = Domain2D::disk(c(0.0, 0.0), 1.0).unwrap();
        let r = spherical_area(&f, &d, 1e-8).unwrap();
        assert!((r.value - 0.9).abs() <= 1e-8, "got {}", r.value);
    }

    #[test]
    fn identity_on_big_disk_approaches_degree() {
        let f = scaled_identity(1.0);
        let d = Domain2D::disk(c(0.0, 0.0), 1e3).unwrap();
        let r = spherical_area(&f, &d, 1e-7).unwrap();
        assert!((r.value - 1.0).abs() <= 2e-6, "got {}", r.value);
    }

    #[test]
    fn steep_scaling_forces_spike_refinement() {
        // n = 1e5 concentrates almost all area in a 1e-5 neighborhood of
        // the origin; the spike path must still resolve it.
        let n = 1e5;
        let f = scaled_identity(n);
        let d = Domain2D::disk(c(0.0, 0.0), 1.0).unwrap();
        let r = spherical_area(&f, &d, 1e-6).unwrap();
        let want = n * n / (1.0 + n * n);
        assert!((r.value - want).abs() <= 1e-6, "got {}, want {want}", r.value);
    }

    #[test]
    fn rectangle_oscillation_closed_form() {
        // f(z) = exp(i n z) on [0,1]^2: integral of (n / (2 cosh(n y)))^2
        // is n tanh(n) / 4, so the normalized value is n tanh(n) / (4 pi).
        let fam = builtin_family("exp_inz", None, None, vec![4]).unwrap();
        let f = fam.member(4);
        let d = Domain2D::rectangle(0.0, 1.0, 0.0, 1.0).unwrap();
        let r = spherical_area(&f, &d, 1e-9).unwrap();
        let want = 4.0 * 4.0f64.tanh() / (4.0 * std::f64::consts::PI);
        assert!((r.value - want).abs() <= 1e-9, "got {}, want {want}", r.value);
    }

    #[test]
    fn annulus_matches_difference_of_disks() {
        let f = scaled_identity(1.0);
        let d = Domain2D::annulus(c(0.0, 0.0), 0.5, 2.0).unwrap();
        let r = spherical_area(&f, &d, 1e-9).unwrap();
        let want = s_of(2.0) - s_of(0.5);
        assert!((r.value - want).abs() <= 1e-9, "got {}, want {want}", r.value);
    }

    #[test]
    fn concentric_hole_is_exact_annulus() {
        let f = scaled_identity(1.0);
        let d = Domain2D::disk_minus_points(c(0.0, 0.0), 1.0, vec![(c(0.0, 0.0), 0.25)]).unwrap();
        let r = spherical_area(&f, &d, 1e-9).unwrap();
        let want = s_of(1.0) - s_of(0.25);
        assert!((r.value - want).abs() <= 1e-9, "got {}, want {want}", r.value);
        let a = Domain2D::annulus(c(0.0, 0.0), 0.25, 1.0).unwrap();
        let ra = spherical_area(&f, &a, 1e-9).unwrap();
        assert_eq!(r.value, ra.value, "decompositions must coincide bit for bit");
    }

    #[test]
    fn offcenter_holes_subtract() {
        let f = scaled_identity(1.0);
        let holes = vec![(c(0.4, 0.0), 0.1), (c(-0.3, 0.2), 0.05)];
        let d = Domain2D::disk_minus_points(c(0.0, 0.0), 1.0, holes.clone()).unwrap();
        let r = spherical_area(&f, &d, 1e-9).unwrap();
        let full = spherical_area(&f, &Domain2D::disk(c(0.0, 0.0), 1.0).unwrap(), 1e-10).unwrap();
        let mut want = full.value;
        for (p, hr) in holes {
            let h = spherical_area(&f, &Domain2D::disk(p, hr).unwrap(), 1e-10).unwrap();
            want -= h.value;
        }
        assert!((r.value - want).abs() <= 1e-8, "got {}, want {want}", r.value);
    }

    #[test]
    fn domain_validation_rejects_bad_inputs() {
        assert!(Domain2D::rectangle(1.0, 0.0, 0.0, 1.0).is_err());
        assert!(Domain2D::disk(c(0.0, 0.0), 0.0).is_err());
        assert!(Domain2D::annulus(c(0.0, 0.0), 1.0, 0.5).is_err());
        // Hole sticking out of the disk.
        assert!(Domain2D::disk_minus_points(c(0.0, 0.0), 1.0, vec![(c(0.95, 0.0), 0.1)]).is_err());
        // Overlapping holes.
        assert!(Domain2D::disk_minus_points(
            c(0.0, 0.0),
            1.0,
            vec![(c(0.2, 0.0), 0.1), (c(0.3, 0.0), 0.1)]
        )
        .is_err());
        // Invalid tolerance.
        let f = scaled_identity(1.0);
        let d = Domain2D::disk(c(0.0, 0.0), 1.0).unwrap();
        assert!(matches!(
            spherical_area(&f, &d, 0.0),
            Err(QuadError::InvalidParameter(_))
        ));
    }

    #[test]
    fn budget_exhaustion_reports_partial() {
        let f = scaled_identity(1e5);
        let d = Domain2D::disk(c(0.0, 0.0), 1.0).unwrap();
        match spherical_area_with_budget(&f, &d, 1e-10, 64) {
            Err(QuadError::BudgetExceeded { partial }) => {
                assert!(!partial.converged);
                assert!(partial.cells <= 64 + 3);
                assert!(partial.value.is_finite());
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn ls_with_s2_matches_spherical_area() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let d = Domain2D::disk(c(0.0, 0.0), 1.0).unwrap();
        for _ in 0..20 {
            let f = MeroFunc::Rational(random_rational(&mut rng, 3));
            let a = spherical_area(&f, &d, 1e-7).unwrap();
            let b = ls_integral(&f, &d, 2.0, 1e-7).unwrap();
            assert!(
                (a.value - b.value).abs() <= 1e-9,
                "s=2 mismatch: {} vs {}",
                a.value,
                b.value
            );
        }
    }

    #[test]
    fn ls_identity_s2_closed_form() {
        let f = scaled_identity(1.0);
        let d = Domain2D::disk(c(0.0, 0.0), 1.0).unwrap();
        let r = ls_integral(&f, &d, 2.0, 1e-8).unwrap();
        assert!((r.value - 0.5).abs() <= 1e-8);
    }

    #[test]
    fn ls_s1_oscillation_stays_below_one() {
        // The s = 1 integral over the unit disk is below 1 for every n,
        // approaching it from below as n grows.
        let fam = builtin_family("exp_inz", None, None, vec![5, 20]).unwrap();
        let d = Domain2D::disk(c(0.0, 0.0), 1.0).unwrap();
        for &n in &[5u64, 20] {
            let f = fam.member(n);
            let r = ls_integral(&f, &d, 1.0, 1e-7).unwrap();
            assert!(
                r.value <= 1.0 + 1e-6,
                "n = {n}: s=1 integral {} above 1",
                r.value
            );
            assert!(r.value > 0.5, "n = {n}: implausibly small {}", r.value);
        }
    }

    #[test]
    fn annulus_series_for_pole_sums_to_half() {
        // f(z) = 1/z: the spherical derivative equals that of z itself,
        // so the dyadic terms sum to s(R) minus s(R/2^levels).
        let f = MeroFunc::Rational(
            RationalFunc::new(
                Poly::constant(c(1.0, 0.0)),
                Poly::new(vec![c(0.0, 0.0), c(1.0, 0.0)]),
            )
            .unwrap(),
        );
        let terms = annulus_area_series(&f, c(0.0, 0.0), 1.0, 8).unwrap();
        assert_eq!(terms.len(), 8);
        let mut partial = 0.0;
        for (n, t) in terms.iter().enumerate() {
            assert!(*t >= 0.0);
            partial += t;
            let want = s_of(1.0 / (1u64 << n) as f64) - s_of(1.0 / (1u64 << (n + 1)) as f64);
            assert!((t - want).abs() < 1e-7, "term {n}: {t} vs {want}");
        }
        assert!((partial - 0.5).abs() < 1e-4, "partial sum {partial}");
    }

    #[test]
    fn annulus_series_single_level_is_annulus_area() {
        let f = scaled_identity(2.0);
        let terms = annulus_area_series(&f, c(0.1, 0.1), 0.8, 1).unwrap();
        let d = Domain2D::annulus(c(0.1, 0.1), 0.4, 0.8).unwrap();
        let direct = spherical_area(&f, &d, 1e-8).unwrap();
        assert!((terms[0] - direct.value).abs() <= 2e-8);
    }

    #[test]
    fn determinism_across_runs() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let f = MeroFunc::Rational(random_rational(&mut rng, 4));
        let d = Domain2D::disk(c(0.2, -0.1), 1.5).unwrap();
        let a = spherical_area(&f, &d, 1e-8).unwrap();
        let b = spherical_area(&f, &d, 1e-8).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.error_estimate.to_bits(), b.error_estimate.to_bits());
        assert_eq!(a.cells, b.cells);
    }

    #[test]
    fn degree_area_identity_small_sample() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let d = Domain2D::disk(c(0.0, 0.0), 1e3).unwrap();
        for _ in 0..5 {
            let f = random_rational(&mut rng, 4);
            let deg = f.degree() as f64;
            let r = spherical_area(&MeroFunc::Rational(f), &d, 1e-4).unwrap();
            assert!(
                r.value >= deg - 0.01 && r.value <= deg + 1e-6,
                "degree {deg} but area {}",
                r.value
            );
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]

        #[test]
        fn additivity_over_quadrants(
            x0 in -2.0f64..0.0,
            y0 in -2.0f64..0.0,
            w in 0.5f64..2.0,
            h in 0.5f64..2.0,
            n in 1u32..5,
        ) {
            let f = scaled_identity(n as f64);
            let (x1, y1) = (x0 + w, y0 + h);
            let (xm, ym) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
            let whole = spherical_area(&f, &Domain2D::rectangle(x0, x1, y0, y1).unwrap(), 1e-8).unwrap();
            let mut sum = 0.0;
            let mut errs = whole.error_estimate;
            for (a, b) in [(x0, xm), (xm, x1)] {
                for (p, q) in [(y0, ym), (ym, y1)] {
                    let part = spherical_area(&f, &Domain2D::rectangle(a, b, p, q).unwrap(), 1e-8).unwrap();
                    sum += part.value;
                    errs += part.error_estimate;
                }
            }
            prop_assert!((whole.value - sum).abs() <= errs + 1e-12,
                "additivity violated: {} vs {}", whole.value, sum);
        }

        #[test]
        fn monotone_in_domain(r1 in 0.2f64..1.0, scale in 1.05f64..3.0, n in 1u32..6) {
            let f = scaled_identity(n as f64);
            let r2 = r1 * scale;
            let small = spherical_area(&f, &Domain2D::disk(c(0.0,0.0), r1).unwrap(), 1e-8).unwrap();
            let big = spherical_area(&f, &Domain2D::disk(c(0.0,0.0), r2).unwrap(), 1e-8).unwrap();
            prop_assert!(
                small.value <= big.value + 2.0 * (small.error_estimate + big.error_estimate),
                "containment violated: {} > {}", small.value, big.value
            );
        }
    }
}
