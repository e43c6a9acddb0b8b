//! Acceptance gate: one test per criterion, each printing a PASS line with
//! the measured numbers. Run with `cargo test --test acceptance`.

use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sphlab::bounds::{
    fkr_bound, min_spherical_derivative, steinmetz_bound, verify_bound, BoundKind,
};
use sphlab::concentration::{detect_irregular_points, mass_profile, ConcError};
use sphlab::covering::covering_area_oracle;
use sphlab::funcmodel::poly::Poly;
use sphlab::funcmodel::{builtin_family, compose_motion, MeroFunc, RationalFunc};
use sphlab::liouville::{blowup_demo, liouville_residual, solve_liouville, Grid2D};
use sphlab::numeric::eigen::poly_roots;
use sphlab::quadrature::{ls_integral, spherical_area, Domain2D};
use sphlab::sphere::{chordal_distance, RigidMotion, SpherePoint};

type C = Complex64;

fn unit_disk() -> Domain2D {
    Domain2D::disk(C::new(0.0, 0.0), 1.0).unwrap()
}

/// Random rational function: independent uniform degrees up to `max_deg`,
/// coefficients in [-1, 1]^2, leading coefficients bounded away from zero.
fn random_rational(rng: &mut ChaCha8Rng, max_deg: usize) -> RationalFunc {
    loop {
        let dn = rng.random_range(0..=max_deg);
        let dd = rng.random_range(0..=max_deg);
        let coeff = |rng: &mut ChaCha8Rng, deg: usize| -> Vec<C> {
            (0..=deg)
                .map(|_| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect()
        };
        let mut num = coeff(rng, dn);
        let mut den = coeff(rng, dd);
        let lift = |c: &mut C| {
            if c.re.abs() + c.im.abs() < 0.2 {
                c.re += 0.5_f64.copysign(c.re);
            }
        };
        lift(num.last_mut().unwrap());
        lift(den.last_mut().unwrap());
        if let Ok(f) = RationalFunc::new(Poly::new(num), Poly::new(den)) {
            return f;
        }
    }
}

/// Smallest distance between a root of the numerator and a root of the
/// denominator; MAX if either has no roots.
fn root_separation(f: &RationalFunc) -> f64 {
    let roots = |p: &Poly| -> Vec<C> {
        if p.coeffs().len() < 2 {
            Vec::new()
        } else {
            poly_roots(p.coeffs()).unwrap_or_default()
        }
    };
    let nr = roots(f.num());
    let dr = roots(f.den());
    let mut sep = f64::MAX;
    for a in &nr {
        for b in &dr {
            sep = sep.min((a - b).norm());
        }
    }
    sep
}

#[test]
fn acceptance_01_area_closed_forms() {
    let family = builtin_family("nz", None, None, vec![1, 2, 3, 5, 10]).unwrap();
    let d = unit_disk();
    let mut worst = 0.0_f64;
    for &n in &family.indices {
        let t = Instant::now();
        let r = spherical_area(&family.member(n), &d, 1e-8).unwrap();
        let elapsed = t.elapsed().as_secs_f64();
        let nf = n as f64;
        let exact = nf * nf / (1.0 + nf * nf);
        let err = (r.value - exact).abs();
        worst = worst.max(err);
        assert!(
            err <= 1e-6,
            "n = {n}: area {} vs exact {exact}, err {err:.3e}",
            r.value
        );
        assert!(elapsed < 5.0, "n = {n} took {elapsed:.2} s");
    }
    println!("PASS area closed forms: worst |error| {worst:.3e} over n in {{1,2,3,5,10}}");
}

#[test]
fn acceptance_02_degree_area_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let d = Domain2D::disk(C::new(0.0, 0.0), 1e3).unwrap();
    let t = Instant::now();
    let mut done = 0;
    let mut worst_defect = 0.0_f64;
    while done < 25 {
        let f = random_rational(&mut rng, 4);
        let deg = f.degree();
        // Degree 0 carries no area; near-coincident zero/pole pairs cost
        // quadrature cells without changing the identity.
        if deg == 0 || root_separation(&f) < 1e-3 {
            continue;
        }
        let r = spherical_area(&MeroFunc::Rational(f), &d, 1e-6).unwrap();
        let degf = deg as f64;
        assert!(
            r.value >= degf - 0.01 && r.value <= degf,
            "sample {done}: degree {deg}, area {} outside [{}, {deg}]",
            r.value,
            degf - 0.01
        );
        worst_defect = worst_defect.max(degf - r.value);
        done += 1;
    }
    let elapsed = t.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "25 integrals took {elapsed:.1} s");
    println!(
        "PASS degree-area identity: 25 samples, worst defect {worst_defect:.2e}, {elapsed:.1} s"
    );
}

#[test]
fn acceptance_03_cross_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let d = unit_disk();
    let mut worst_rel = 0.0_f64;
    let mut done = 0;
    while done < 10 {
        let f = random_rational(&mut rng, 3);
        if f.degree() == 0 || root_separation(&f) < 1e-3 {
            continue;
        }
        let quad = spherical_area(&MeroFunc::Rational(f.clone()), &d, 1e-8)
            .unwrap()
            .value;
        let oracle = covering_area_oracle(&f, &d, 128).unwrap();
        let rel = (quad - oracle).abs() / quad.max(oracle);
        worst_rel = worst_rel.max(rel);
        assert!(
            rel <= 0.01,
            "sample {done}: quadrature {quad} vs covering {oracle}, rel diff {rel:.3e}"
        );
        done += 1;
    }
    println!("PASS cross-oracle: 10 samples, worst relative gap {worst_rel:.3e}");
}

#[test]
fn acceptance_04_bubble_detection() {
    let t = Instant::now();
    let indices: Vec<u64> = (0..8).map(|k| 1u64 << k).collect();
    let family = builtin_family("nP", Some(3), None, indices).unwrap();
    let d = unit_disk();
    let profile = mass_profile(&family, &d, 64, &[0.4, 0.3, 0.2, 0.15, 0.1], 0.05).unwrap();
    assert_eq!(profile.s.len(), 3, "expected exactly 3 points");
    let radius = 0.5_f64.powf(1.0 / 3.0);
    let mut worst = 0.0_f64;
    for p in &profile.s {
        // Roots of 2z^3 = 1: radius (1/2)^(1/3), angles 0 and +-2pi/3.
        let dist = (0..3)
            .map(|k| {
                let ang = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
                (p.location - C::from_polar(radius, ang)).norm()
            })
            .fold(f64::MAX, f64::min);
        worst = worst.max(dist);
        assert!(dist <= 1e-3, "point {} off-root by {dist:.2e}", p.location);
    }
    assert!(
        profile.s.len() as f64 <= profile.order_bound.floor(),
        "|S| = {} exceeds order bound {}",
        profile.s.len(),
        profile.order_bound
    );
    let elapsed = t.elapsed().as_secs_f64();
    assert!(elapsed < 120.0, "detection took {elapsed:.1} s");
    println!(
        "PASS bubble detection: 3 points, worst location error {worst:.2e}, \
         order bound {}, {elapsed:.2} s",
        profile.order_bound
    );
}

#[test]
fn acceptance_05_mass_concentration() {
    let t = Instant::now();
    let indices: Vec<u64> = (0..8).map(|k| 1u64 << k).collect();
    let family = builtin_family("nz", None, None, indices).unwrap();
    let d = unit_disk();
    let profile = mass_profile(&family, &d, 64, &[0.4, 0.3, 0.2, 0.15, 0.1], 0.05).unwrap();
    assert_eq!(profile.s.len(), 1);
    let a = &profile.alpha[0];
    assert!(
        (0.95..=1.05).contains(&a.estimate),
        "alpha {} outside [0.95, 1.05]",
        a.estimate
    );
    assert!(
        profile.quantized.iter().all(|&(_, ok)| ok),
        "quantization flags: {:?}",
        profile.quantized
    );
    let elapsed = t.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "profile took {elapsed:.1} s");
    println!(
        "PASS mass concentration: alpha {} +- {}, quantized, {elapsed:.2} s",
        a.estimate, a.uncertainty
    );
}

#[test]
fn acceptance_06_non_quasi_normal_line() {
    let family = builtin_family("exp_inz", None, None, vec![4, 8, 16, 32, 50]).unwrap();
    let d = Domain2D::rectangle(-0.9, 0.9, -0.1, 0.1).unwrap();
    let err = detect_irregular_points(&family, &d, 256).unwrap_err();
    let ConcError::NotQuasiNormal {
        flagged, cell_size, ..
    } = err
    else {
        panic!("expected the whole-segment failure mode, got {err}");
    };
    // Flagged cells sit on a fixed grid, so distinct column centers give
    // disjoint intervals of width cell_size on the x axis.
    let mut xs: Vec<f64> = flagged.iter().map(|c| c.re).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() < cell_size * 0.5);
    let covered = xs.len() as f64 * cell_size;
    let fraction = covered / 1.8;
    assert!(
        fraction >= 0.8,
        "flagged columns cover {covered:.3} of 1.8 ({:.0}%)",
        fraction * 100.0
    );

    let disk = unit_disk();
    let mut worst = 0.0_f64;
    for n in 1..=50u64 {
        let member = family.member(n);
        let r = ls_integral(&member, &disk, 1.0, 1e-6).unwrap();
        worst = worst.max(r.value);
        assert!(
            r.value <= 1.0 + 1e-3,
            "n = {n}: s = 1 integral {} exceeds 1",
            r.value
        );
    }
    println!(
        "PASS non-quasi-normal line: {:.0}% of segment flagged, \
         max s=1 integral {worst:.6} over n <= 50",
        fraction * 100.0
    );
}

#[test]
fn acceptance_07_bound_formulas() {
    let v = fkr_bound(0.3, C::new(0.0, 0.0)).unwrap();
    assert_eq!(v, 3.0, "lower-bound formula at c = 0.3, z = 0: got {v:?}");

    // The refined bound never exceeds the earlier one on its shared domain.
    let mut worst_gap = f64::MIN;
    for i in 0..64 {
        let c = 0.5 * (i + 1) as f64 / 64.0;
        for j in 0..128 {
            let r = 0.999 * (j as f64 + 0.5) / 128.0;
            let z = C::from_polar(r, 2.399963 * j as f64);
            let fkr = fkr_bound(c, z).unwrap();
            let st = steinmetz_bound(c, z).unwrap();
            worst_gap = worst_gap.max(fkr - st);
            assert!(
                fkr <= st * (1.0 + 1e-12),
                "c = {c}, z = {z}: refined {fkr} > coarse {st}"
            );
        }
    }

    let ident =
        RationalFunc::from_coeff_pairs(&[(0.0, 0.0), (1.0, 0.0)], &[(1.0, 0.0)]).unwrap();
    let report = verify_bound(
        &MeroFunc::Rational(ident),
        BoundKind::Fkr { c: 0.45 },
        64,
    )
    .unwrap();
    assert!(
        report.grid_violations.is_empty(),
        "{} violations, max ratio {}",
        report.grid_violations.len(),
        report.max_ratio
    );

    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut worst_inf = 0.0_f64;
    for _ in 0..100 {
        let f = random_rational(&mut rng, 4);
        let inf = min_spherical_derivative(&MeroFunc::Rational(f), 64).unwrap();
        worst_inf = worst_inf.max(inf);
        assert!(inf <= 0.5 + 0.01, "disk infimum {inf} exceeds 1/2");
    }
    println!(
        "PASS bound formulas: exact value 3, worst refined-coarse gap {worst_gap:.2e}, \
         identity max ratio {:.4}, largest infimum {worst_inf:.4}",
        report.max_ratio
    );
}

#[test]
fn acceptance_08_liouville_solver() {
    let t = Instant::now();
    let ident = MeroFunc::Rational(
        RationalFunc::from_coeff_pairs(&[(0.0, 0.0), (1.0, 0.0)], &[(1.0, 0.0)]).unwrap(),
    );
    let oracle = |z: C| -(z.norm_sqr().ln_1p());

    // Discrete residual of the exact solution shrinks at second order.
    let mut res_max = Vec::new();
    for k in [5u32, 6, 7] {
        let n = (1usize << k) + 1;
        let g = Grid2D::new(-0.5, 0.5, -0.5, 0.5, n, n).unwrap();
        let r = liouville_residual(&ident, &g).unwrap();
        let m = r
            .iter()
            .map(|v| v.abs())
            .filter(|v| v.is_finite())
            .fold(0.0, f64::max);
        res_max.push(m);
    }
    let mut orders = Vec::new();
    for w in res_max.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(
            (1.8..=2.2).contains(&order),
            "residual order {order:.3} outside [1.8, 2.2] (maxima {res_max:?})"
        );
        orders.push(order);
    }

    // Solver error tracks h^2 with a stable constant, up to the 257^2 grid.
    let mut ks = Vec::new();
    let mut t257 = 0.0;
    for k in [5u32, 6, 7, 8] {
        let n = (1usize << k) + 1;
        let g = Grid2D::new(-0.5, 0.5, -0.5, 0.5, n, n).unwrap();
        let boundary: Vec<f64> = (0..g.len())
            .map(|idx| {
                let (i, j) = (idx % n, idx / n);
                if g.is_interior(i, j) {
                    f64::NAN
                } else {
                    oracle(g.node(i, j))
                }
            })
            .collect();
        let ts = Instant::now();
        let potential = vec![4.0; g.len()];
        let sol = solve_liouville(&potential, &boundary, &g).unwrap();
        if k == 8 {
            t257 = ts.elapsed().as_secs_f64();
        }
        assert!(sol.converged);
        let mut err = 0.0_f64;
        for j in 0..n {
            for i in 0..n {
                err = err.max((sol.u[g.index(i, j)] - oracle(g.node(i, j))).abs());
            }
        }
        let h = g.h();
        ks.push(err / (h * h));
    }
    let (kmin, kmax) = ks
        .iter()
        .fold((f64::MAX, f64::MIN), |(a, b), &k| (a.min(k), b.max(k)));
    assert!(
        kmax / kmin <= 1.5,
        "error constant drifts: {ks:?} (ratio {:.2})",
        kmax / kmin
    );
    let elapsed = t.elapsed().as_secs_f64();
    assert!(t257 < 120.0, "257^2 solve took {t257:.1} s");
    println!(
        "PASS elliptic solver: residual orders {orders:.3?}, error constants {ks:.3?}, \
         257^2 solve {t257:.2} s, total {elapsed:.1} s"
    );
}

#[test]
fn acceptance_09_blowup_demo() {
    let schedule = vec![2u64, 4, 8, 16, 32, 64];
    let family = builtin_family("nz", None, None, schedule.clone()).unwrap();
    let g = Grid2D::new(-0.5, 0.5, -0.5, 0.5, 129, 129).unwrap();
    let rows = blowup_demo(&family, &g).unwrap();
    assert_eq!(rows.len(), schedule.len());
    let mut worst_peak = 0.0_f64;
    let mut probes = Vec::new();
    for row in &rows {
        // Peak of log f# sits at the origin node, where f# = n exactly.
        let gap = (row.max_u - (row.n as f64).ln()).abs();
        worst_peak = worst_peak.max(gap);
        assert!(gap <= 1e-9, "n = {}: max u off log n by {gap:.2e}", row.n);

        let probe = family
            .member(row.n)
            .sph_deriv(C::new(0.4, 0.0))
            .unwrap()
            .ln();
        probes.push(probe);
    }
    for w in probes.windows(2) {
        assert!(w[1] < w[0], "u_n(0.4) not decreasing: {probes:?}");
    }
    let last_probe = *probes.last().unwrap();
    assert!(
        last_probe < -2.0,
        "u_64(0.4) = {last_probe:.3} has not collapsed yet"
    );
    let last_mass = rows.last().unwrap().mass;
    assert!(
        (last_mass - 1.0).abs() <= 0.05,
        "terminal grid mass {last_mass} not within 5% of 1"
    );
    println!(
        "PASS blow-up demo: worst |max u - log n| {worst_peak:.1e}, \
         u_n(0.4) falls to {last_probe:.2}, terminal mass {last_mass:.4}"
    );
}

#[test]
fn acceptance_10_invariance_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut cases = 0u32;

    let random_point = |rng: &mut ChaCha8Rng| -> SpherePoint {
        if rng.random_range(0..40) == 0 {
            SpherePoint::Infinity
        } else {
            let r: f64 = rng.random_range(0.0..4.0);
            SpherePoint::Finite(C::from_polar(r, rng.random_range(0.0..6.2831853)))
        }
    };

    // Rotating the target sphere leaves the spherical derivative alone.
    for _ in 0..340 {
        let f = random_rational(&mut rng, 3);
        let a = C::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let phase = C::from_polar(1.0, rng.random_range(0.0..6.2831853));
        let motion = RigidMotion::new(a, phase);
        let g = compose_motion(&motion, &f).unwrap();
        for _ in 0..10 {
            let z = C::from_polar(
                rng.random_range(0.0..2.0),
                rng.random_range(0.0..6.2831853),
            );
            let before = f.jet(z).sph_deriv;
            let after = g.jet(z).sph_deriv;
            assert!(
                (before - after).abs() <= 1e-8 * (1.0 + before),
                "motion changed derivative at {z}: {before} vs {after}"
            );
            cases += 1;
        }
    }

    // 1/f shares the numerator |p'q - pq'| and denominator |p|^2 + |q|^2.
    for _ in 0..330 {
        let f = random_rational(&mut rng, 3);
        let Ok(recip) = f.reciprocal() else { continue };
        for _ in 0..10 {
            let z = C::from_polar(
                rng.random_range(0.0..2.0),
                rng.random_range(0.0..6.2831853),
            );
            let before = f.jet(z).sph_deriv;
            let after = recip.jet(z).sph_deriv;
            assert!(
                (before - after).abs() <= 1e-12 * (1.0 + before),
                "reciprocal changed derivative at {z}: {before} vs {after}"
            );
            cases += 1;
        }
    }

    // Metric axioms: identity, symmetry, the diameter-1 cap, triangle.
    for _ in 0..3300 {
        let (p, q, r) = (random_point(&mut rng), random_point(&mut rng), random_point(&mut rng));
        assert_eq!(chordal_distance(p, p), 0.0);
        let pq = chordal_distance(p, q);
        let qp = chordal_distance(q, p);
        assert!(
            (pq - qp).abs() <= 1e-15,
            "asymmetric: d({p:?},{q:?}) = {pq} vs {qp}"
        );
        assert!(pq <= 1.0 + 1e-12, "distance {pq} above the diameter");
        if p != q {
            assert!(pq > 0.0, "distinct points {p:?}, {q:?} at distance 0");
        }
        let (qr, pr) = (chordal_distance(q, r), chordal_distance(p, r));
        assert!(
            pr <= pq + qr + 1e-12,
            "triangle broken: {pr} > {pq} + {qr}"
        );
        cases += 1;
    }

    assert!(cases >= 10_000, "only {cases} randomized cases ran");
    println!("PASS invariance suite: {cases} cases, zero failures");
}
