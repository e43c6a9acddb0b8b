//! Meromorphic function models with pole-safe jet evaluation.
//!
//! A rational function is kept in canonical form: numerator and
//! denominator coprime up to the GCD tolerance, denominator monic. Its
//! spherical derivative is computed from the Wronskian form
//!
//!   f#(z) = |p'(z) q(z) - p(z) q'(z)| / (|p(z)|^2 + |q(z)|^2),
//!
//! which is algebraically identical to switching to 1/f whenever
//! |f(z)| > 1 and stays finite across poles. The reported value still
//! branches at |p| > |q| exactly, so evaluation is branch-deterministic.
//!
//! Formula-backed functions carry a closed-form derivative; the
//! constructor cross-checks it against central differences at five probe
//! points and rejects inconsistent pairs.

pub mod poly;

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::eigen::poly_roots;
use crate::sphere::{RigidMotion, SpherePoint};
use poly::{gcd_approx, Poly};

type C = Complex64;

/// Relative tolerance for the approximate polynomial GCD.
pub const GCD_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum FuncError {
    #[error("denominator is (numerically) the zero polynomial")]
    ZeroDenominator,
    #[error("coefficient at position {0} is not finite")]
    InvalidCoefficient(usize),
    #[error("evaluation at {0} is outside the function's domain")]
    EvaluationDomain(C),
    #[error("supplied derivative disagrees with central differences at {probe} (|diff| = {mismatch:.3e})")]
    DerivativeMismatch { probe: C, mismatch: f64 },
    #[error("unknown built-in family `{0}`")]
    UnknownFamily(String),
    #[error("family `{0}` requires parameter {1}")]
    MissingParameter(String, &'static str),
    #[error("family indices must be nonempty and strictly increasing")]
    InvalidIndices,
    #[error("family claims local univalence but member {index} has a critical point near {location}")]
    UnivalenceCheckFailed { index: u64, location: C },
    #[error("rational function JSON: {0}")]
    Json(String),
}

/// Value and spherical derivative of a function at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: SpherePoint,
    pub sph_deriv: f64,
}

/// A rational function p/q in canonical form: q monic, gcd(p, q) trivial
/// at tolerance `GCD_TOL` (common factors are divided out on
/// construction), and q not identically zero.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalFunc {
    num: Poly,
    den: Poly,
    dnum: Poly,
    dden: Poly,
}

impl RationalFunc {
    pub fn new(num: Poly, den: Poly) -> Result<Self, FuncError> {
        for (i, c) in num.coeffs().iter().chain(den.coeffs()).enumerate() {
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(FuncError::InvalidCoefficient(i));
            }
        }
        if den.is_zero() {
            return Err(FuncError::ZeroDenominator);
        }
        let (mut num, mut den) = (num, den);
        if !num.is_zero() {
            let g = gcd_approx(&num, &den, GCD_TOL);
            if g.degree().unwrap_or(0) >= 1 {
                num = num.divmod(&g).0;
                den = den.divmod(&g).0;
            }
        }
        if den.is_zero() {
            return Err(FuncError::ZeroDenominator);
        }
        // Monic denominator fixes the representative of the (p, q) pair.
        let lead = *den.coeffs().last().expect("nonzero denominator");
        let inv = lead.inv();
        num = num.scale(inv);
        den = den.scale(inv);
        let dnum = num.derivative();
        let dden = den.derivative();
        Ok(RationalFunc { num, den, dnum, dden })
    }

    /// Builds from real-pair coefficient lists as used in the JSON form.
    pub fn from_coeff_pairs(num: &[(f64, f64)], den: &[(f64, f64)]) -> Result<Self, FuncError> {
        let to_poly = |cs: &[(f64, f64)]| Poly::new(cs.iter().map(|&(re, im)| C::new(re, im)).collect());
        RationalFunc::new(to_poly(num), to_poly(den))
    }

    pub fn constant(c: C) -> Self {
        RationalFunc::new(Poly::constant(c), Poly::constant(C::new(1.0, 0.0)))
            .expect("constant construction cannot fail")
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    /// Map degree: max of numerator and denominator degrees (0 for the
    /// zero function).
    pub fn degree(&self) -> usize {
        self.num
            .degree()
            .unwrap_or(0)
            .max(self.den.degree().unwrap_or(0))
    }

    /// The reciprocal q/p. Errors if this function is identically zero.
    pub fn reciprocal(&self) -> Result<Self, FuncError> {
        RationalFunc::new(self.den.clone(), self.num.clone())
    }

    /// Pole-safe jet. The value branches to the reciprocal representation
    /// exactly when |p(z)| > |q(z)|, i.e. when |f(z)| > 1; the spherical
    /// derivative needs no branch at all.
    pub fn jet(&self, z: C) -> Jet {
        let (p, dp) = self.num.eval_pair(z);
        let (q, dq) = self.den.eval_pair(z);
        let np = p.norm();
        let nq = q.norm();
        let value = if np <= nq {
            if nq == 0.0 {
                // p and q both vanish: numerically outside the coprime
                // invariant; report the limit along the polished pair.
                SpherePoint::Infinity
            } else {
                SpherePoint::from_value(p / q)
            }
        } else {
            let u = q / p; // |u| < 1
            if u.norm() == 0.0 {
                SpherePoint::Infinity
            } else {
                SpherePoint::from_value(u.inv())
            }
        };
        // Scale-invariant Wronskian form; guard against overflow of the
        // raw squares for extreme inputs by factoring out the larger
        // modulus.
        let m = np.max(nq);
        let sph_deriv = if m == 0.0 {
            0.0
        } else if m < 1e100 {
            let w = dp * q - p * dq;
            w.norm() / (np * np + nq * nq)
        } else {
            let ps = p / m;
            let qs = q / m;
            let w = dp * qs - ps * dq;
            (w.norm() / m) / (ps.norm_sqr() + qs.norm_sqr())
        };
        Jet { value, sph_deriv }
    }

    /// Parses the JSON form {"num": [[re, im], ...], "den": [[re, im], ...]}.
    pub fn from_json_str(s: &str) -> Result<Self, FuncError> {
        let raw: RationalJson =
            serde_json::from_str(s).map_err(|e| FuncError::Json(e.to_string()))?;
        RationalFunc::from_coeff_pairs(&raw.num, &raw.den)
    }

    /// Serializes to the JSON coefficient form (canonical representative).
    pub fn to_json_string(&self) -> String {
        let enc = RationalJson {
            num: self.num.coeffs().iter().map(|c| (c.re, c.im)).collect(),
            den: self.den.coeffs().iter().map(|c| (c.re, c.im)).collect(),
        };
        serde_json::to_string(&enc).expect("encoding cannot fail")
    }
}

#[derive(Serialize, Deserialize)]
struct RationalJson {
    num: Vec<(f64, f64)>,
    den: Vec<(f64, f64)>,
}

impl fmt::Display for RationalFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_json_string())
    }
}

/// Post-composition with a rigid motion, done symbolically: for
/// T(w) = phase (w - a)/(1 + conj(a) w) and f = p/q,
/// T o f = phase (p - a q) / (q + conj(a) p).
pub fn compose_motion(t: &RigidMotion, f: &RationalFunc) -> Result<RationalFunc, FuncError> {
    let a = t.a;
    let num = f.num.sub(&f.den.scale(a)).scale(t.phase);
    let den = f.den.add(&f.num.scale(a.conj()));
    RationalFunc::new(num, den)
}

type FormulaEval = dyn Fn(C) -> (C, C) + Send + Sync;

/// A function given by closed-form value and derivative, with an explicit
/// list of excluded points (essential singularities, branch loci). At a
/// pole the evaluator should return a non-finite value together with the
/// derivative of 1/f; the jet interprets it through the reciprocal.
pub struct FormulaFunc {
    pub label: String,
    eval: Arc<FormulaEval>,
    pub excluded: Vec<C>,
    pub exclusion_radius: f64,
}

impl fmt::Debug for FormulaFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FormulaFunc")
            .field("label", &self.label)
            .field("excluded", &self.excluded)
            .finish()
    }
}

impl FormulaFunc {
    /// Cross-checks the supplied derivative against central differences
    /// at the probe points (relative tolerance 1e-5); a mismatch is a
    /// construction error, not a latent inaccuracy.
    pub fn new(
        label: impl Into<String>,
        eval: Arc<FormulaEval>,
        excluded: Vec<C>,
        exclusion_radius: f64,
        probes: &[C],
    ) -> Result<Arc<Self>, FuncError> {
        let f = FormulaFunc {
            label: label.into(),
            eval,
            excluded,
            exclusion_radius,
        };
        let h = 1e-6;
        for &z in probes {
            if f.is_excluded(z) {
                continue;
            }
            let (v, dv) = (f.eval)(z);
            if !is_finite_c(v) || !is_finite_c(dv) {
                continue;
            }
            let (vp, _) = (f.eval)(z + C::new(h, 0.0));
            let (vm, _) = (f.eval)(z - C::new(h, 0.0));
            if !is_finite_c(vp) || !is_finite_c(vm) {
                continue;
            }
            let fd = (vp - vm) / C::new(2.0 * h, 0.0);
            let mismatch = (fd - dv).norm();
            if mismatch > 1e-5 * (1.0 + dv.norm()) {
                return Err(FuncError::DerivativeMismatch { probe: z, mismatch });
            }
        }
        Ok(Arc::new(f))
    }

    fn is_excluded(&self, z: C) -> bool {
        self.excluded
            .iter()
            .any(|&p| (z - p).norm() < self.exclusion_radius)
    }

    pub fn jet(&self, z: C) -> Result<Jet, FuncError> {
        if self.is_excluded(z) {
            return Err(FuncError::EvaluationDomain(z));
        }
        let (v, dv) = (self.eval)(z);
        if !is_finite_c(v) {
            // Pole convention: dv is the derivative of 1/f, and 1/f = 0.
            return Ok(Jet {
                value: SpherePoint::Infinity,
                sph_deriv: dv.norm(),
            });
        }
        let m = v.norm();
        let nd = dv.norm();
        let sph_deriv = if m <= 1.0 {
            nd / (1.0 + m * m)
        } else {
            (nd / m) / (m + 1.0 / m)
        };
        Ok(Jet {
            value: SpherePoint::from_value(v),
            sph_deriv,
        })
    }
}

fn is_finite_c(z: C) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// An evaluable meromorphic function.
#[derive(Debug, Clone)]
pub enum MeroFunc {
    Rational(RationalFunc),
    Formula(Arc<FormulaFunc>),
}

impl MeroFunc {
    pub fn jet(&self, z: C) -> Result<Jet, FuncError> {
        match self {
            MeroFunc::Rational(r) => Ok(r.jet(z)),
            MeroFunc::Formula(f) => f.jet(z),
        }
    }

    /// Spherical derivative alone; same error surface as `jet`.
    pub fn sph_deriv(&self, z: C) -> Result<f64, FuncError> {
        Ok(self.jet(z)?.sph_deriv)
    }

    pub fn as_rational(&self) -> Option<&RationalFunc> {
        match self {
            MeroFunc::Rational(r) => Some(r),
            MeroFunc::Formula(_) => None,
        }
    }
}

type MemberFn = dyn Fn(u64) -> MeroFunc + Send + Sync;

/// An indexed family of meromorphic functions.
pub struct FamilySpec {
    pub label: String,
    member: Arc<MemberFn>,
    pub indices: Vec<u64>,
    pub locally_univalent: bool,
    /// Declared bound on the normalized spherical area of every member,
    /// when one is known for the family.
    pub area_bound: Option<f64>,
}

impl fmt::Debug for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FamilySpec")
            .field("label", &self.label)
            .field("indices", &self.indices)
            .field("locally_univalent", &self.locally_univalent)
            .field("area_bound", &self.area_bound)
            .finish()
    }
}

impl FamilySpec {
    /// Validates the index schedule and, when `locally_univalent` is set,
    /// probes sampled members for critical points: rational members get
    /// an exact Wronskian root search over the probe square [-1,1]^2
    /// (slightly enlarged), formula members a point check |f'| > 0 at
    /// fixed probes. The flag is checked, never assumed.
    pub fn new(
        label: impl Into<String>,
        member: Arc<MemberFn>,
        indices: Vec<u64>,
        locally_univalent: bool,
        area_bound: Option<f64>,
    ) -> Result<Self, FuncError> {
        if indices.is_empty() || indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(FuncError::InvalidIndices);
        }
        let spec = FamilySpec {
            label: label.into(),
            member,
            indices,
            locally_univalent,
            area_bound,
        };
        if locally_univalent {
            spec.check_univalence()?;
        }
        Ok(spec)
    }

    fn check_univalence(&self) -> Result<(), FuncError> {
        let sample: Vec<u64> = {
            let n = self.indices.len();
            let mut picks = vec![self.indices[0], self.indices[n / 2], self.indices[n - 1]];
            picks.dedup();
            picks
        };
        for &n in &sample {
            match (self.member)(n) {
                MeroFunc::Rational(r) => {
                    let w = r.num().derivative().mul(r.den()).sub(&r.num().mul(&r.den().derivative()));
                    let w = w.trim_leading(1e-12);
                    if w.is_zero() {
                        return Err(FuncError::UnivalenceCheckFailed {
                            index: n,
                            location: C::new(0.0, 0.0),
                        });
                    }
                    if w.degree() == Some(0) {
                        continue;
                    }
                    if let Ok(roots) = poly_roots(w.coeffs()) {
                        for root in roots {
                            if root.re.abs() <= 1.05 && root.im.abs() <= 1.05 {
                                return Err(FuncError::UnivalenceCheckFailed {
                                    index: n,
                                    location: root,
                                });
                            }
                        }
                    }
                }
                MeroFunc::Formula(f) => {
                    for &z in UNIVALENCE_PROBES {
                        let jet = match f.jet(z) {
                            Ok(j) => j,
                            Err(_) => continue,
                        };
                        if jet.sph_deriv == 0.0 {
                            return Err(FuncError::UnivalenceCheckFailed { index: n, location: z });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn member(&self, n: u64) -> MeroFunc {
        (self.member)(n)
    }

    pub fn largest_index(&self) -> u64 {
        *self.indices.last().expect("indices validated nonempty")
    }
}

const UNIVALENCE_PROBES: &[C] = &[
    C::new(0.1, 0.2),
    C::new(-0.35, 0.05),
    C::new(0.4, -0.25),
    C::new(-0.15, -0.45),
    C::new(0.62, 0.3),
];

const FORMULA_PROBES: &[C] = &[
    C::new(0.11, 0.23),
    C::new(-0.31, 0.07),
    C::new(0.42, -0.27),
    C::new(-0.18, -0.41),
    C::new(0.57, 0.33),
];

/// Built-in families keyed by name.
///
/// - "nz": f_n(z) = n z (locally univalent, area bound 1)
/// - "nP": f_n(z) = n (2 z^m - 1), parameter m >= 1 (area bound m)
/// - "exp_inz": f_n(z) = exp(i n z) (locally univalent, unbounded area)
/// - "constant": f_n == c for a fixed complex c (area bound 0)
pub fn builtin_family(
    name: &str,
    m: Option<u32>,
    value: Option<C>,
    indices: Vec<u64>,
) -> Result<FamilySpec, FuncError> {
    match name {
        "nz" => FamilySpec::new(
            "nz",
            Arc::new(|n: u64| {
                MeroFunc::Rational(
                    RationalFunc::new(
                        Poly::new(vec![C::new(0.0, 0.0), C::new(n as f64, 0.0)]),
                        Poly::constant(C::new(1.0, 0.0)),
                    )
                    .expect("nz member"),
                )
            }),
            indices,
            true,
            Some(1.0),
        ),
        "nP" => {
            let m = m.ok_or(FuncError::MissingParameter("nP".into(), "m"))?;
            if m == 0 {
                return Err(FuncError::MissingParameter("nP".into(), "m >= 1"));
            }
            FamilySpec::new(
                format!("nP(m={m})"),
                Arc::new(move |n: u64| {
                    let mut coeffs = vec![C::new(0.0, 0.0); m as usize + 1];
                    coeffs[0] = C::new(-(n as f64), 0.0);
                    coeffs[m as usize] = C::new(2.0 * n as f64, 0.0);
                    MeroFunc::Rational(
                        RationalFunc::new(Poly::new(coeffs), Poly::constant(C::new(1.0, 0.0)))
                            .expect("nP member"),
                    )
                }),
                indices,
                m == 1,
                Some(m as f64),
            )
        }
        "exp_inz" => FamilySpec::new(
            "exp_inz",
            Arc::new(|n: u64| {
                let nf = n as f64;
                let eval = move |z: C| {
                    let w = (C::new(0.0, nf) * z).exp();
                    (w, C::new(0.0, nf) * w)
                };
                MeroFunc::Formula(
                    FormulaFunc::new(
                        format!("exp({n} i z)"),
                        Arc::new(eval),
                        Vec::new(),
                        0.0,
                        FORMULA_PROBES,
                    )
                    .expect("exp_inz member passes its own derivative check"),
                )
            }),
            indices,
            true,
            None,
        ),
        "constant" => {
            let c = value.ok_or(FuncError::MissingParameter("constant".into(), "value"))?;
            FamilySpec::new(
                format!("constant({c})"),
                Arc::new(move |_n: u64| MeroFunc::Rational(RationalFunc::constant(c))),
                indices,
                false,
                Some(0.0),
            )
        }
        other => Err(FuncError::UnknownFamily(other.to_string())),
    }
}
