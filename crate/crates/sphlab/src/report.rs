//! Deterministic JSON emission for command reports.
//!
//! Field order is fixed by construction order and floats print with 17
//! significant digits, so a given report has exactly one byte
//! representation. Non-finite floats have no JSON number form and
//! appear as null.

use num_complex::Complex64;

use crate::bounds::BoundReport;
use crate::concentration::{IrregularPoint, MassEstimate, MassProfile};
use crate::covering::CoveringReport;
use crate::liouville::BlowupRow;
use crate::quadrature::QuadResult;
use crate::sphere::SpherePoint;

type C = Complex64;

/// JSON value with insertion-ordered objects.
#[derive(Debug, Clone)]
pub enum Json {
    Null,
    Bool(bool),
    U(u64),
    F(f64),
    S(String),
    Arr(Vec<Json>),
    Obj(Vec<(&'static str, Json)>),
}

fn escape_into(out: &mut String, s: &str) {
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                out.push_str(&format!("\\u{:04x}", c as u32));
            }
            c => out.push(c),
        }
    }
    out.push('"');
}

impl Json {
    pub fn complex(z: C) -> Json {
        Json::Arr(vec![Json::F(z.re), Json::F(z.im)])
    }

    pub fn sphere_point(p: SpherePoint) -> Json {
        match p {
            SpherePoint::Finite(z) => Json::complex(z),
            SpherePoint::Infinity => Json::S("inf".to_string()),
        }
    }

    fn write_into(&self, out: &mut String) {
        match self {
            Json::Null => out.push_str("null"),
            Json::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Json::U(n) => out.push_str(&n.to_string()),
            Json::F(x) => {
                if x.is_finite() {
                    out.push_str(&format!("{x:.16e}"));
                } else {
                    out.push_str("null");
                }
            }
            Json::S(s) => escape_into(out, s),
            Json::Arr(items) => {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    item.write_into(out);
                }
                out.push(']');
            }
            Json::Obj(fields) => {
                out.push('{');
                for (i, (k, v)) in fields.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    escape_into(out, k);
                    out.push(':');
                    v.write_into(out);
                }
                out.push('}');
            }
        }
    }

    /// Single-line rendering plus a trailing newline.
    pub fn render(&self) -> String {
        let mut s = String::new();
        self.write_into(&mut s);
        s.push('\n');
        s
    }
}

pub fn quad_json(r: &QuadResult) -> Json {
    Json::Obj(vec![
        ("value", Json::F(r.value)),
        ("error_estimate", Json::F(r.error_estimate)),
        ("cells", Json::U(r.cells)),
        ("converged", Json::Bool(r.converged)),
    ])
}

fn irregular_json(p: &IrregularPoint) -> Json {
    Json::Obj(vec![
        ("location", Json::complex(p.location)),
        ("marty_growth_exponent", Json::F(p.marty_growth_exponent)),
        (
            "witness",
            Json::Arr(
                p.witness
                    .iter()
                    .map(|&(n, z, fs)| Json::Arr(vec![Json::U(n), Json::complex(z), Json::F(fs)]))
                    .collect(),
            ),
        ),
    ])
}

fn mass_json(m: &MassEstimate) -> Json {
    Json::Obj(vec![
        ("p", Json::complex(m.p)),
        ("estimate", Json::F(m.estimate)),
        ("uncertainty", Json::F(m.uncertainty)),
    ])
}

pub fn profile_json(p: &MassProfile) -> Json {
    Json::Obj(vec![
        ("s", Json::Arr(p.s.iter().map(irregular_json).collect())),
        ("alpha", Json::Arr(p.alpha.iter().map(mass_json).collect())),
        ("residual_area", Json::F(p.residual_area)),
        ("order_bound", Json::F(p.order_bound)),
        (
            "quantized",
            Json::Arr(
                p.quantized
                    .iter()
                    .map(|&(z, ok)| Json::Arr(vec![Json::complex(z), Json::Bool(ok)]))
                    .collect(),
            ),
        ),
    ])
}

pub fn not_quasi_normal_json(flagged: &[C], cell_size: f64, clusters: usize) -> Json {
    Json::Obj(vec![
        ("error", Json::S("not_quasi_normal".to_string())),
        (
            "flagged",
            Json::Arr(flagged.iter().map(|&z| Json::complex(z)).collect()),
        ),
        ("cell_size", Json::F(cell_size)),
        ("clusters", Json::U(clusters as u64)),
    ])
}

pub fn bound_json(r: &BoundReport) -> Json {
    Json::Obj(vec![
        ("bound_name", Json::S(r.bound_name.clone())),
        (
            "parameters",
            // BTreeMap iterates sorted by key: a fixed order.
            Json::Arr(
                r.parameters
                    .iter()
                    .map(|(k, &v)| Json::Arr(vec![Json::S(k.clone()), Json::F(v)]))
                    .collect(),
            ),
        ),
        (
            "grid_violations",
            Json::Arr(
                r.grid_violations
                    .iter()
                    .map(|&(z, fs, b)| {
                        Json::Arr(vec![Json::complex(z), Json::F(fs), Json::F(b)])
                    })
                    .collect(),
            ),
        ),
        ("max_ratio", Json::F(r.max_ratio)),
    ])
}

pub fn covering_report_json(r: &CoveringReport) -> Json {
    Json::Obj(vec![
        ("m", Json::U(r.m as u64)),
        ("epsilon", Json::F(r.epsilon)),
        ("measure_low", Json::F(r.measure_low)),
        (
            "sampled_e",
            Json::Obj(vec![
                ("total_weight", Json::F(r.sampled_e.total_weight)),
                (
                    "points",
                    Json::Arr(
                        r.sampled_e
                            .points
                            .iter()
                            .map(|&(p, w)| {
                                Json::Arr(vec![Json::sphere_point(p), Json::F(w)])
                            })
                            .collect(),
                    ),
                ),
            ]),
        ),
    ])
}

pub fn blowup_json(rows: &[BlowupRow]) -> Json {
    Json::Obj(vec![(
        "rows",
        Json::Arr(
            rows.iter()
                .map(|r| {
                    Json::Obj(vec![
                        ("n", Json::U(r.n)),
                        ("max_u", Json::F(r.max_u)),
                        ("min_u", Json::F(r.min_u)),
                        ("mass", Json::F(r.mass)),
                    ])
                })
                .collect(),
        ),
    )])
}
