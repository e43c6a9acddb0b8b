//! Layered run configuration for the command-line front end.
//!
//! A run is described by a flat key=value dictionary. Values arrive in
//! three layers with increasing precedence: per-command defaults, an
//! optional config file, then command-line flags. The resolved
//! [`RunConfig`] serializes back to the same key=value text through
//! [`RunConfig::emit`], and feeding that text back as a config file
//! reproduces the run exactly (floats are printed with 17 significant
//! digits, so the round trip is lossless).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use thiserror::Error;

use crate::quadrature::Domain2D;
use crate::sphere::SpherePoint;

type C = Complex64;

#[derive(Debug, Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// Prints a float with 17 significant digits; parses back to the same
/// bits for every finite input.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x == f64::INFINITY {
        "inf".to_string()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn parse_f64(key: &str, s: &str) -> Result<f64, ConfigError> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| err(format!("{key}: `{s}` is not a number")))
}

fn parse_finite(key: &str, s: &str) -> Result<f64, ConfigError> {
    let v = parse_f64(key, s)?;
    if !v.is_finite() {
        return Err(err(format!("{key}: `{s}` must be finite")));
    }
    Ok(v)
}

fn parse_u64(key: &str, s: &str) -> Result<u64, ConfigError> {
    s.trim()
        .parse::<u64>()
        .map_err(|_| err(format!("{key}: `{s}` is not a nonnegative integer")))
}

fn split_floats(key: &str, s: &str) -> Result<Vec<f64>, ConfigError> {
    s.split(',')
        .map(|t| parse_finite(key, t))
        .collect::<Result<Vec<f64>, _>>()
}

/// Domain specs: `disk:cx,cy,r`, `rect:x0,x1,y0,y1`,
/// `annulus:cx,cy,rin,rout`.
pub fn parse_domain(spec: &str) -> Result<Domain2D, ConfigError> {
    let (kind, rest) = spec
        .split_once(':')
        .ok_or_else(|| err(format!("domain `{spec}` has no `kind:` prefix")))?;
    let nums = split_floats("domain", rest)?;
    let bad = |e: crate::quadrature::QuadError| err(format!("domain `{spec}`: {e}"));
    match (kind, nums.as_slice()) {
        ("disk", [cx, cy, r]) => Domain2D::disk(C::new(*cx, *cy), *r).map_err(bad),
        ("rect", [x0, x1, y0, y1]) => Domain2D::rectangle(*x0, *x1, *y0, *y1).map_err(bad),
        ("annulus", [cx, cy, rin, rout]) => {
            Domain2D::annulus(C::new(*cx, *cy), *rin, *rout).map_err(bad)
        }
        ("disk", _) => Err(err(format!("domain `{spec}`: disk takes cx,cy,r"))),
        ("rect", _) => Err(err(format!("domain `{spec}`: rect takes x0,x1,y0,y1"))),
        ("annulus", _) => Err(err(format!("domain `{spec}`: annulus takes cx,cy,rin,rout"))),
        _ => Err(err(format!(
            "domain `{spec}`: unknown kind `{kind}` (disk, rect, annulus)"
        ))),
    }
}

/// Canonical text for a parsed domain; `parse_domain` inverts it.
pub fn domain_to_text(d: &Domain2D) -> String {
    match *d {
        Domain2D::Disk { center, radius } => format!(
            "disk:{},{},{}",
            fmt_f64(center.re),
            fmt_f64(center.im),
            fmt_f64(radius)
        ),
        Domain2D::Rectangle { x0, x1, y0, y1 } => format!(
            "rect:{},{},{},{}",
            fmt_f64(x0),
            fmt_f64(x1),
            fmt_f64(y0),
            fmt_f64(y1)
        ),
        Domain2D::Annulus {
            center,
            r_in,
            r_out,
        } => format!(
            "annulus:{},{},{},{}",
            fmt_f64(center.re),
            fmt_f64(center.im),
            fmt_f64(r_in),
            fmt_f64(r_out)
        ),
        // Punctured disks never appear in configs; they are built
        // internally by the mass-estimation pipeline.
        Domain2D::DiskMinusPoints { .. } => unreachable!("not a config-level domain"),
    }
}

/// Index schedules: a comma list `1,2,4`, a range `a:b` (every
/// integer), or `a:b:geom` (doubling from a, plus b itself).
pub fn parse_indices(spec: &str) -> Result<Vec<u64>, ConfigError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let out: Vec<u64> = match parts.as_slice() {
        [list] => list
            .split(',')
            .map(|t| parse_u64("indices", t))
            .collect::<Result<Vec<u64>, _>>()?,
        [a, b] => {
            let (a, b) = (parse_u64("indices", a)?, parse_u64("indices", b)?);
            if a > b || b - a > 4096 {
                return Err(err(format!("indices `{spec}`: need a <= b <= a + 4096")));
            }
            (a..=b).collect()
        }
        [a, b, mode] if *mode == "geom" => {
            let (a, b) = (parse_u64("indices", a)?, parse_u64("indices", b)?);
            if a == 0 || a > b {
                return Err(err(format!("indices `{spec}`: need 1 <= a <= b")));
            }
            let mut v = Vec::new();
            let mut n = a;
            while n < b {
                v.push(n);
                n = n.saturating_mul(2);
            }
            v.push(b);
            v
        }
        _ => {
            return Err(err(format!(
                "indices `{spec}`: use `n1,n2,...`, `a:b`, or `a:b:geom`"
            )))
        }
    };
    if out.is_empty() || out.windows(2).any(|w| w[0] >= w[1]) {
        return Err(err(format!(
            "indices `{spec}` must be nonempty and strictly increasing"
        )));
    }
    Ok(out)
}

fn indices_to_text(v: &[u64]) -> String {
    v.iter()
        .map(|n| n.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// A complex number as `re,im`.
pub fn parse_complex(key: &str, s: &str) -> Result<C, ConfigError> {
    match split_floats(key, s)?.as_slice() {
        [re, im] => Ok(C::new(*re, *im)),
        _ => Err(err(format!("{key}: `{s}` must be `re,im`"))),
    }
}

/// A sphere target: `re,im` or `inf`.
pub fn parse_sphere_point(key: &str, s: &str) -> Result<SpherePoint, ConfigError> {
    if s.trim() == "inf" {
        Ok(SpherePoint::Infinity)
    } else {
        Ok(SpherePoint::Finite(parse_complex(key, s)?))
    }
}

/// Plain key=value text: one pair per line, `#` starts a comment,
/// blank lines ignored.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| err(format!("config line {}: `{line}` has no `=`", lineno + 1)))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

/// Fully resolved run description. Every field that the command reads
/// has a concrete value; `emit` prints them all back out.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: String,
    pub family: Option<String>,
    pub m: Option<u32>,
    pub value: Option<C>,
    pub n: Option<u64>,
    /// Rational function in the JSON coefficient form.
    pub rational: Option<String>,
    pub indices: Option<Vec<u64>>,
    pub domain: Domain2D,
    pub tol: f64,
    pub budget: u64,
    pub resolution: usize,
    pub eps: Option<Vec<f64>>,
    pub quant_tol: f64,
    pub check: Option<String>,
    pub c: Option<f64>,
    pub mode: Option<String>,
    pub potential: f64,
    pub oracle: String,
    pub h: f64,
    pub w: Option<String>,
    pub heatmap_dir: Option<String>,
    pub out: Option<String>,
    pub seed: u64,
}

const KNOWN_KEYS: &[&str] = &[
    "command",
    "family",
    "m",
    "value",
    "n",
    "rational",
    "indices",
    "domain",
    "tol",
    "budget",
    "resolution",
    "eps",
    "quant_tol",
    "check",
    "c",
    "mode",
    "potential",
    "oracle",
    "h",
    "w",
    "heatmap_dir",
    "out",
    "seed",
];

impl RunConfig {
    /// Builds the resolved config for `command` from a config file's
    /// pairs overlaid by flag pairs. Unknown keys are rejected rather
    /// than ignored so typos cannot silently fall back to defaults.
    pub fn resolve(
        command: &str,
        file_pairs: &BTreeMap<String, String>,
        flag_pairs: &[(&str, String)],
    ) -> Result<RunConfig, ConfigError> {
        let mut merged: BTreeMap<String, String> = BTreeMap::new();
        for (k, v) in file_pairs {
            if !KNOWN_KEYS.contains(&k.as_str()) {
                return Err(err(format!("unknown config key `{k}`")));
            }
            merged.insert(k.clone(), v.clone());
        }
        if let Some(cmd) = merged.get("command") {
            if cmd != command {
                return Err(err(format!(
                    "config file is for command `{cmd}`, invoked as `{command}`"
                )));
            }
        }
        for (k, v) in flag_pairs {
            debug_assert!(KNOWN_KEYS.contains(k));
            merged.insert((*k).to_string(), v.clone());
        }

        let get = |k: &str| merged.get(k).map(|s| s.as_str());
        let default_domain = match command {
            "liouville" => "rect:-0.5,0.5,-0.5,0.5",
            _ => "disk:0,0,1",
        };
        let domain = parse_domain(get("domain").unwrap_or(default_domain))?;
        let default_mode = match command {
            "liouville" => Some("solve"),
            "covering" => Some("oracle"),
            _ => None,
        };
        let mode = get("mode")
            .map(|s| s.to_string())
            .or_else(|| default_mode.map(|s| s.to_string()));
        if let Some(m) = &mode {
            let allowed: &[&str] = match command {
                "liouville" => &["solve", "residual", "blowup"],
                "covering" => &["oracle", "count", "report"],
                _ => return Err(err(format!("command `{command}` takes no mode"))),
            };
            if !allowed.contains(&m.as_str()) {
                return Err(err(format!(
                    "mode `{m}` invalid for `{command}` (one of {})",
                    allowed.join(", ")
                )));
            }
        }
        let rational = match get("rational") {
            // Parse now and store the canonical coefficient form.
            Some(s) => Some(
                crate::funcmodel::RationalFunc::from_json_str(s)
                    .map_err(|e| err(format!("rational: {e}")))?
                    .to_json_string(),
            ),
            None => None,
        };
        let indices = match get("indices") {
            Some(s) => Some(parse_indices(s)?),
            None => match command {
                "bubbles" => Some(parse_indices("1:128:geom")?),
                "liouville" if mode.as_deref() == Some("blowup") => {
                    Some(parse_indices("2,4,8,16,32")?)
                }
                _ => None,
            },
        };
        let eps = match get("eps") {
            Some(s) => {
                let v = split_floats("eps", s)?;
                Some(v)
            }
            None => {
                if command == "bubbles" {
                    Some(vec![0.4, 0.3, 0.2, 0.15, 0.1])
                } else {
                    None
                }
            }
        };
        let oracle = get("oracle").unwrap_or("z").to_string();
        if !matches!(oracle.as_str(), "z" | "exp") {
            return Err(err(format!("oracle `{oracle}` unknown (z, exp)")));
        }
        let cfg = RunConfig {
            command: command.to_string(),
            family: get("family").map(|s| s.to_string()),
            m: match get("m") {
                Some(s) => Some(
                    s.parse::<u32>()
                        .map_err(|_| err(format!("m: `{s}` is not a small integer")))?,
                ),
                None => None,
            },
            value: match get("value") {
                Some(s) => Some(parse_complex("value", s)?),
                None => None,
            },
            n: match get("n") {
                Some(s) => Some(parse_u64("n", s)?),
                None => None,
            },
            rational,
            indices,
            domain,
            tol: match get("tol") {
                Some(s) => {
                    let t = parse_finite("tol", s)?;
                    if t <= 0.0 {
                        return Err(err(format!("tol must be positive, got {t}")));
                    }
                    t
                }
                None => 1e-8,
            },
            budget: match get("budget") {
                Some(s) => parse_u64("budget", s)?,
                None => 1 << 22,
            },
            resolution: match get("resolution") {
                Some(s) => parse_u64("resolution", s)? as usize,
                None => 64,
            },
            eps,
            quant_tol: match get("quant_tol") {
                Some(s) => parse_finite("quant_tol", s)?,
                None => 0.05,
            },
            check: get("check").map(|s| s.to_string()),
            c: match get("c") {
                Some(s) => Some(parse_finite("c", s)?),
                None => None,
            },
            mode,
            potential: match get("potential") {
                Some(s) => parse_finite("potential", s)?,
                None => 4.0,
            },
            oracle,
            h: match get("h") {
                Some(s) => {
                    let h = parse_finite("h", s)?;
                    if h <= 0.0 {
                        return Err(err(format!("h must be positive, got {h}")));
                    }
                    h
                }
                None => 0.03125,
            },
            w: get("w").map(|s| s.to_string()),
            heatmap_dir: get("heatmap_dir").map(|s| s.to_string()),
            out: get("out").map(|s| s.to_string()),
            seed: match get("seed") {
                Some(s) => parse_u64("seed", s)?,
                None => 0,
            },
        };
        if let Some(w) = &cfg.w {
            parse_sphere_point("w", w)?;
        }
        if let Some(check) = &cfg.check {
            if !matches!(check.as_str(), "dufresnoy" | "steinmetz" | "fkr") {
                return Err(err(format!(
                    "check `{check}` unknown (dufresnoy, steinmetz, fkr)"
                )));
            }
        }
        Ok(cfg)
    }

    /// The key=value text of the resolved run; `parse_config_text` +
    /// `resolve` on this text reproduce the config exactly.
    pub fn emit(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("command", self.command.clone());
        if let Some(v) = &self.family {
            put("family", v.clone());
        }
        if let Some(v) = self.m {
            put("m", v.to_string());
        }
        if let Some(v) = self.value {
            put("value", format!("{},{}", fmt_f64(v.re), fmt_f64(v.im)));
        }
        if let Some(v) = self.n {
            put("n", v.to_string());
        }
        if let Some(v) = &self.rational {
            put("rational", v.clone());
        }
        if let Some(v) = &self.indices {
            put("indices", indices_to_text(v));
        }
        put("domain", domain_to_text(&self.domain));
        put("tol", fmt_f64(self.tol));
        put("budget", self.budget.to_string());
        put("resolution", self.resolution.to_string());
        if let Some(v) = &self.eps {
            put(
                "eps",
                v.iter().map(|&e| fmt_f64(e)).collect::<Vec<_>>().join(","),
            );
        }
        put("quant_tol", fmt_f64(self.quant_tol));
        if let Some(v) = &self.check {
            put("check", v.clone());
        }
        if let Some(v) = self.c {
            put("c", fmt_f64(v));
        }
        if let Some(v) = &self.mode {
            put("mode", v.clone());
        }
        put("potential", fmt_f64(self.potential));
        put("oracle", self.oracle.clone());
        put("h", fmt_f64(self.h));
        if let Some(v) = &self.w {
            put("w", v.clone());
        }
        if let Some(v) = &self.heatmap_dir {
            put("heatmap_dir", v.clone());
        }
        if let Some(v) = &self.out {
            put("out", v.clone());
        }
        put("seed", self.seed.to_string());
        s
    }
}
