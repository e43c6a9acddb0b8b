//! Command-line front end: argument parsing, config layering, and
//! dispatch into the library modules.
//!
//! Every command resolves a [`RunConfig`], optionally echoes it
//! (`--emit-config`), runs, and prints one JSON report to stdout or to
//! `--out`. Grid-shaped artifacts (heatmaps, solution grids) go to CSV
//! files under `--heatmap-dir`. Reports are byte-identical for a given
//! resolved config regardless of thread count.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bounds::{self, BoundKind, BoundsError};
use crate::concentration::{self, ConcError};
use crate::config::{self, ConfigError, RunConfig};
use crate::covering::{self, CoveringError};
use crate::funcmodel::{builtin_family, FamilySpec, FuncError, MeroFunc, RationalFunc};
use crate::liouville::{self, Grid2D, LiouvilleError};
use crate::quadrature::{self, Domain2D, QuadError};
use crate::report::{self, Json};

const EXIT_HELP: &str = "Exit codes:
  0  success
  1  runtime failure (evaluation error, hypothesis violated, no convergence)
  2  configuration or usage error
  3  quadrature cell budget exhausted (partial result on stdout)
  4  family is not quasi-normal (flagged-cell payload on stdout)
  5  index or epsilon schedule too short";

#[derive(Parser)]
#[command(
    name = "sphlab",
    version,
    about = "Spherical-area laboratory for meromorphic function families",
    after_help = EXIT_HELP
)]
pub struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Normalized spherical area of one function over a domain.
    Area(AreaArgs),
    /// Concentration detection and mass accounting for a family.
    Bubbles(BubblesArgs),
    /// Pointwise spherical-derivative bounds on the unit disk.
    Bounds(BoundsArgs),
    /// Curvature-equation solves, residual grids, and blow-up tables.
    Liouville(LiouvilleArgs),
    /// Preimage counting over a sphere sample grid.
    Covering(CoveringArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Config file of key=value lines; flags override its entries.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Print the fully resolved configuration and exit.
    #[arg(long)]
    emit_config: bool,
    /// Write the JSON report to this file instead of stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<String>,
    /// Worker threads (default: SPHLAB_THREADS, then all cores).
    /// Reports do not depend on this.
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
    /// Recorded in the resolved config for provenance.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// disk:cx,cy,r | rect:x0,x1,y0,y1 | annulus:cx,cy,rin,rout
    #[arg(long, value_name = "SPEC")]
    domain: Option<String>,
}

impl CommonArgs {
    fn pairs(&self, into: &mut Vec<(&'static str, String)>) {
        if let Some(v) = &self.out {
            into.push(("out", v.clone()));
        }
        if let Some(v) = self.seed {
            into.push(("seed", v.to_string()));
        }
        if let Some(v) = &self.domain {
            into.push(("domain", v.clone()));
        }
    }
}

#[derive(Args)]
struct FunctionArgs {
    /// Built-in family name (nz, nP, exp_inz, constant).
    #[arg(long, value_name = "NAME")]
    family: Option<String>,
    /// Degree parameter for the nP family.
    #[arg(long, value_name = "M")]
    m: Option<u32>,
    /// Value parameter for the constant family, as re,im.
    #[arg(long, value_name = "RE,IM")]
    value: Option<String>,
    /// Member index within the family.
    #[arg(long, value_name = "N")]
    n: Option<u64>,
    /// Rational function as JSON: {"num":[[re,im],...],"den":[...]}.
    #[arg(long, value_name = "JSON")]
    rational: Option<String>,
}

impl FunctionArgs {
    fn pairs(&self, into: &mut Vec<(&'static str, String)>) {
        if let Some(v) = &self.family {
            into.push(("family", v.clone()));
        }
        if let Some(v) = self.m {
            into.push(("m", v.to_string()));
        }
        if let Some(v) = &self.value {
            into.push(("value", v.clone()));
        }
        if let Some(v) = self.n {
            into.push(("n", v.to_string()));
        }
        if let Some(v) = &self.rational {
            into.push(("rational", v.clone()));
        }
    }
}

#[derive(Args)]
struct AreaArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    function: FunctionArgs,
    /// Quadrature tolerance on the normalized area.
    #[arg(long, value_name = "X")]
    tol: Option<String>,
    /// Cell budget before giving up with exit 3.
    #[arg(long, value_name = "N")]
    budget: Option<u64>,
}

#[derive(Args)]
struct BubblesArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    function: FunctionArgs,
    /// Index schedule: n1,n2,... | a:b | a:b:geom.
    #[arg(long, value_name = "SPEC")]
    indices: Option<String>,
    /// Detection grid resolution (cells per side).
    #[arg(long, value_name = "N")]
    resolution: Option<u64>,
    /// Decreasing mass-estimation radii, comma separated.
    #[arg(long, value_name = "LIST")]
    eps: Option<String>,
    /// Integer-mass tolerance for the quantization report.
    #[arg(long, value_name = "X")]
    quant_tol: Option<String>,
    /// Directory for per-member derivative heatmap CSVs.
    #[arg(long, value_name = "DIR")]
    heatmap_dir: Option<String>,
}

#[derive(Args)]
struct BoundsArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    function: FunctionArgs,
    /// Bound to verify: dufresnoy | steinmetz | fkr.
    #[arg(long, value_name = "NAME")]
    check: Option<String>,
    /// Bound parameter (area bound for dufresnoy, floor otherwise).
    #[arg(long, value_name = "X")]
    c: Option<String>,
    /// Angular grid resolution for the verification sweep.
    #[arg(long, value_name = "N")]
    resolution: Option<u64>,
}

#[derive(Args)]
struct LiouvilleArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    function: FunctionArgs,
    /// solve | residual | blowup.
    #[arg(long, value_name = "MODE")]
    mode: Option<String>,
    /// Shorthand for --mode solve.
    #[arg(long, conflicts_with_all = ["residual", "blowup", "mode"])]
    solve: bool,
    /// Shorthand for --mode residual.
    #[arg(long, conflicts_with_all = ["blowup", "mode"])]
    residual: bool,
    /// Shorthand for --mode blowup.
    #[arg(long, conflicts_with = "mode")]
    blowup: bool,
    /// Constant potential in -Delta u = V e^{2u}.
    #[arg(long = "V", value_name = "X")]
    potential: Option<String>,
    /// Reference solution: z | exp (boundary data and error table).
    #[arg(long, value_name = "NAME")]
    oracle: Option<String>,
    /// Grid spacing; the domain rectangle must be divisible by it.
    #[arg(long, value_name = "X")]
    h: Option<String>,
    /// Index schedule for blowup mode.
    #[arg(long, value_name = "SPEC")]
    indices: Option<String>,
    /// Directory for solution / residual grid CSVs.
    #[arg(long, value_name = "DIR")]
    heatmap_dir: Option<String>,
}

#[derive(Args)]
struct CoveringArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    function: FunctionArgs,
    /// oracle | count | report.
    #[arg(long, value_name = "MODE")]
    mode: Option<String>,
    /// Shorthand for --mode oracle (area via covering counts).
    #[arg(long, conflicts_with_all = ["count", "report", "mode"])]
    oracle: bool,
    /// Shorthand for --mode count (preimages of one target --w).
    #[arg(long, conflicts_with_all = ["report", "mode"])]
    count: bool,
    /// Shorthand for --mode report (low-multiplicity set for --c).
    #[arg(long, conflicts_with = "mode")]
    report: bool,
    /// Target point on the sphere: re,im or inf.
    #[arg(long, value_name = "RE,IM")]
    w: Option<String>,
    /// Area bound for the low-multiplicity report.
    #[arg(long, value_name = "X")]
    c: Option<String>,
    /// Sphere sample grid bands.
    #[arg(long, value_name = "N")]
    resolution: Option<u64>,
}

/// A failed run: exit code, stderr diagnostic, and an optional JSON
/// payload that still belongs on stdout (partial results).
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
    pub payload: Option<String>,
}

impl CliError {
    fn new(code: u8, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
            payload: None,
        }
    }

    fn config(message: impl Into<String>) -> Self {
        CliError::new(2, message)
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::config(e.to_string())
    }
}

impl From<FuncError> for CliError {
    fn from(e: FuncError) -> Self {
        CliError::config(e.to_string())
    }
}

impl From<QuadError> for CliError {
    fn from(e: QuadError) -> Self {
        match e {
            QuadError::BudgetExceeded { partial } => CliError {
                code: 3,
                message: "cell budget exhausted; partial result emitted".to_string(),
                payload: Some(report::quad_json(&partial).render()),
            },
            other => CliError::config(other.to_string()),
        }
    }
}

impl From<ConcError> for CliError {
    fn from(e: ConcError) -> Self {
        match e {
            ConcError::ScheduleTooShort { .. } => CliError::new(5, e.to_string()),
            ConcError::NotQuasiNormal {
                ref flagged,
                cell_size,
                clusters,
            } => CliError {
                code: 4,
                message: e.to_string(),
                payload: Some(
                    report::not_quasi_normal_json(flagged, cell_size, clusters).render(),
                ),
            },
            ConcError::ResolutionTooLow { .. }
            | ConcError::EpsSchedule(_)
            | ConcError::ProbeTooClose { .. } => CliError::config(e.to_string()),
            ConcError::Quad(q) => q.into(),
            ConcError::NotConcentrated { .. } | ConcError::Func(_) => {
                CliError::new(1, e.to_string())
            }
        }
    }
}

impl From<BoundsError> for CliError {
    fn from(e: BoundsError) -> Self {
        match e {
            BoundsError::OutsideDisk(_) | BoundsError::ParameterRange(_) => {
                CliError::config(e.to_string())
            }
            BoundsError::Quad(q) => q.into(),
            BoundsError::HypothesisViolated { .. } | BoundsError::Eval(_) => {
                CliError::new(1, e.to_string())
            }
        }
    }
}

impl From<LiouvilleError> for CliError {
    fn from(e: LiouvilleError) -> Self {
        match e {
            LiouvilleError::GridInvalid(_) | LiouvilleError::InvalidData(_) => {
                CliError::config(e.to_string())
            }
            other => CliError::new(1, other.to_string()),
        }
    }
}

impl From<CoveringError> for CliError {
    fn from(e: CoveringError) -> Self {
        match e {
            CoveringError::ResolutionTooLow(_) | CoveringError::DegreeTooHigh(_) => {
                CliError::config(e.to_string())
            }
            CoveringError::Quad(q) => q.into(),
            other => CliError::new(1, other.to_string()),
        }
    }
}

/// Parses args, resolves config, runs the command, and returns the
/// process exit code. Testable without spawning a process.
pub fn run_from<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            // clap renders --help/--version as "errors" with code 0.
            let code = e.exit_code().clamp(0, 255) as u8;
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            if let Some(p) = &e.payload {
                print!("{p}");
            }
            eprintln!("sphlab: {}", e.message);
            e.code
        }
    }
}

fn init_threads(flag: Option<usize>) {
    let n = flag.or_else(|| {
        std::env::var("SPHLAB_THREADS")
            .ok()
            .and_then(|s| s.parse::<usize>().ok())
    });
    if let Some(n) = n {
        if n >= 1 {
            // A second initialization in one process is a no-op; the
            // pool size cannot change output, only timing.
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
    }
}

fn dispatch(cmd: &Cmd) -> Result<(), CliError> {
    let (name, common): (&str, &CommonArgs) = match cmd {
        Cmd::Area(a) => ("area", &a.common),
        Cmd::Bubbles(a) => ("bubbles", &a.common),
        Cmd::Bounds(a) => ("bounds", &a.common),
        Cmd::Liouville(a) => ("liouville", &a.common),
        Cmd::Covering(a) => ("covering", &a.common),
    };
    init_threads(common.threads);
    let file_pairs: BTreeMap<String, String> = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::config(format!("config {}: {e}", path.display()))
            })?;
            config::parse_config_text(&text)?
        }
        None => BTreeMap::new(),
    };
    let mut flags: Vec<(&'static str, String)> = Vec::new();
    common.pairs(&mut flags);
    match cmd {
        Cmd::Area(a) => {
            a.function.pairs(&mut flags);
            push_opt(&mut flags, "tol", &a.tol);
            if let Some(v) = a.budget {
                flags.push(("budget", v.to_string()));
            }
        }
        Cmd::Bubbles(a) => {
            a.function.pairs(&mut flags);
            push_opt(&mut flags, "indices", &a.indices);
            push_opt(&mut flags, "eps", &a.eps);
            push_opt(&mut flags, "quant_tol", &a.quant_tol);
            push_opt(&mut flags, "heatmap_dir", &a.heatmap_dir);
            if let Some(v) = a.resolution {
                flags.push(("resolution", v.to_string()));
            }
        }
        Cmd::Bounds(a) => {
            a.function.pairs(&mut flags);
            push_opt(&mut flags, "check", &a.check);
            push_opt(&mut flags, "c", &a.c);
            if let Some(v) = a.resolution {
                flags.push(("resolution", v.to_string()));
            }
        }
        Cmd::Liouville(a) => {
            a.function.pairs(&mut flags);
            if let Some(m) = mode_of(&a.mode, &[("solve", a.solve), ("residual", a.residual), ("blowup", a.blowup)]) {
                flags.push(("mode", m));
            }
            push_opt(&mut flags, "potential", &a.potential);
            push_opt(&mut flags, "oracle", &a.oracle);
            push_opt(&mut flags, "h", &a.h);
            push_opt(&mut flags, "indices", &a.indices);
            push_opt(&mut flags, "heatmap_dir", &a.heatmap_dir);
        }
        Cmd::Covering(a) => {
            a.function.pairs(&mut flags);
            if let Some(m) = mode_of(&a.mode, &[("oracle", a.oracle), ("count", a.count), ("report", a.report)]) {
                flags.push(("mode", m));
            }
            push_opt(&mut flags, "w", &a.w);
            push_opt(&mut flags, "c", &a.c);
            if let Some(v) = a.resolution {
                flags.push(("resolution", v.to_string()));
            }
        }
    }
    let cfg = RunConfig::resolve(name, &file_pairs, &flags)?;
    if common.emit_config {
        print!("{}", cfg.emit());
        return Ok(());
    }
    let json = match cmd {
        Cmd::Area(_) => cmd_area(&cfg)?,
        Cmd::Bubbles(_) => cmd_bubbles(&cfg)?,
        Cmd::Bounds(_) => cmd_bounds(&cfg)?,
        Cmd::Liouville(_) => cmd_liouville(&cfg)?,
        Cmd::Covering(_) => cmd_covering(&cfg)?,
    };
    deliver(&cfg, &json)
}

fn push_opt(flags: &mut Vec<(&'static str, String)>, key: &'static str, v: &Option<String>) {
    if let Some(v) = v {
        flags.push((key, v.clone()));
    }
}

fn mode_of(explicit: &Option<String>, shorthands: &[(&str, bool)]) -> Option<String> {
    if let Some(m) = explicit {
        return Some(m.clone());
    }
    shorthands
        .iter()
        .find(|&&(_, set)| set)
        .map(|&(name, _)| name.to_string())
}

fn deliver(cfg: &RunConfig, text: &str) -> Result<(), CliError> {
    match &cfg.out {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::new(1, format!("writing {path}: {e}"))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_grid_csv(dir: &str, name: &str, content: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::new(1, format!("creating {dir}: {e}")))?;
    let path = Path::new(dir).join(name);
    fs::write(&path, content)
        .map_err(|e| CliError::new(1, format!("writing {}: {e}", path.display())))
}

/// One concrete function from the config: a rational literal, or one
/// member of a built-in family selected by `n`.
fn single_function(cfg: &RunConfig) -> Result<MeroFunc, CliError> {
    match (&cfg.rational, &cfg.family) {
        (Some(_), Some(_)) => Err(CliError::config(
            "--rational and --family are mutually exclusive",
        )),
        (Some(json), None) => Ok(MeroFunc::Rational(RationalFunc::from_json_str(json)?)),
        (None, Some(fam)) => {
            let n = cfg
                .n
                .ok_or_else(|| CliError::config("--family needs a member index --n"))?;
            let spec = builtin_family(fam, cfg.m, cfg.value, vec![n])?;
            Ok(spec.member(n))
        }
        (None, None) => Err(CliError::config("need --rational or --family")),
    }
}

fn family_spec(cfg: &RunConfig) -> Result<FamilySpec, CliError> {
    let name = cfg
        .family
        .as_ref()
        .ok_or_else(|| CliError::config("this command needs --family"))?;
    if cfg.rational.is_some() {
        return Err(CliError::config(
            "family commands take --family, not --rational",
        ));
    }
    let indices = cfg
        .indices
        .clone()
        .ok_or_else(|| CliError::config("this command needs --indices"))?;
    Ok(builtin_family(name, cfg.m, cfg.value, indices)?)
}

fn cmd_area(cfg: &RunConfig) -> Result<String, CliError> {
    let f = single_function(cfg)?;
    let r = quadrature::spherical_area_with_budget(
        &f,
        &cfg.domain,
        cfg.tol,
        cfg.budget as usize,
    )?;
    Ok(report::quad_json(&r).render())
}

fn cmd_bubbles(cfg: &RunConfig) -> Result<String, CliError> {
    let fam = family_spec(cfg)?;
    let eps = cfg.eps.as_ref().expect("bubbles default schedule");
    if let Some(dir) = &cfg.heatmap_dir {
        for &n in &fam.indices {
            let field = concentration::marty_field(&fam.member(n), &cfg.domain, cfg.resolution)?;
            write_grid_csv(dir, &format!("marty_n{n}.csv"), &field.to_csv())?;
        }
    }
    let profile =
        concentration::mass_profile(&fam, &cfg.domain, cfg.resolution, eps, cfg.quant_tol)?;
    Ok(report::profile_json(&profile).render())
}

fn cmd_bounds(cfg: &RunConfig) -> Result<String, CliError> {
    let f = single_function(cfg)?;
    let check = cfg
        .check
        .as_ref()
        .ok_or_else(|| CliError::config("bounds needs --check"))?;
    let c = cfg
        .c
        .ok_or_else(|| CliError::config("bounds needs the parameter --c"))?;
    let kind = match check.as_str() {
        "dufresnoy" => BoundKind::Dufresnoy { c_area: c },
        "steinmetz" => BoundKind::Steinmetz { c },
        "fkr" => BoundKind::Fkr { c },
        other => return Err(CliError::config(format!("unknown bound `{other}`"))),
    };
    let r = bounds::verify_bound(&f, kind, cfg.resolution)?;
    Ok(report::bound_json(&r).render())
}

fn liouville_grid(cfg: &RunConfig) -> Result<Grid2D, CliError> {
    let Domain2D::Rectangle { x0, x1, y0, y1 } = cfg.domain else {
        return Err(CliError::config(
            "liouville needs a rect:x0,x1,y0,y1 domain",
        ));
    };
    let nx = ((x1 - x0) / cfg.h).round() as i64 + 1;
    let ny = ((y1 - y0) / cfg.h).round() as i64 + 1;
    if !(8..=4097).contains(&nx) || !(8..=4097).contains(&ny) {
        return Err(CliError::config(format!(
            "h = {} gives a {}x{} grid; need 8..=4097 nodes per side",
            cfg.h, nx, ny
        )));
    }
    Ok(Grid2D::new(x0, x1, y0, y1, nx as usize, ny as usize)?)
}

/// ln(1 + e^t) without overflow.
fn softplus(t: f64) -> f64 {
    if t > 30.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn oracle_values(name: &str, g: &Grid2D) -> Vec<f64> {
    let mut u = Vec::with_capacity(g.len());
    for j in 0..g.ny {
        for i in 0..g.nx {
            let z = g.node(i, j);
            u.push(match name {
                "z" => -z.norm_sqr().ln_1p(),
                _ => z.re - softplus(2.0 * z.re),
            });
        }
    }
    u
}

fn cmd_liouville(cfg: &RunConfig) -> Result<String, CliError> {
    let g = liouville_grid(cfg)?;
    match cfg.mode.as_deref().expect("liouville default mode") {
        "solve" => {
            let exact = oracle_values(&cfg.oracle, &g);
            let v = vec![cfg.potential; g.len()];
            let sol = liouville::solve_liouville(&v, &exact, &g)?;
            let err = sol
                .u
                .iter()
                .zip(&exact)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            if let Some(dir) = &cfg.heatmap_dir {
                write_grid_csv(dir, "u.csv", &g.values_to_csv(&sol.u))?;
            }
            Ok(Json::Obj(vec![
                ("nx", Json::U(g.nx as u64)),
                ("ny", Json::U(g.ny as u64)),
                ("h", Json::F(g.h())),
                ("residual_norm", Json::F(sol.residual_norm)),
                ("newton_iters", Json::U(sol.newton_iters as u64)),
                ("converged", Json::Bool(sol.converged)),
                ("oracle_max_error", Json::F(err)),
            ])
            .render())
        }
        "residual" => {
            let f = single_function(cfg)?;
            let r = liouville::liouville_residual(&f, &g)?;
            let max_abs = r
                .iter()
                .filter(|v| v.is_finite())
                .map(|v| v.abs())
                .fold(0.0f64, f64::max);
            if let Some(dir) = &cfg.heatmap_dir {
                write_grid_csv(dir, "residual.csv", &g.values_to_csv(&r))?;
            }
            Ok(Json::Obj(vec![
                ("nx", Json::U(g.nx as u64)),
                ("ny", Json::U(g.ny as u64)),
                ("h", Json::F(g.h())),
                ("max_abs_residual", Json::F(max_abs)),
            ])
            .render())
        }
        _ => {
            let fam = family_spec(cfg)?;
            let rows = liouville::blowup_demo(&fam, &g)?;
            Ok(report::blowup_json(&rows).render())
        }
    }
}

fn cmd_covering(cfg: &RunConfig) -> Result<String, CliError> {
    let f = single_function(cfg)?;
    let rat = f
        .as_rational()
        .ok_or_else(|| CliError::config("covering needs a rational function"))?;
    match cfg.mode.as_deref().expect("covering default mode") {
        "oracle" => {
            let area = covering::covering_area_oracle(rat, &cfg.domain, cfg.resolution)?;
            Ok(Json::Obj(vec![
                ("area_estimate", Json::F(area)),
                ("resolution", Json::U(cfg.resolution as u64)),
            ])
            .render())
        }
        "count" => {
            let w = cfg
                .w
                .as_ref()
                .ok_or_else(|| CliError::config("count mode needs --w"))?;
            let w = config::parse_sphere_point("w", w)?;
            let (with_mult, distinct) = covering::covering_count(rat, w, &cfg.domain)?;
            Ok(Json::Obj(vec![
                ("w", Json::sphere_point(w)),
                ("count_with_multiplicity", Json::U(with_mult as u64)),
                ("distinct", Json::U(distinct as u64)),
            ])
            .render())
        }
        _ => {
            let c = cfg
                .c
                .ok_or_else(|| CliError::config("report mode needs the area bound --c"))?;
            let r = covering::low_multiplicity_report(rat, &cfg.domain, c, cfg.resolution)?;
            Ok(report::covering_report_json(&r).render())
        }
    }
}
