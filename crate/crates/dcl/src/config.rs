//! CLI entry point: configuration ingestion, subcommand dispatch, artifact
//! emission, and the exit-code contract (0 pass, 1 consistency failure,
//! 2 config error, 3 inconclusive-only, 4 I/O failure).

use crate::capacity::{refinement_sweep, Verdict};
use crate::coeff::{CoeffFamily, CoefficientField};
use crate::error::{DclError, Result};
use crate::form::{assemble_elliptic, neumann_form, MassKind};
use crate::mesh::{build_mesh, Grading};
use crate::region::{EndKind, Omega, OmegaInterval, RegionSpec, TargetSet};
use crate::report;
use crate::scenario::{
    self, battery, evaluate, run_disjoint_interval, run_halfline_counterexample, Scenario,
};
use crate::semigroup::Semigroup;
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Deserialize;
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Both,
}

impl Format {
    fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }
    fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }
}

/// Numerical laboratory for Dirichlet forms on discretized 1-D domains.
#[derive(Debug, Parser)]
#[command(name = "dcl", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// TOML config file; flags override file values, file values override
    /// defaults
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Mesh levels (elements per level), comma separated, strictly increasing
    #[arg(long, global = true, value_delimiter = ',')]
    levels: Option<Vec<usize>>,
    /// Evaluation times, comma separated
    #[arg(long, global = true, value_delimiter = ',')]
    times: Option<Vec<f64>>,
    /// Output directory [default: out]
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Artifact format [default: both]
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Threshold below which an extrapolated capacity counts as zero
    /// [default: 1e-4]
    #[arg(long = "tol-capacity", global = true)]
    tol_capacity: Option<f64>,
    /// Tolerance for entrywise positivity claims [default: 1e-9]
    #[arg(long = "tol-pos", global = true)]
    tol_pos: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Capacity tables down the neighborhood schedule, per mesh level
    Capacity,
    /// Evolve an initial profile under the configured semigroup
    Evolve,
    /// Run a named scenario (halfline, disjoint, or a catalog id) or an
    /// inline config, and judge the theorem implications
    Verify {
        /// Scenario name; omit to use the inline config
        #[arg(long)]
        scenario: Option<String>,
    },
    /// Mesh-refinement capacity sweep with a zero/positive verdict
    Sweep,
    /// Run every catalog scenario and summarize the verdicts
    Catalog,
}

/// File half of the configuration; every key optional, unknown keys rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    domain: Option<[f64; 2]>,
    coeff: Option<String>,
    omega: Option<String>,
    target: Option<String>,
    levels: Option<Vec<usize>>,
    times: Option<Vec<f64>>,
    scenario: Option<String>,
    mass: Option<String>,
    initial: Option<String>,
    operator: Option<String>,
    out: Option<String>,
    format: Option<String>,
    tol_capacity: Option<f64>,
    tol_pos: Option<f64>,
}

/// Fully resolved run configuration (flags > file > defaults).
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub domain: (f64, f64),
    pub family: CoeffFamily,
    pub omega: Omega,
    /// None means "the boundary of omega".
    pub target: Option<TargetSet>,
    pub levels: Vec<usize>,
    pub times: Vec<f64>,
    pub scenario: Option<String>,
    pub mass: MassKind,
    pub initial: String,
    pub operator: String,
    pub out: PathBuf,
    pub format: Format,
    pub tol_capacity: f64,
    pub tol_pos: f64,
}

fn cfg_err(msg: impl Into<String>) -> DclError {
    DclError::Config(msg.into())
}

pub fn parse_coeff(s: &str) -> Result<CoeffFamily> {
    let (kind, arg) = match s.split_once(':') {
        Some((k, a)) => (k.trim(), Some(a.trim())),
        None => (s.trim(), None),
    };
    match kind {
        "constant" | "const" => {
            let v = match arg {
                Some(a) => a.parse::<f64>().map_err(|_| cfg_err(format!("bad constant value: {a}")))?,
                None => 1.0,
            };
            Ok(CoeffFamily::Constant(v))
        }
        "power_law" => {
            let a = arg.ok_or_else(|| cfg_err("power_law needs an exponent, e.g. power_law:2"))?;
            let alpha = a.parse::<f64>().map_err(|_| cfg_err(format!("bad exponent: {a}")))?;
            Ok(CoeffFamily::PowerLaw { alpha })
        }
        "piecewise" => {
            let a = arg.ok_or_else(|| cfg_err("piecewise needs pieces, e.g. piecewise:0,1,1.0;1,2,0.5"))?;
            let mut pieces = Vec::new();
            for piece in a.split(';') {
                let parts: Vec<&str> = piece.split(',').map(str::trim).collect();
                if parts.len() != 3 {
                    return Err(cfg_err(format!("piecewise piece needs lo,hi,value: {piece}")));
                }
                let nums: Result<Vec<f64>> = parts
                    .iter()
                    .map(|p| p.parse::<f64>().map_err(|_| cfg_err(format!("bad number: {p}"))))
                    .collect();
                let nums = nums?;
                pieces.push((nums[0], nums[1], nums[2]));
            }
            Ok(CoeffFamily::Piecewise(pieces))
        }
        other => Err(cfg_err(format!("unknown coefficient family: {other}"))),
    }
}

/// Parse "full" or a union like "(-1,0)u(0,1)". Endpoints that coincide with
/// the domain edge are truncation cuts (the domain continues there), not
/// topological boundary.
pub fn parse_omega(s: &str, domain: (f64, f64)) -> Result<Omega> {
    let s = s.trim();
    if s == "full" {
        return Ok(Omega::Whole);
    }
    let edge = |x: f64| (x - domain.0).abs() < 1e-12 || (x - domain.1).abs() < 1e-12;
    let mut intervals = Vec::new();
    for part in s.split('u') {
        let part = part.trim();
        let inner = part
            .strip_prefix('(')
            .and_then(|p| p.strip_suffix(')'))
            .ok_or_else(|| cfg_err(format!("interval must look like (a,b): {part}")))?;
        let (a, b) = inner
            .split_once(',')
            .ok_or_else(|| cfg_err(format!("interval must look like (a,b): {part}")))?;
        let lo = a.trim().parse::<f64>().map_err(|_| cfg_err(format!("bad number: {a}")))?;
        let hi = b.trim().parse::<f64>().map_err(|_| cfg_err(format!("bad number: {b}")))?;
        if !(lo < hi) {
            return Err(cfg_err(format!("interval endpoints must increase: {part}")));
        }
        if lo < domain.0 - 1e-12 || hi > domain.1 + 1e-12 {
            return Err(cfg_err(format!("omega interval {part} lies outside the domain")));
        }
        let kind = |x: f64| if edge(x) { EndKind::Truncated } else { EndKind::Boundary };
        intervals.push(OmegaInterval {
            lo,
            hi,
            lo_kind: kind(lo),
            hi_kind: kind(hi),
        });
    }
    if intervals.is_empty() {
        return Err(cfg_err("omega must contain at least one interval"));
    }
    Ok(Omega::Intervals(intervals))
}

/// Parse "boundary", "empty", "{p1, p2, ...}" or "[a,b]".
pub fn parse_target(s: &str) -> Result<Option<TargetSet>> {
    let s = s.trim();
    match s {
        "boundary" => return Ok(None),
        "empty" => return Ok(Some(TargetSet::default())),
        _ => {}
    }
    if let Some(inner) = s.strip_prefix('{').and_then(|p| p.strip_suffix('}')) {
        let mut points = Vec::new();
        for p in inner.split(',') {
            let p = p.trim();
            if p.is_empty() {
                continue;
            }
            points.push(p.parse::<f64>().map_err(|_| cfg_err(format!("bad point: {p}")))?);
        }
        return Ok(Some(TargetSet::from_points(points)));
    }
    if let Some(inner) = s.strip_prefix('[').and_then(|p| p.strip_suffix(']')) {
        let (a, b) = inner
            .split_once(',')
            .ok_or_else(|| cfg_err(format!("interval target must look like [a,b]: {s}")))?;
        let lo = a.trim().parse::<f64>().map_err(|_| cfg_err(format!("bad number: {a}")))?;
        let hi = b.trim().parse::<f64>().map_err(|_| cfg_err(format!("bad number: {b}")))?;
        if hi < lo {
            return Err(cfg_err(format!("interval target endpoints must increase: {s}")));
        }
        return Ok(Some(TargetSet::interval(lo, hi)));
    }
    Err(cfg_err(format!(
        "target must be boundary, empty, {{points}} or [a,b]: {s}"
    )))
}

fn parse_mass(s: &str) -> Result<MassKind> {
    match s {
        "lumped" => Ok(MassKind::Lumped),
        "consistent" => Ok(MassKind::Consistent),
        other => Err(cfg_err(format!("mass must be lumped or consistent: {other}"))),
    }
}

fn parse_format(s: &str) -> Result<Format> {
    match s {
        "csv" => Ok(Format::Csv),
        "json" => Ok(Format::Json),
        "both" => Ok(Format::Both),
        other => Err(cfg_err(format!("format must be csv, json or both: {other}"))),
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig> {
    let file: FileConfig = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            toml::from_str(&text).map_err(|e| cfg_err(format!("{}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };

    let domain = match file.domain {
        Some([a, b]) => (a, b),
        None => (-1.0, 1.0),
    };
    if !(domain.0 < domain.1) {
        return Err(cfg_err("domain endpoints must increase"));
    }
    let family = match &file.coeff {
        Some(s) => parse_coeff(s)?,
        None => CoeffFamily::Constant(1.0),
    };
    let omega = match &file.omega {
        Some(s) => parse_omega(s, domain)?,
        None => Omega::Whole,
    };
    let target = match &file.target {
        Some(s) => parse_target(s)?,
        None => None,
    };
    let levels = cli
        .levels
        .clone()
        .or(file.levels)
        .unwrap_or_else(|| vec![64, 128, 256]);
    if levels.is_empty() || levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(cfg_err("levels must be a nonempty strictly increasing list"));
    }
    let times = cli
        .times
        .clone()
        .or(file.times)
        .unwrap_or_else(|| scenario::DEFAULT_TIMES.to_vec());
    if times.iter().any(|&t| t <= 0.0) {
        return Err(cfg_err("times must be positive"));
    }
    let tol_capacity = cli.tol_capacity.or(file.tol_capacity).unwrap_or(1e-4);
    let tol_pos = cli.tol_pos.or(file.tol_pos).unwrap_or(1e-9);
    if tol_capacity <= 0.0 || tol_pos <= 0.0 {
        return Err(cfg_err("tolerances must be positive"));
    }
    let mass = match &file.mass {
        Some(s) => parse_mass(s)?,
        None => MassKind::Lumped,
    };
    let format = match (&cli.format, &file.format) {
        (Some(f), _) => *f,
        (None, Some(s)) => parse_format(s)?,
        (None, None) => Format::Both,
    };
    let out = cli
        .out
        .clone()
        .or(file.out.map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));

    Ok(RunConfig {
        domain,
        family,
        omega,
        target,
        levels,
        times,
        scenario: file.scenario,
        mass,
        initial: file.initial.unwrap_or_else(|| "one".into()),
        operator: file.operator.unwrap_or_else(|| "dirichlet".into()),
        out,
        format,
        tol_capacity,
        tol_pos,
    })
}

impl RunConfig {
    fn scenario_named(&self, id: &str) -> Scenario {
        let mut s = Scenario::new(
            id,
            self.domain,
            self.levels.clone(),
            self.family.clone(),
            self.omega.clone(),
        );
        s.times = self.times.clone();
        s.mass_kind = self.mass;
        s
    }

    fn region(&self, mesh: &crate::mesh::Mesh) -> Result<RegionSpec> {
        let target = match &self.target {
            Some(t) => t.clone(),
            None => TargetSet::from_points(self.omega.boundary_points()),
        };
        RegionSpec::with_default_schedule(self.omega.clone(), target, mesh)
    }
}

fn emit(cfg: &RunConfig, name: &str, csv: Option<String>, json: Option<String>) -> Result<()> {
    if let (true, Some(csv)) = (cfg.format.csv(), csv) {
        report::write_atomic(&cfg.out.join(format!("{name}.csv")), csv.as_bytes())?;
    }
    if let (true, Some(json)) = (cfg.format.json(), json) {
        report::write_atomic(&cfg.out.join(format!("{name}.json")), json.as_bytes())?;
    }
    Ok(())
}

fn sweep_for(cfg: &RunConfig) -> Result<crate::capacity::SweepResult> {
    refinement_sweep(&cfg.levels, |n| {
        let mesh = build_mesh(cfg.domain, n, Grading::Uniform)?;
        let c = CoefficientField::from_family(&mesh, cfg.family.clone())?;
        let form = assemble_elliptic(&mesh, &c, cfg.mass)?;
        let region = cfg.region(&mesh)?;
        Ok((form, region))
    })
}

fn run_capacity(cfg: &RunConfig) -> Result<i32> {
    let sweep = sweep_for(cfg)?;
    let plot: Vec<(f64, f64)> = sweep
        .levels
        .iter()
        .map(|l| (l.h, l.estimate.extrapolated))
        .collect();
    emit(
        cfg,
        "capacity",
        Some(report::capacity_table_csv(&sweep)),
        Some(report::to_json(&sweep)?),
    )?;
    if cfg.format.csv() {
        report::write_atomic(
            &cfg.out.join("capacity_plot.csv"),
            report::plot_csv("h", "capacity", &plot).as_bytes(),
        )?;
    }
    Ok(EXIT_OK)
}

fn run_sweep(cfg: &RunConfig) -> Result<i32> {
    let sweep = sweep_for(cfg)?;
    let values: Vec<(f64, f64)> = sweep
        .levels
        .iter()
        .map(|l| (l.n_elements as f64, l.estimate.extrapolated))
        .collect();
    emit(
        cfg,
        "sweep",
        Some(report::plot_csv("n_elements", "capacity", &values)),
        Some(report::to_json(&sweep)?),
    )?;
    println!(
        "sweep: extrapolated = {}, verdict = {:?}",
        report::fmt_g(sweep.extrapolated),
        sweep.verdict
    );
    Ok(match sweep.verdict {
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
        _ => EXIT_OK,
    })
}

fn run_evolve(cfg: &RunConfig) -> Result<i32> {
    let n = *cfg.levels.last().unwrap();
    let mesh = build_mesh(cfg.domain, n, Grading::Uniform)?;
    let c = CoefficientField::from_family(&mesh, cfg.family.clone())?;
    let free = assemble_elliptic(&mesh, &c, cfg.mass)?;
    let region = cfg.region(&mesh)?;
    let form = match cfg.operator.as_str() {
        "free" => free,
        "dirichlet" => free.restrict_dirichlet(&region)?,
        "neumann" => neumann_form(&free, &region)?.0,
        other => return Err(cfg_err(format!("operator must be free, dirichlet or neumann: {other}"))),
    };
    let sg = Semigroup::new(&form)?;
    let initial = battery(&form)
        .into_iter()
        .find(|(name, _)| *name == cfg.initial)
        .map(|(_, v)| v)
        .ok_or_else(|| cfg_err(format!("unknown initial profile: {}", cfg.initial)))?;

    let mut trace = Vec::new();
    let mut defects = Vec::new();
    let mut mass_plot = Vec::new();
    let one = form.interpolate(|_| 1.0);
    let m0 = form.mass().inner(&one, &initial);
    for &t in &cfg.times {
        let u = sg.apply(t, &initial);
        let mass = form.mass().inner(&one, &u);
        let negativity = -u.iter().cloned().fold(f64::INFINITY, f64::min).min(0.0);
        let overshoot = (u.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - 1.0).max(0.0);
        for (name, value) in [
            ("mass_loss", if m0.abs() > 0.0 { (m0 - mass) / m0 } else { 0.0 }),
            ("negativity", negativity),
            ("overshoot", overshoot),
        ] {
            defects.push(report::DefectRecord {
                scenario_id: "inline".into(),
                t,
                defect: name.into(),
                value,
            });
        }
        mass_plot.push((t, mass));
        trace.push((t, form.extend_by_zero(&u)));
    }
    emit(
        cfg,
        "evolution",
        Some(report::evolution_csv(&trace)),
        Some(report::to_json(&defects)?),
    )?;
    if cfg.format.csv() {
        report::write_atomic(
            &cfg.out.join("evolution_plot.csv"),
            report::plot_csv("t", "mass", &mass_plot).as_bytes(),
        )?;
    }
    Ok(EXIT_OK)
}

fn run_verify(cfg: &RunConfig, name: Option<&str>) -> Result<i32> {
    let name = name
        .map(str::to_owned)
        .or_else(|| cfg.scenario.clone())
        .unwrap_or_else(|| "inline".into());
    match name.as_str() {
        "halfline" => {
            let r = run_halfline_counterexample(&cfg.levels)?;
            emit(cfg, "verify_halfline", None, Some(report::to_json(&r)?))?;
            println!(
                "halfline: cap = {}, pass = {}",
                report::fmt_g(r.cap_extrapolated),
                r.pass
            );
            Ok(if r.pass { EXIT_OK } else { EXIT_VIOLATION })
        }
        "disjoint" => {
            let n = *cfg.levels.last().unwrap();
            let r = run_disjoint_interval(n, 0.05)?;
            emit(cfg, "verify_disjoint", None, Some(report::to_json(&r)?))?;
            let pass = r.cap_verdict == Verdict::Positive
                && r.linear_margin > 1e-3
                && r.sd_invariance_defect < 1e-8;
            println!(
                "disjoint: cap = {}, linear margin = {}, pass = {pass}",
                report::fmt_g(r.cap_extrapolated),
                report::fmt_g(r.linear_margin)
            );
            Ok(if pass { EXIT_OK } else { EXIT_VIOLATION })
        }
        other => {
            let scenario = match scenario::catalog().into_iter().find(|s| s.id == other) {
                Some(mut s) => {
                    if cli_overrode_levels(cfg) {
                        s.levels = cfg.levels.clone();
                    }
                    s
                }
                None if other == "inline" => cfg.scenario_named("inline"),
                None => {
                    return Err(cfg_err(format!(
                        "unknown scenario: {other} (expected halfline, disjoint, a catalog id, or an inline config)"
                    )))
                }
            };
            let r = evaluate(&scenario)?;
            emit(
                cfg,
                &format!("verify_{}", scenario.id),
                Some(report::catalog_summary_csv(std::slice::from_ref(&r))),
                Some(report::to_json(&r)?),
            )?;
            println!(
                "{}: consistent = {}, inconclusive = {}",
                r.scenario_id, r.consistent, r.inconclusive
            );
            Ok(if !r.consistent {
                EXIT_VIOLATION
            } else if r.inconclusive {
                EXIT_INCONCLUSIVE
            } else {
                EXIT_OK
            })
        }
    }
}

/// The catalog pins its own levels; only an explicit --levels flag or file
/// value that differs from the default should override them.
fn cli_overrode_levels(cfg: &RunConfig) -> bool {
    cfg.levels != vec![64, 128, 256]
}

fn run_catalog(cfg: &RunConfig) -> Result<i32> {
    let scenarios = scenario::catalog();
    let reports: Result<Vec<_>> = scenarios.par_iter().map(evaluate).collect();
    let reports = reports?;
    emit(
        cfg,
        "catalog",
        Some(report::catalog_summary_csv(&reports)),
        Some(report::to_json(&reports)?),
    )?;
    let violations = reports.iter().filter(|r| !r.consistent).count();
    let inconclusive = reports.iter().filter(|r| r.inconclusive).count();
    println!(
        "catalog: {} scenarios, {violations} violations, {inconclusive} inconclusive",
        reports.len()
    );
    if violations > 0 {
        Ok(EXIT_VIOLATION)
    } else if inconclusive == reports.len() {
        Ok(EXIT_INCONCLUSIVE)
    } else {
        Ok(EXIT_OK)
    }
}

fn dispatch(cli: &Cli) -> Result<i32> {
    let cfg = resolve(cli)?;
    match &cli.cmd {
        Cmd::Capacity => run_capacity(&cfg),
        Cmd::Evolve => run_evolve(&cfg),
        Cmd::Verify { scenario } => run_verify(&cfg, scenario.as_deref()),
        Cmd::Sweep => run_sweep(&cfg),
        Cmd::Catalog => run_catalog(&cfg),
    }
}

pub fn run_cli() -> i32 {
    let cli = Cli::parse();
    if let Ok(threads) = std::env::var("DCL_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
    }
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                DclError::Io(_) => EXIT_IO,
                DclError::Config(_)
                | DclError::InvalidMesh(_)
                | DclError::InvalidCoefficient(_)
                | DclError::InvalidRegion(_) => EXIT_CONFIG,
                _ => EXIT_VIOLATION,
            }
        }
    }
}
