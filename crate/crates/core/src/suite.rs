//! JSON-configured verification suites.
//!
//! A config lists runs; each run is executed in order and summarized in a
//! report whose bytes depend only on the config (timings and thread counts
//! go to a separate metadata record).

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::boundary::{self, ReillyForm, Sigma, SigmaPin};
use crate::bounds::{self, BoundOptions, BoundsError, CaseAnalysis, Theorem};
use crate::identities;
use crate::sampling;
use crate::spectral::{convergence_ratios, Discretization, EigenOptions, EigenResult};
use crate::zoo::{self, BoundaryCondition, CatalogEntry};

pub const SCHEMA_VERSION: u32 = 1;

/// Exit code when every run passes (skipped runs count as passing).
pub const EXIT_OK: i32 = 0;
/// Exit code when a run fails its tolerance or errors numerically.
pub const EXIT_FAILURE: i32 = 1;
/// Exit code for an invalid config: bad schema, unknown case, theorem or function.
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported schema_version {0} (expected {SCHEMA_VERSION})")]
    Schema(u32),
    #[error("run {index}: {message}")]
    Run { index: usize, message: String },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    /// Seed for runs that do not set their own.
    #[serde(default)]
    pub seed: u64,
    pub runs: Vec<RunSpec>,
}

fn default_points() -> usize {
    100
}
fn default_pairs() -> usize {
    1000
}
fn default_sigma() -> String {
    "auto".into()
}
fn default_refine() -> usize {
    4
}
fn default_k() -> usize {
    bounds::LAMBDA1_COUNT
}
fn default_bound_points() -> usize {
    200
}
fn default_bound_tolerance() -> f64 {
    bounds::DEFAULT_TOLERANCE
}
fn default_ratio_min() -> f64 {
    3.2
}
fn default_ratio_max() -> f64 {
    4.8
}
fn default_residual() -> f64 {
    bounds::MAX_RESIDUAL
}
fn default_sandwich() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case", deny_unknown_fields)]
pub enum RunSpec {
    Identities {
        case: String,
        #[serde(default = "default_points")]
        points: usize,
        seed: Option<u64>,
        tolerance: Option<f64>,
    },
    TraceInequality {
        #[serde(default = "default_pairs")]
        pairs: usize,
        seed: Option<u64>,
    },
    Reilly {
        case: String,
        function: String,
        quad: usize,
        #[serde(default = "default_sigma")]
        sigma: String,
        form: Option<String>,
        tolerance: f64,
    },
    Eigen {
        case: String,
        #[serde(default = "default_refine")]
        refine: usize,
        bc: Option<BoundaryCondition>,
        #[serde(default = "default_k")]
        k: usize,
        #[serde(default)]
        dense: bool,
        seed: Option<u64>,
        expect: Option<EigenExpect>,
    },
    Convergence {
        case: String,
        bc: Option<BoundaryCondition>,
        levels: Vec<usize>,
        #[serde(default = "default_ratio_min")]
        ratio_min: f64,
        #[serde(default = "default_ratio_max")]
        ratio_max: f64,
        seed: Option<u64>,
    },
    Bounds {
        case: String,
        theorem: String,
        #[serde(default = "default_refine")]
        refine: usize,
        #[serde(default = "default_bound_points")]
        points: usize,
        bc: Option<BoundaryCondition>,
        seed: Option<u64>,
        #[serde(default = "default_bound_tolerance")]
        tolerance: f64,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenExpect {
    /// Defaults to the catalog value.
    pub lambda1: Option<f64>,
    pub rel_tol: f64,
    pub multiplicity: Option<usize>,
    #[serde(default = "default_residual")]
    pub max_residual: f64,
    #[serde(default = "default_sandwich")]
    pub sandwich_tol: f64,
}

impl RunSpec {
    pub fn command(&self) -> &'static str {
        match self {
            RunSpec::Identities { .. } => "identities",
            RunSpec::TraceInequality { .. } => "trace_inequality",
            RunSpec::Reilly { .. } => "reilly",
            RunSpec::Eigen { .. } => "eigen",
            RunSpec::Convergence { .. } => "convergence",
            RunSpec::Bounds { .. } => "bounds",
        }
    }

    pub fn case(&self) -> Option<&str> {
        match self {
            RunSpec::TraceInequality { .. } => None,
            RunSpec::Identities { case, .. }
            | RunSpec::Reilly { case, .. }
            | RunSpec::Eigen { case, .. }
            | RunSpec::Convergence { case, .. }
            | RunSpec::Bounds { case, .. } => Some(case),
        }
    }
}

impl SuiteConfig {
    pub fn from_json(text: &str) -> Result<SuiteConfig, ConfigError> {
        let cfg: SuiteConfig = serde_json::from_str(text)?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::Schema(cfg.schema_version));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<SuiteConfig, ConfigError> {
        SuiteConfig::from_json(&std::fs::read_to_string(path)?)
    }

    /// Resolves every case, function, theorem and sign before anything runs.
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (index, run) in self.runs.iter().enumerate() {
            let err = |message: String| ConfigError::Run { index, message };
            let entry = match run.case() {
                Some(case) => Some(zoo::resolve_case(case).map_err(|e| err(e.to_string()))?.0),
                None => None,
            };
            match run {
                RunSpec::Reilly { function, sigma, form, .. } => {
                    let entry = entry.expect("reilly runs name a case");
                    entry.function(function).map_err(|e| err(e.to_string()))?;
                    if sigma != "auto" && Sigma::parse(sigma).is_none() {
                        return Err(err(format!("sigma must be auto, +1 or -1, got `{sigma}`")));
                    }
                    if let Some(f) = form {
                        parse_form(f).ok_or_else(|| err(format!("unknown form `{f}`")))?;
                    }
                }
                RunSpec::Bounds { theorem, points, .. } => {
                    Theorem::parse(theorem).map_err(|e| err(e.to_string()))?;
                    if *points < bounds::MIN_SAMPLES {
                        return Err(err(format!("points must be at least {}", bounds::MIN_SAMPLES)));
                    }
                }
                RunSpec::Convergence { levels, .. } if levels.len() < 2 => {
                    return Err(err("convergence needs at least two levels".into()));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

pub fn parse_form(s: &str) -> Option<ReillyForm> {
    match s {
        "parallel" => Some(ReillyForm::Parallel),
        "codazzi" => Some(ReillyForm::Codazzi),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub index: usize,
    pub command: &'static str,
    pub case: Option<String>,
    pub status: Status,
    pub detail: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub schema_version: u32,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
    pub runs: Vec<RunReport>,
}

impl SuiteReport {
    pub fn exit_code(&self) -> i32 {
        if self.failed == 0 {
            EXIT_OK
        } else {
            EXIT_FAILURE
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// One row per run: index, command, case, status, headline metric.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,command,case,status,metric,value\n");
        for r in &self.runs {
            let (metric, value) = headline(r);
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.index,
                r.command,
                csv_field(r.case.as_deref().unwrap_or("")),
                serde_json::to_value(r.status).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default(),
                metric,
                value.map(fmt_f64).unwrap_or_default()
            ));
        }
        out
    }
}

fn headline(r: &RunReport) -> (&'static str, Option<f64>) {
    let key = match r.command {
        "identities" => "max_relative_residual",
        "trace_inequality" => "worst_relative_slack",
        "reilly" => "defect",
        "eigen" | "convergence" => "lambda1",
        _ => "margin",
    };
    (key, r.detail.get(key).and_then(Value::as_f64))
}

/// Formats a number with 17 significant digits, locale independent.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

/// Quotes a CSV field when it contains a delimiter or quote.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Wall-clock and environment facts kept out of the report.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteMetadata {
    pub started_unix: u64,
    pub finished_unix: u64,
    pub threads: usize,
    pub version: &'static str,
    pub run_seconds: Vec<f64>,
}

/// Shared solves and analyses, keyed by everything that determines them.
type SpectrumKey = (String, BoundaryCondition, usize, usize, bool, u64);

#[derive(Default)]
struct Cache {
    spectra: HashMap<SpectrumKey, Arc<Spectrum>>,
    analyses: HashMap<(String, usize, u64), Arc<CaseAnalysis>>,
    sigma: HashMap<usize, SigmaPin>,
}

struct Spectrum {
    disc: Discretization,
    result: EigenResult,
}

type RunResult = Result<(Status, Value), String>;

impl Cache {
    #[allow(clippy::too_many_arguments)]
    fn spectrum(
        &mut self,
        case: &str,
        bc: BoundaryCondition,
        refine: usize,
        count: usize,
        dense: bool,
        seed: u64,
    ) -> Result<Arc<Spectrum>, BoundsError> {
        let key = (case.to_string(), bc, refine, count, dense, seed);
        if let Some(s) = self.spectra.get(&key) {
            return Ok(s.clone());
        }
        let (entry, idx) = zoo::resolve_case(case)?;
        let disc = Discretization::new(&entry.manifold, entry.topology, &entry.fields[idx].field, refine)?;
        let result = disc.eigen(bc, &EigenOptions { count, dense, seed })?;
        let s = Arc::new(Spectrum { disc, result });
        self.spectra.insert(key, s.clone());
        Ok(s)
    }

    fn analysis(&mut self, case: &str, points: usize, seed: u64) -> Result<Arc<CaseAnalysis>, String> {
        let key = (case.to_string(), points, seed);
        if let Some(a) = self.analyses.get(&key) {
            return Ok(a.clone());
        }
        let a = Arc::new(CaseAnalysis::new(case, points, seed).map_err(|e| e.to_string())?);
        self.analyses.insert(key, a.clone());
        Ok(a)
    }

    fn sigma(&mut self, q: usize) -> Result<SigmaPin, String> {
        if let Some(p) = self.sigma.get(&q) {
            return Ok(*p);
        }
        let p = boundary::pin_sigma(q).map_err(|e| e.to_string())?;
        self.sigma.insert(q, p);
        Ok(p)
    }
}

fn status(pass: bool) -> Status {
    if pass {
        Status::Pass
    } else {
        Status::Fail
    }
}

fn default_bc(entry: &CatalogEntry) -> BoundaryCondition {
    bounds::default_bc(entry)
}

fn run_identities(case: &str, points: usize, seed: u64, tolerance: Option<f64>) -> RunResult {
    let (entry, idx) = zoo::resolve_case(case).map_err(|e| e.to_string())?;
    let field = &entry.fields[idx].field;
    let records = identities::run_case(&entry, idx, points, seed, tolerance).map_err(|e| e.to_string())?;
    let samples = sampling::chart_points(entry.manifold.primary(), points.max(1), seed);
    let structure = identities::structure_check(&entry.manifold, field, &samples).map_err(|e| e.to_string())?;
    let contradicted = structure.contradicted(&field.declared);
    let mut per: Vec<(String, f64, f64, usize)> = Vec::new();
    for r in &records {
        let id = r.identity.id().to_string();
        match per.iter_mut().find(|p| p.0 == id) {
            Some(p) => {
                p.1 = p.1.max(r.relative_residual);
                p.3 += 1;
            }
            None => per.push((id, r.relative_residual, r.tolerance, 1)),
        }
    }
    let failures = records.iter().filter(|r| !r.pass()).count();
    let worst = records.iter().map(|r| r.relative_residual).fold(0.0, f64::max);
    let detail = json!({
        "points": points,
        "seed": seed,
        "evaluations": records.len(),
        "failures": failures,
        "max_relative_residual": worst,
        "identities": per.iter().map(|(id, w, t, n)| json!({
            "identity": id, "max_relative_residual": w, "tolerance": t, "evaluations": n
        })).collect::<Vec<_>>(),
        "structure": structure,
        "contradicted_flags": contradicted,
    });
    Ok((status(failures == 0 && contradicted.is_empty()), detail))
}


fn run_reilly(
    cache: &mut Cache,
    case: &str,
    function: &str,
    quad: usize,
    sigma: &str,
    form: Option<&str>,
    tolerance: f64,
) -> RunResult {
    let (entry, idx) = zoo::resolve_case(case).map_err(|e| e.to_string())?;
    let a = &entry.fields[idx].field;
    let u = entry.function(function).map_err(|e| e.to_string())?;
    let pin = if sigma == "auto" { Some(cache.sigma(quad)?) } else { None };
    let s = pin.map(|p| p.sigma).or_else(|| Sigma::parse(sigma)).ok_or("invalid sigma")?;
    let form = form.and_then(parse_form).unwrap_or(if a.declared.parallel {
        ReillyForm::Parallel
    } else {
        ReillyForm::Codazzi
    });
    let eval = match form {
        ReillyForm::Parallel => boundary::reilly_parallel(&entry.manifold, a, u, quad, s),
        ReillyForm::Codazzi => boundary::reilly_codazzi(&entry.manifold, a, u, quad, s),
    }
    .map_err(|e| e.to_string())?;
    let pass = eval.defect <= tolerance;
    let mut detail = serde_json::to_value(&eval).map_err(|e| e.to_string())?;
    detail["tolerance"] = json!(tolerance);
    detail["sigma_pin"] = serde_json::to_value(pin).map_err(|e| e.to_string())?;
    Ok((status(pass), detail))
}

#[allow(clippy::too_many_arguments)]
fn run_eigen(
    cache: &mut Cache,
    case: &str,
    refine: usize,
    bc: Option<BoundaryCondition>,
    k: usize,
    dense: bool,
    seed: u64,
    expect: Option<&EigenExpect>,
) -> RunResult {
    let (entry, idx) = zoo::resolve_case(case).map_err(|e| e.to_string())?;
    let bc = bc.unwrap_or_else(|| default_bc(&entry));
    let spec = cache.spectrum(case, bc, refine, k, dense, seed).map_err(|e| e.to_string())?;
    let res = &spec.result;
    let sandwich = spec.disc.sandwich(res).map_err(|e| e.to_string())?;
    let lambda1 = res.lambda1();
    let exact = expect
        .and_then(|e| e.lambda1)
        .or_else(|| zoo::analytic_lambda1(&entry, &entry.fields[idx].field.name, bc));
    let rel_error = match (lambda1, exact) {
        (Some(l), Some(x)) => Some((l - x).abs() / x),
        _ => None,
    };
    let multiplicity = res.cluster_multiplicity(bounds::CLUSTER_TOL);
    let mut pass = lambda1.is_some() && res.max_residual() <= bounds::MAX_RESIDUAL;
    let sandwich_tol = expect.map_or(default_sandwich(), |e| e.sandwich_tol);
    pass &= sandwich.iter().all(|s| s.holds(sandwich_tol));
    if let Some(e) = expect {
        pass &= res.max_residual() <= e.max_residual;
        pass &= rel_error.is_some_and(|r| r <= e.rel_tol);
        pass &= e.multiplicity.is_none_or(|m| m == multiplicity);
    }
    let detail = json!({
        "bc": bc,
        "refine": refine,
        "unknowns": res.unknowns,
        "solver": res.solver,
        "eigenvalues": res.eigenvalues,
        "residuals": res.residuals,
        "max_residual": res.max_residual(),
        "lambda1": lambda1,
        "multiplicity": multiplicity,
        "analytic_lambda1": exact,
        "relative_error": rel_error,
        "sandwich": sandwich,
        "sandwich_tolerance": sandwich_tol,
        "expect": expect.map(|e| json!({"rel_tol": e.rel_tol, "multiplicity": e.multiplicity, "max_residual": e.max_residual})),
    });
    Ok((status(pass), detail))
}

fn run_convergence(
    cache: &mut Cache,
    case: &str,
    bc: Option<BoundaryCondition>,
    levels: &[usize],
    range: (f64, f64),
    seed: u64,
) -> RunResult {
    let (entry, idx) = zoo::resolve_case(case).map_err(|e| e.to_string())?;
    let bc = bc.unwrap_or_else(|| default_bc(&entry));
    let exact = zoo::analytic_lambda1(&entry, &entry.fields[idx].field.name, bc)
        .ok_or_else(|| format!("no analytic eigenvalue for {case} ({bc})"))?;
    let mut values = Vec::new();
    for &l in levels {
        let s = cache.spectrum(case, bc, l, bounds::LAMBDA1_COUNT, false, seed).map_err(|e| e.to_string())?;
        values.push(s.result.lambda1().ok_or("no positive eigenvalue")?);
    }
    let ratios = convergence_ratios(&values, exact);
    let pass = ratios.iter().all(|r| (range.0..=range.1).contains(r));
    let detail = json!({
        "bc": bc,
        "levels": levels,
        "lambda1_per_level": values,
        "lambda1": values.last(),
        "analytic_lambda1": exact,
        "ratios": ratios,
        "ratio_range": [range.0, range.1],
    });
    Ok((status(pass), detail))
}

fn run_bounds(cache: &mut Cache, case: &str, theorem: &str, opts: &BoundOptions) -> RunResult {
    let theorem = Theorem::parse(theorem).map_err(|e| e.to_string())?;
    let analysis = cache.analysis(case, opts.points, opts.seed)?;
    let report = analysis
        .report(theorem, opts, |bc| {
            let s = cache.spectrum(case, bc, opts.refine, bounds::LAMBDA1_COUNT, false, opts.seed)?;
            bounds::lambda1_from(&s.disc, &s.result, opts.refine)
        })
        .map_err(|e| e.to_string())?;
    let st = if report.skipped() { Status::Skipped } else { status(report.passed()) };
    let mut detail = serde_json::to_value(&report).map_err(|e| e.to_string())?;
    // the case is already a top-level field of the run
    if let Value::Object(m) = &mut detail {
        m.remove("case");
    }
    Ok((st, detail))
}

/// Executes every run in order. The returned report depends only on `config`.
pub fn execute(config: &SuiteConfig) -> (SuiteReport, Vec<f64>) {
    let mut cache = Cache::default();
    let mut runs = Vec::with_capacity(config.runs.len());
    let mut seconds = Vec::with_capacity(config.runs.len());
    for (index, spec) in config.runs.iter().enumerate() {
        let start = Instant::now();
        let seed_or = |s: &Option<u64>| s.unwrap_or(config.seed);
        let result = match spec {
            RunSpec::Identities { case, points, seed, tolerance } => {
                run_identities(case, *points, seed_or(seed), *tolerance)
            }
            RunSpec::TraceInequality { pairs, seed } => {
                let sweep = identities::trace_inequality_sweep(*pairs, seed_or(seed));
                let pass = sweep.violations == 0 && sweep.scalar_max_relative <= identities::TRACE_SLACK_TOL;
                serde_json::to_value(sweep).map(|v| (status(pass), v)).map_err(|e| e.to_string())
            }
            RunSpec::Reilly { case, function, quad, sigma, form, tolerance } => {
                run_reilly(&mut cache, case, function, *quad, sigma, form.as_deref(), *tolerance)
            }
            RunSpec::Eigen { case, refine, bc, k, dense, seed, expect } => {
                run_eigen(&mut cache, case, *refine, *bc, *k, *dense, seed_or(seed), expect.as_ref())
            }
            RunSpec::Convergence { case, bc, levels, ratio_min, ratio_max, seed } => {
                run_convergence(&mut cache, case, *bc, levels, (*ratio_min, *ratio_max), seed_or(seed))
            }
            RunSpec::Bounds { case, theorem, refine, points, bc, seed, tolerance } => {
                let opts =
                    BoundOptions { refine: *refine, points: *points, seed: seed_or(seed), tolerance: *tolerance, bc: *bc };
                run_bounds(&mut cache, case, theorem, &opts)
            }
        };
        let (status, detail) = result.unwrap_or_else(|e| (Status::Error, json!({ "error": e })));
        runs.push(RunReport { index, command: spec.command(), case: spec.case().map(str::to_string), status, detail });
        seconds.push(start.elapsed().as_secs_f64());
    }
    let count = |s: Status| runs.iter().filter(|r| r.status == s).count();
    let report = SuiteReport {
        schema_version: SCHEMA_VERSION,
        passed: count(Status::Pass),
        failed: count(Status::Fail) + count(Status::Error),
        skipped: count(Status::Skipped),
        runs,
    };
    (report, seconds)
}

/// Runs the suite and wraps the timings into metadata.
pub fn run_suite(config: &SuiteConfig) -> (SuiteReport, SuiteMetadata) {
    let unix = || SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let started_unix = unix();
    let (report, run_seconds) = execute(config);
    let metadata = SuiteMetadata {
        started_unix,
        finished_unix: unix(),
        threads: rayon::current_num_threads(),
        version: env!("CARGO_PKG_VERSION"),
        run_seconds,
    };
    (report, metadata)
}
