//! Declarative experiments: a JSON config names a problem generator, a
//! method, solver settings and error schedules; [`run`] writes traces and
//! reports into an output directory and [`sweep`] runs a small grid of them.
//!
//! Output files (all byte-reproducible for fixed seeds):
//!
//! - `trace.csv`: `k,objective,gap_vs_pstar,grad_error_norm,prox_gap,primal_residual,dual_residual`
//! - `trace_long.csv`: `k,metric,value`
//! - `summary.json`, `rate_report.json`, `problem.json`
//! - `A.csv`, `b.csv` when `dump_matrices` is set
//!
//! With `repetitions > 1` the traces are `trace_rep{i}.csv` instead, one per seed.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{error_regime_report, Convexity, RateModel, RegimeReport};
use crate::error::{Error, Result};
use crate::linalg::{fmt_f64, DenseMatrix};
use crate::oracles::{Decay, ErrorSchedule};
use crate::problems::{
    closed_form_reference, gaussian_matrix, make_lasso, make_quadratic, planted_gaussian_quadratic, planted_lasso,
    planted_lasso_on, planted_quadratic, random_svm, ProblemSummary, Reference, SmoothPart,
};
use crate::solvers::{self, Method, SolverConfig, StepRule};
use crate::{Problem, Schedule, Trace};

pub const SCHEMA_VERSION: u32 = 1;
/// Output root used when a config has no `output_dir`.
pub const OUTPUT_ENV: &str = "PROXLAB_OUT";
pub const DEFAULT_OUTPUT_ROOT: &str = "proxlab-out";
pub const MAX_SWEEP_AXES: usize = 2;

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

/// Design matrix `A` (or feature matrix) of a generated problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Design {
    Identity { n: usize },
    Diag { values: Vec<f64> },
    /// `diag(lo, …, hi)` with evenly spaced entries.
    Linspace { n: usize, lo: f64, hi: f64 },
    /// `diag((i/n)^power)` for `i = 1..=n`; singular values accumulate at 0.
    Graded {
        n: usize,
        #[serde(default = "one")]
        power: f64,
    },
    Dense { rows: Vec<Vec<f64>> },
    /// `N(0, 1/rows)` entries drawn from the problem seed.
    Gaussian { rows: usize, cols: usize },
}

impl Design {
    fn matrix(&self) -> Result<Option<DenseMatrix<f64>>> {
        Ok(Some(match self {
            Design::Identity { n } => DenseMatrix::identity(*n),
            Design::Diag { values } => DenseMatrix::diag(values)?,
            Design::Linspace { n, lo, hi } => {
                if *n < 2 {
                    return Err(config("linspace design needs n >= 2"));
                }
                let step = (hi - lo) / (*n - 1) as f64;
                let values: Vec<f64> = (0..*n).map(|i| lo + step * i as f64).collect();
                DenseMatrix::diag(&values)?
            }
            Design::Graded { n, power } => {
                let values: Vec<f64> = (1..=*n)
                    .map(|i| (i as f64 / *n as f64).powf(*power))
                    .collect();
                DenseMatrix::diag(&values)?
            }
            Design::Dense { rows } => DenseMatrix::from_rows(rows)?,
            Design::Gaussian { .. } => return Ok(None),
        }))
    }
}

/// Planted solution of a generated quadratic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truth {
    /// Standard normal entries drawn from the problem seed.
    #[default]
    Gaussian,
    /// All ones; with zero noise this is an exact minimizer with `p* = 0`.
    Ones,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    /// `½‖Ax − b‖²`. Without an explicit `b`, `b = A x_true + noise`.
    Quadratic {
        design: Design,
        #[serde(default)]
        b: Option<Vec<f64>>,
        #[serde(default)]
        truth: Truth,
        #[serde(default)]
        noise: f64,
        #[serde(default)]
        seed: u64,
    },
    /// `½‖Ax − b‖² + λ‖x‖₁`. Without an explicit `b`, the first `sparsity`
    /// coefficients of `x_true` are planted (default: all of them).
    Lasso {
        design: Design,
        lambda: f64,
        #[serde(default)]
        b: Option<Vec<f64>>,
        #[serde(default)]
        sparsity: Option<usize>,
        #[serde(default)]
        noise: f64,
        #[serde(default)]
        seed: u64,
    },
    Svm {
        samples: usize,
        features: usize,
        #[serde(rename = "C")]
        c: f64,
        #[serde(default)]
        seed: u64,
    },
}

impl ProblemSpec {
    pub fn seed(&self) -> u64 {
        match self {
            ProblemSpec::Quadratic { seed, .. }
            | ProblemSpec::Lasso { seed, .. }
            | ProblemSpec::Svm { seed, .. } => *seed,
        }
    }

    /// An optimum known by construction.
    fn known_optimum(&self, p: &Problem) -> Option<Reference<f64>> {
        match self {
            ProblemSpec::Quadratic { b: None, truth: Truth::Ones, noise, .. } if *noise == 0.0 => {
                let x_star = vec![1.0; p.dimension()];
                // ½‖Ax − b‖² ≥ 0, so a zero residual is optimal
                let p_star = p.objective(&x_star);
                (p_star == 0.0).then_some(Reference { p_star, x_star, budget: 0 })
            }
            _ => None,
        }
    }

    /// Builds the problem without a reference optimum.
    pub fn build(&self) -> Result<Problem> {
        match self {
            ProblemSpec::Quadratic { design, b: None, truth: Truth::Ones, noise, seed } => {
                let a = match design.matrix()? {
                    Some(a) => a,
                    None => {
                        let Design::Gaussian { rows, cols } = design else { unreachable!() };
                        let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                        gaussian_matrix(*rows, *cols, &mut rng)?
                    }
                };
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let b = a
                    .matvec(&vec![1.0; a.cols()])
                    .into_iter()
                    .map(|v| if *noise > 0.0 { v + noise * rng.sample::<f64, _>(StandardNormal) } else { v })
                    .collect();
                make_quadratic(a, b)
            }
            ProblemSpec::Quadratic { design, b, noise, seed, .. } => match (design.matrix()?, b) {
                (Some(a), Some(b)) => make_quadratic(a, b.clone()),
                (Some(a), None) => planted_quadratic(a, *noise, *seed),
                (None, b) => {
                    let Design::Gaussian { rows, cols } = design else { unreachable!() };
                    let p = planted_gaussian_quadratic(*rows, *cols, *noise, *seed)?;
                    match b {
                        None => Ok(p),
                        Some(b) => make_quadratic(design_of(&p), b.clone()),
                    }
                }
            },
            ProblemSpec::Lasso { design, lambda, b, sparsity, noise, seed } => {
                let a = match design.matrix()? {
                    Some(a) => a,
                    None => {
                        let Design::Gaussian { rows, cols } = design else { unreachable!() };
                        let k = sparsity.unwrap_or(*cols);
                        let p = planted_lasso(*rows, *cols, k, *noise, *lambda, *seed)?;
                        return match b {
                            None => Ok(p),
                            Some(b) => make_lasso(design_of(&p), b.clone(), *lambda),
                        };
                    }
                };
                match b {
                    Some(b) => make_lasso(a, b.clone(), *lambda),
                    None => {
                        let k = sparsity.unwrap_or(a.cols());
                        planted_lasso_on(a, k, *noise, *lambda, *seed)
                    }
                }
            }
            ProblemSpec::Svm { samples, features, c, seed } => random_svm(*samples, *features, *c, *seed),
        }
    }
}

fn design_of(p: &Problem) -> DenseMatrix<f64> {
    match p.smooth() {
        SmoothPart::LeastSquares { a, .. } => a.clone(),
        SmoothPart::SquaredHinge { features, .. } => features.clone(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub max_iters: usize,
    #[serde(default)]
    pub step: StepRule<f64>,
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    /// Oracle seed; repetition `i` uses `seed + i`.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub strongly_convex: bool,
    #[serde(default)]
    pub restart: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedules {
    #[serde(default)]
    pub grad: Schedule,
    #[serde(default)]
    pub prox: Schedule,
}

/// One swept parameter and its values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "param", content = "values", rename_all = "snake_case")]
pub enum Axis {
    Method(Vec<Method>),
    /// `δ` of every polynomial schedule.
    Delta(Vec<f64>),
    /// `σ` of every constant-noise schedule.
    Sigma(Vec<f64>),
    /// `ρ` of every geometric schedule.
    GeometricRho(Vec<f64>),
    AdmmRho(Vec<f64>),
    Lambda(Vec<f64>),
    Seed(Vec<u64>),
    ProblemSeed(Vec<u64>),
    MaxIters(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum AxisValue {
    Method(Method),
    Real(f64),
    Count(u64),
}

impl std::fmt::Display for AxisValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AxisValue::Method(m) => write!(f, "{m}"),
            AxisValue::Real(v) => write!(f, "{v}"),
            AxisValue::Count(v) => write!(f, "{v}"),
        }
    }
}

impl Axis {
    pub fn name(&self) -> &'static str {
        match self {
            Axis::Method(_) => "method",
            Axis::Delta(_) => "delta",
            Axis::Sigma(_) => "sigma",
            Axis::GeometricRho(_) => "geometric_rho",
            Axis::AdmmRho(_) => "admm_rho",
            Axis::Lambda(_) => "lambda",
            Axis::Seed(_) => "seed",
            Axis::ProblemSeed(_) => "problem_seed",
            Axis::MaxIters(_) => "max_iters",
        }
    }

    pub fn values(&self) -> Vec<AxisValue> {
        match self {
            Axis::Method(v) => v.iter().map(|m| AxisValue::Method(*m)).collect(),
            Axis::Delta(v)
            | Axis::Sigma(v)
            | Axis::GeometricRho(v)
            | Axis::AdmmRho(v)
            | Axis::Lambda(v) => v.iter().map(|x| AxisValue::Real(*x)).collect(),
            Axis::Seed(v) | Axis::ProblemSeed(v) => v.iter().map(|x| AxisValue::Count(*x)).collect(),
            Axis::MaxIters(v) => v.iter().map(|x| AxisValue::Count(*x as u64)).collect(),
        }
    }

    fn apply(&self, cfg: &mut ExperimentConfig, value: &AxisValue) -> Result<()> {
        let real = |v: &AxisValue| match v {
            AxisValue::Real(x) => *x,
            _ => unreachable!("axis values come from the same axis"),
        };
        let count = |v: &AxisValue| match v {
            AxisValue::Count(x) => *x,
            _ => unreachable!("axis values come from the same axis"),
        };
        match self {
            Axis::Method(_) => {
                if let AxisValue::Method(m) = value {
                    cfg.method = *m;
                }
            }
            Axis::Delta(_) => {
                let d = real(value);
                retune(cfg, "delta", |s| match s.decay {
                    Decay::Polynomial { c, base, .. } => {
                        Some(ErrorSchedule::polynomial(c, d, base).map(|n| n.with_mode(s.mode)))
                    }
                    _ => None,
                })?
            }
            Axis::Sigma(_) => {
                let sigma = real(value);
                retune(cfg, "sigma", |s| match s.decay {
                    Decay::ConstantNoise { .. } => {
                        Some(ErrorSchedule::constant_noise(sigma).map(|n| n.with_mode(s.mode)))
                    }
                    _ => None,
                })?
            }
            Axis::GeometricRho(_) => {
                let rho = real(value);
                retune(cfg, "geometric_rho", |s| match s.decay {
                    Decay::Geometric { c, .. } => {
                        Some(ErrorSchedule::geometric(c, rho).map(|n| n.with_mode(s.mode)))
                    }
                    _ => None,
                })?
            }
            Axis::AdmmRho(_) => cfg.rho = real(value),
            Axis::Lambda(_) => match &mut cfg.problem {
                ProblemSpec::Lasso { lambda, .. } => *lambda = real(value),
                _ => return Err(config("lambda sweep needs a lasso problem")),
            },
            Axis::Seed(_) => cfg.solver.seed = count(value),
            Axis::ProblemSeed(_) => match &mut cfg.problem {
                ProblemSpec::Quadratic { seed, .. }
                | ProblemSpec::Lasso { seed, .. }
                | ProblemSpec::Svm { seed, .. } => *seed = count(value),
            },
            Axis::MaxIters(_) => cfg.solver.max_iters = count(value) as usize,
        }
        Ok(())
    }
}

/// Replaces every schedule `f` recognizes; an axis no schedule responds to is an error.
fn retune<F>(cfg: &mut ExperimentConfig, axis: &str, f: F) -> Result<()>
where
    F: Fn(&Schedule) -> Option<Result<Schedule>>,
{
    let mut touched = false;
    for s in [&mut cfg.schedules.grad, &mut cfg.schedules.prox] {
        if let Some(next) = f(s) {
            *s = next?;
            touched = true;
        }
    }
    if !touched {
        return Err(config(format!("sweep axis '{axis}' matches no configured schedule")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axes: Vec<Axis>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub problem: ProblemSpec,
    pub method: Method,
    pub solver: SolverSpec,
    #[serde(default)]
    pub schedules: Schedules,
    /// ADMM penalty.
    #[serde(default = "one")]
    pub rho: f64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "one_usize")]
    pub repetitions: usize,
    /// Iterations of the reference run; defaults to ten times `max_iters`.
    #[serde(default)]
    pub reference_budget: Option<usize>,
    #[serde(default)]
    pub dump_matrices: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    /// Parses and validates; JSON errors carry `path:line:column`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => config(format!("{}:{msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| {
            config(format!("{}:{}: {}", e.line(), e.column(), strip_position(&e)))
        })?;
        cfg.check().map_err(|(key, msg)| {
            let (line, column) = locate_key(text, key);
            config(format!("{line}:{column}: {msg}"))
        })?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.check().map_err(|(_, msg)| config(msg))
    }

    /// Semantic checks; the key names the offending field for line anchoring.
    fn check(&self) -> std::result::Result<(), (&'static str, String)> {
        let fail = |key: &'static str, msg: String| Err((key, msg));
        if self.schema != SCHEMA_VERSION {
            return fail(
                "schema",
                format!("unsupported schema {} (expected {SCHEMA_VERSION})", self.schema),
            );
        }
        if self.repetitions == 0 {
            return fail("repetitions", "repetitions must be at least 1".into());
        }
        if self.solver.max_iters == 0 {
            return fail("max_iters", "solver.max_iters must be at least 1".into());
        }
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return fail("rho", "rho must be positive".into());
        }
        if self.reference_budget == Some(0) {
            return fail("reference_budget", "reference_budget must be at least 1".into());
        }
        if self.solver.strongly_convex && self.method == Method::Admm {
            return fail("strongly_convex", "ADMM has no strongly convex mode".into());
        }
        if let Some(sweep) = &self.sweep {
            if sweep.axes.is_empty() {
                return fail("axes", "sweep needs at least one axis".into());
            }
            if sweep.axes.len() > MAX_SWEEP_AXES {
                return fail(
                    "axes",
                    format!(
                        "sweep has {} axes; at most {MAX_SWEEP_AXES} are allowed",
                        sweep.axes.len()
                    ),
                );
            }
            for axis in &sweep.axes {
                if axis.values().is_empty() {
                    return fail("values", format!("sweep axis '{}' has no values", axis.name()));
                }
            }
            let mut names: Vec<_> = sweep.axes.iter().map(Axis::name).collect();
            names.dedup();
            if names.len() != sweep.axes.len() {
                return fail("axes", "sweep axes must be distinct".into());
            }
        }
        Ok(())
    }

    pub fn reference_budget(&self) -> usize {
        self.reference_budget.unwrap_or(10 * self.solver.max_iters)
    }

    pub fn solver_config(&self, repetition: usize) -> SolverConfig<f64> {
        let mut cfg = SolverConfig::new(self.solver.max_iters)
            .with_step(self.solver.step)
            .with_schedules(self.schedules.grad, self.schedules.prox)
            .with_seed(self.solver.seed.wrapping_add(repetition as u64))
            .strongly_convex(self.solver.strongly_convex);
        cfg.x0.clone_from(&self.solver.x0);
        cfg.restart = self.solver.restart;
        cfg
    }

    /// Output directory: `output_dir`, else `$PROXLAB_OUT/<name>`, else `proxlab-out/<name>`.
    pub fn resolve_output_dir(&self, fallback_name: &str) -> PathBuf {
        if let Some(dir) = &self.output_dir {
            return dir.clone();
        }
        let root = std::env::var_os(OUTPUT_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT));
        root.join(self.name.as_deref().unwrap_or(fallback_name))
    }

    fn convexity(&self, problem: &Problem) -> Convexity {
        if self.solver.strongly_convex {
            Convexity::StronglyConvex {
                mu_over_l: problem.strong_convexity() / problem.lipschitz(),
            }
        } else {
            Convexity::Convex
        }
    }
}

/// 1-based position of the first `"key"` in `text`, or `1:1`.
fn locate_key(text: &str, key: &str) -> (usize, usize) {
    let needle = format!("\"{key}\"");
    let Some(offset) = text.find(&needle) else {
        return (1, 1);
    };
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = offset - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

/// serde_json appends " at line L column C"; the position is reported up front instead.
fn strip_position(e: &serde_json::Error) -> String {
    let full = e.to_string();
    match full.rfind(" at line ") {
        Some(i) => full[..i].to_string(),
        None => full,
    }
}

/// Builds the problem and attaches its reference optimum.
pub fn prepare_problem(cfg: &ExperimentConfig) -> Result<Problem> {
    let p = cfg.problem.build()?;
    if let Some(r) = cfg.problem.known_optimum(&p) {
        return p.with_reference(r);
    }
    match closed_form_reference(&p) {
        Some(r) => p.with_reference(r),
        None => {
            let mut p = p;
            p.attach_reference(cfg.reference_budget())?;
            Ok(p)
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RepetitionStats {
    pub final_gaps: Vec<f64>,
    pub mean_final_gap: f64,
    /// Sample standard deviation (0 for a single repetition).
    pub std_final_gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub schema: u32,
    pub config: ExperimentConfig,
    pub problem: ProblemSummary,
    pub method: Method,
    pub iterations: usize,
    pub final_objective: Option<f64>,
    pub final_gap: Option<f64>,
    pub best_gap: Option<f64>,
    pub diverged: bool,
    pub degraded_prox_steps: usize,
    pub ridge_regularized: bool,
    pub repetitions: RepetitionStats,
}

/// Result of [`run`], also the row source for sweeps.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub output_dir: PathBuf,
    pub summary: Summary,
    pub rate_report: RegimeReport,
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::write(dir.join(name), contents).map_err(|e| config(format!("{}: {e}", dir.join(name).display())))
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Runs one experiment into `dir`.
pub fn run_in(cfg: &ExperimentConfig, dir: &Path) -> Result<RunReport> {
    cfg.validate()?;
    fs::create_dir_all(dir).map_err(|e| config(format!("output directory {}: {e}", dir.display())))?;
    let problem = prepare_problem(cfg)?;
    run_on(cfg, &problem, dir)
}

/// Like [`run_in`] for a problem that is already built and referenced.
pub fn run_on(cfg: &ExperimentConfig, problem: &Problem, dir: &Path) -> Result<RunReport> {
    let mut traces = Vec::with_capacity(cfg.repetitions);
    for rep in 0..cfg.repetitions {
        traces.push(solvers::solve(cfg.method, problem, &cfg.solver_config(rep), cfg.rho)?);
    }
    if cfg.repetitions == 1 {
        write(dir, "trace.csv", &traces[0].to_csv())?;
    } else {
        for (i, t) in traces.iter().enumerate() {
            write(dir, &format!("trace_rep{i}.csv"), &t.to_csv())?;
        }
    }
    let first = &traces[0];
    write(dir, "trace_long.csv", &first.to_long_csv())?;

    let noisy = [cfg.schedules.grad, cfg.schedules.prox]
        .iter()
        .any(|s| matches!(s.decay, Decay::ConstantNoise { sigma } if sigma > 0.0));
    let exact = if noisy {
        let exact_cfg = cfg.solver_config(0).with_schedules(Schedule::zero(), Schedule::zero());
        Some(solvers::solve(cfg.method, problem, &exact_cfg, cfg.rho)?)
    } else {
        None
    };
    let rate_report = error_regime_report(
        first,
        exact.as_ref(),
        &cfg.schedules.grad,
        &cfg.schedules.prox,
        cfg.method,
        cfg.convexity(problem),
    );
    write(dir, "rate_report.json", &json(&rate_report)?)?;

    let problem_summary = problem.summary(Some(cfg.problem.seed()));
    write(dir, "problem.json", &json(&problem_summary)?)?;
    if cfg.dump_matrices {
        let (a, b) = match problem.smooth() {
            SmoothPart::LeastSquares { a, b } => (a, b),
            SmoothPart::SquaredHinge { features, labels, .. } => (features, labels),
        };
        write(dir, "A.csv", &a.to_csv())?;
        let mut col = String::new();
        for v in b {
            let _ = writeln!(col, "{}", fmt_f64(*v));
        }
        write(dir, "b.csv", &col)?;
    }

    let finals: Vec<f64> = traces.iter().filter_map(Trace::final_gap).collect();
    let mut resolved = cfg.clone();
    resolved.output_dir = Some(dir.to_path_buf());
    resolved.reference_budget = Some(cfg.reference_budget());
    let summary = Summary {
        schema: SCHEMA_VERSION,
        config: resolved,
        problem: problem_summary,
        method: cfg.method,
        iterations: first.len().saturating_sub(1),
        final_objective: first.final_objective(),
        final_gap: first.final_gap(),
        best_gap: first.best_gaps().and_then(|g| g.last().copied()),
        diverged: traces.iter().any(|t| t.meta.diverged),
        degraded_prox_steps: first.meta.degraded_prox_steps,
        ridge_regularized: first.meta.ridge_regularized,
        repetitions: repetition_stats(finals),
    };
    write(dir, "summary.json", &json(&summary)?)?;
    Ok(RunReport {
        output_dir: dir.to_path_buf(),
        summary,
        rate_report,
    })
}

fn repetition_stats(final_gaps: Vec<f64>) -> RepetitionStats {
    let n = final_gaps.len();
    let mean = if n == 0 { f64::NAN } else { final_gaps.iter().sum::<f64>() / n as f64 };
    let std = if n < 2 {
        0.0
    } else {
        (final_gaps.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    RepetitionStats {
        final_gaps,
        mean_final_gap: mean,
        std_final_gap: std,
    }
}

/// Loads `path` and runs it into its resolved output directory.
pub fn run(path: &Path) -> Result<RunReport> {
    let cfg = ExperimentConfig::load(path)?;
    let dir = cfg.resolve_output_dir(&stem(path));
    run_in(&cfg, &dir)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "experiment".into())
}

#[derive(Debug, Clone)]
pub struct SweepCell {
    pub index: usize,
    pub assignment: Vec<(&'static str, AxisValue)>,
    pub config: ExperimentConfig,
}

impl SweepCell {
    pub fn dir_name(&self) -> String {
        let mut name = format!("cell_{:03}", self.index);
        for (axis, value) in &self.assignment {
            let _ = write!(name, "_{axis}-{value}");
        }
        name
    }
}

/// Cross product of the sweep axes, first axis slowest.
pub fn sweep_cells(cfg: &ExperimentConfig) -> Result<Vec<SweepCell>> {
    cfg.validate()?;
    let axes = &cfg
        .sweep
        .as_ref()
        .ok_or_else(|| config("config has no sweep section"))?
        .axes;
    let mut assignments: Vec<Vec<(&'static str, AxisValue)>> = vec![Vec::new()];
    for axis in axes {
        assignments = assignments
            .into_iter()
            .flat_map(|prefix| {
                axis.values().into_iter().map(move |v| {
                    let mut next = prefix.clone();
                    next.push((axis.name(), v));
                    next
                })
            })
            .collect();
    }
    assignments
        .into_iter()
        .enumerate()
        .map(|(index, assignment)| {
            let mut cell = cfg.clone();
            cell.sweep = None;
            cell.output_dir = None;
            for (axis, (_, value)) in axes.iter().zip(&assignment) {
                axis.apply(&mut cell, value)?;
            }
            cell.validate()?;
            Ok(SweepCell {
                index,
                assignment,
                config: cell,
            })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub output_dir: PathBuf,
    pub cells: Vec<(SweepCell, RunReport)>,
}

pub const SWEEP_COLUMNS: [&str; 11] = [
    "cell",
    "method",
    "final_gap",
    "model",
    "exponent",
    "ratio",
    "r_squared",
    "classification",
    "condition",
    "rate_preserved",
    "diverged",
];

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let axis_names: Vec<&str> = self
            .cells
            .first()
            .map(|(c, _)| c.assignment.iter().map(|(n, _)| *n).collect())
            .unwrap_or_default();
        let mut out = String::new();
        // swept parameters get an `axis_` prefix so they never collide with fixed columns
        let mut header: Vec<String> = vec![SWEEP_COLUMNS[0].to_string()];
        header.extend(axis_names.iter().map(|n| format!("axis_{n}")));
        header.extend(SWEEP_COLUMNS[1..].iter().map(|c| c.to_string()));
        out.push_str(&header.join(","));
        out.push('\n');
        for (cell, report) in &self.cells {
            let est = report.rate_report.estimate;
            let (model, exponent, ratio) = match est.map(|e| e.model) {
                Some(RateModel::Power { exponent }) => ("power", fmt_f64(exponent), String::new()),
                Some(RateModel::Linear { ratio }) => ("linear", String::new(), fmt_f64(ratio)),
                None => ("", String::new(), String::new()),
            };
            let mut row = vec![cell.dir_name()];
            row.extend(cell.assignment.iter().map(|(_, v)| v.to_string()));
            row.extend([
                report.summary.method.to_string(),
                report.summary.final_gap.map(fmt_f64).unwrap_or_default(),
                model.to_string(),
                exponent,
                ratio,
                est.map(|e| fmt_f64(e.r_squared)).unwrap_or_default(),
                report
                    .rate_report
                    .classification
                    .map(|v| v.as_str().to_string())
                    .unwrap_or_default(),
                serde_json::to_value(report.rate_report.condition)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_string))
                    .unwrap_or_default(),
                report
                    .rate_report
                    .rate_preserved
                    .map(|b| b.to_string())
                    .unwrap_or_default(),
                report.summary.diverged.to_string(),
            ]);
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Runs every sweep cell (concurrently) under `dir`, then writes `sweep_summary.csv`.
pub fn sweep_in(cfg: &ExperimentConfig, dir: &Path) -> Result<SweepReport> {
    let cells = sweep_cells(cfg)?;
    fs::create_dir_all(dir).map_err(|e| config(format!("output directory {}: {e}", dir.display())))?;
    let reports: Vec<Result<RunReport>> = cells
        .par_iter()
        .map(|cell| run_in(&cell.config, &dir.join(cell.dir_name())))
        .collect();
    let mut done = Vec::with_capacity(cells.len());
    for (cell, report) in cells.into_iter().zip(reports) {
        done.push((cell, report?));
    }
    let report = SweepReport {
        output_dir: dir.to_path_buf(),
        cells: done,
    };
    write(dir, "sweep_summary.csv", &report.to_csv())?;
    Ok(report)
}

pub fn sweep(path: &Path) -> Result<SweepReport> {
    let cfg = ExperimentConfig::load(path)?;
    let dir = cfg.resolve_output_dir(&stem(path));
    sweep_in(&cfg, &dir)
}
