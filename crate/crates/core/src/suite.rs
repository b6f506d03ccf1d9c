//! The built-in acceptance matrix behind `proxlab verify`: fixed-seed
//! canonical problems, one cell per checked property, each cell a one-sided
//! threshold on a fitted rate or an exact invariant.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{
    classify_against_table, default_window, error_floor, fit_for_cell, fit_linear_rate,
    fit_power_rate, tail_mean_gap, Convexity, RateEstimate, Verdict, MIN_R_SQUARED,
};
use crate::linalg::{distance, norm, DenseMatrix};
use crate::oracles::{check_summability, SummabilityVerdict};
use crate::problems::{closed_form_reference, make_lasso, make_quadratic, planted_lasso, planted_quadratic, random_svm};
use crate::prox::{prox_exact, prox_objective, ProxQuery, Regularizer};
use crate::solvers::{solve, solve_with, ExactOracle, Method, StepRule};
use crate::{Config, Problem, Schedule, Trace};

pub const SUITE_SCHEMA: u32 = 1;

/// Iterations for the sublinear cells; the subgradient method gets five times more.
pub const CONVEX_ITERS: usize = 2000;
pub const SUBGRADIENT_ITERS: usize = 10_000;
pub const LINEAR_ITERS: usize = 300;
/// Ten times the longest run on the instance.
pub const LASSO_REFERENCE_BUDGET: usize = 10 * SUBGRADIENT_ITERS;

/// Seeded 50×100 sparse-recovery LASSO with its reference optimum.
pub fn canonical_lasso() -> Problem {
    let mut p = planted_lasso(50, 100, 10, 0.01, 0.1, 42).expect("valid generator arguments");
    p.attach_reference(LASSO_REFERENCE_BUDGET)
        .expect("canonical LASSO reference converges");
    p
}

/// `½‖Ax − b‖²` with `A = diag(1, …, 2)` in dimension 10, so `μ/L = 1/4`.
pub fn canonical_strongly_convex() -> Problem {
    let s: Vec<f64> = (0..10).map(|i| 1.0 + i as f64 / 9.0).collect();
    let p = planted_quadratic(DenseMatrix::diag(&s).expect("finite"), 0.0, 7).expect("valid");
    let r = closed_form_reference(&p).expect("full column rank");
    p.with_reference(r).expect("closed form matches objective")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuiteOptions {
    /// Multiplies the `1/L` step of the proximal-gradient methods; anything
    /// but 1 is a deliberate mutation.
    pub step_scale: f64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self { step_scale: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Pass,
    Violates,
    Inconclusive,
}

impl CellStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            CellStatus::Pass => "pass",
            CellStatus::Violates => "violates",
            CellStatus::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Cell {
    pub id: String,
    pub criterion: u8,
    pub description: String,
    pub method: Option<Method>,
    pub convexity: Option<Convexity>,
    pub metric: String,
    pub value: Option<f64>,
    /// e.g. `"<= -0.85"`.
    pub threshold: String,
    pub r_squared: Option<f64>,
    pub classification: Option<Verdict>,
    pub status: CellStatus,
    pub detail: String,
}

impl Cell {
    fn new(id: &str, criterion: u8, description: &str) -> Self {
        Self {
            id: id.into(),
            criterion,
            description: description.into(),
            method: None,
            convexity: None,
            metric: String::new(),
            value: None,
            threshold: String::new(),
            r_squared: None,
            classification: None,
            status: CellStatus::Inconclusive,
            detail: String::new(),
        }
    }

    fn check(mut self, metric: &str, value: f64, threshold: String, ok: bool) -> Self {
        self.metric = metric.into();
        self.value = Some(value);
        self.threshold = threshold;
        self.status = if ok { CellStatus::Pass } else { CellStatus::Violates };
        self
    }

    fn boolean(mut self, metric: &str, ok: bool, detail: String) -> Self {
        self.metric = metric.into();
        self.threshold = "holds".into();
        self.status = if ok { CellStatus::Pass } else { CellStatus::Violates };
        self.detail = detail;
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub schema: u32,
    pub options: SuiteOptions,
    pub cells: Vec<Cell>,
    pub passed: bool,
}

impl SuiteReport {
    pub fn failing(&self) -> impl Iterator<Item = &Cell> {
        self.cells.iter().filter(|c| c.status != CellStatus::Pass)
    }

    /// Fixed-width table, one row per cell.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<28} {:>2}  {:<14} {:>12}  {:<14} {:<13} status",
            "cell", "#", "metric", "value", "threshold", "table"
        );
        for c in &self.cells {
            let value = c.value.map(|v| format!("{v:.4e}")).unwrap_or_else(|| "-".into());
            let table = c.classification.map(|v| v.as_str()).unwrap_or("-");
            let _ = writeln!(
                out,
                "{:<28} {:>2}  {:<14} {:>12}  {:<14} {:<13} {}",
                c.id,
                c.criterion,
                c.metric,
                value,
                c.threshold,
                table,
                c.status.as_str().to_uppercase()
            );
        }
        let failing: Vec<&str> = self.failing().map(|c| c.id.as_str()).collect();
        if failing.is_empty() {
            let _ = writeln!(out, "{} cells, all pass", self.cells.len());
        } else {
            let _ = writeln!(out, "{} cells, failing: {}", self.cells.len(), failing.join(", "));
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
enum Bound {
    ExponentAtMost(f64),
    RatioAtMost(f64),
    RatioBelowOne,
}

struct Fixtures {
    lasso: Problem,
    quad: Problem,
    options: SuiteOptions,
}

impl Fixtures {
    fn strong(&self) -> Convexity {
        Convexity::StronglyConvex {
            mu_over_l: self.quad.strong_convexity() / self.quad.lipschitz(),
        }
    }

    fn config(&self, method: Method, problem: &Problem, iters: usize) -> Config {
        let cfg = Config::new(iters);
        if self.options.step_scale != 1.0 && matches!(method, Method::ProxGrad | Method::Accelerated) {
            cfg.with_step(StepRule::Custom {
                alpha0: self.options.step_scale / problem.lipschitz(),
            })
        } else {
            cfg
        }
    }
}

fn fit(trace: &Trace, method: Method, convexity: Convexity, linear: bool) -> Result<RateEstimate, String> {
    let gaps = trace.best_gaps().ok_or("no reference optimum")?;
    let w = default_window(&gaps).ok_or("gap at the numerical floor from the start")?;
    let est = if linear {
        fit_linear_rate(&gaps, w)
    } else {
        fit_for_cell(method, convexity, &gaps, w)
    };
    est.map_err(|e| e.to_string())
}

fn rate_cell(
    mut cell: Cell,
    trace: Trace,
    method: Method,
    convexity: Convexity,
    bound: Bound,
) -> Cell {
    cell.method = Some(method);
    cell.convexity = Some(convexity);
    let linear = !matches!(bound, Bound::ExponentAtMost(_));
    if trace.meta.diverged {
        cell.metric = if linear { "ratio" } else { "exponent" }.into();
        cell.status = CellStatus::Violates;
        cell.detail = "diverged".into();
        return cell;
    }
    let est = match fit(&trace, method, convexity, linear) {
        Ok(est) => est,
        Err(e) => {
            cell.metric = if linear { "ratio" } else { "exponent" }.into();
            cell.detail = format!("fit failed: {e}");
            return cell;
        }
    };
    cell.r_squared = Some(est.r_squared);
    cell.classification = classify_against_table(method, convexity, &est).ok();
    cell.detail = format!("window {}..={}", est.window.start, est.window.end);
    let (metric, value, threshold, ok) = match (bound, est.exponent(), est.ratio()) {
        (Bound::ExponentAtMost(t), Some(e), _) => ("exponent", e, format!("<= {t}"), e <= t),
        (Bound::RatioAtMost(t), _, Some(r)) => ("ratio", r, format!("<= {t:.2}"), r <= t),
        (Bound::RatioBelowOne, _, Some(r)) => ("ratio", r, "< 1".to_string(), r < 1.0),
        (_, Some(e), None) => {
            cell.detail.push_str(", no linear decay");
            ("exponent", e, "linear model".to_string(), false)
        }
        _ => unreachable!("a fit is either power or linear"),
    };
    let mut cell = cell.check(metric, value, threshold, ok);
    if ok && est.r_squared < MIN_R_SQUARED {
        cell.status = CellStatus::Inconclusive;
        cell.detail.push_str(", r² below 0.9");
    }
    cell
}

fn table_column(f: &Fixtures) -> Vec<Cell> {
    let lasso = &f.lasso;
    let mut cells = Vec::new();
    for (method, iters, bound) in [
        (Method::Subgradient, SUBGRADIENT_ITERS, -0.35),
        (Method::ProxGrad, CONVEX_ITERS, -0.85),
        (Method::Accelerated, CONVEX_ITERS, -1.7),
        (Method::Admm, CONVEX_ITERS, -0.85),
    ] {
        let id = format!("convex.{method}");
        let cell = Cell::new(&id, 1, "canonical LASSO, exact oracles");
        let cell = match solve(method, lasso, &f.config(method, lasso, iters), 1.0) {
            Ok(t) => rate_cell(cell, t, method, Convexity::Convex, Bound::ExponentAtMost(bound)),
            Err(e) => errored(cell, e),
        };
        cells.push(cell);
    }
    cells
}

fn errored(mut cell: Cell, e: crate::Error) -> Cell {
    cell.status = CellStatus::Violates;
    cell.detail = e.to_string();
    cell
}

fn strongly_convex_cell(f: &Fixtures, method: Method) -> Cell {
    let q = &f.quad;
    let sc = f.strong();
    let Convexity::StronglyConvex { mu_over_l } = sc else { unreachable!() };
    let id = format!("strong.{method}");
    let cell = Cell::new(&id, 2, "diag quadratic, mu/L = 1/4, exact oracles");
    let (cfg, bound) = match method {
        Method::ProxGrad => (
            f.config(method, q, LINEAR_ITERS),
            Bound::RatioAtMost(1.0 - mu_over_l + 0.03),
        ),
        Method::Accelerated => (
            f.config(method, q, LINEAR_ITERS),
            Bound::RatioAtMost(1.0 - mu_over_l.sqrt() + 0.03),
        ),
        // α₀ = 1/μ: with α₀/k steps a smaller base slows the rate to k^(−2μα₀)
        _ => (
            Config::new(SUBGRADIENT_ITERS).with_step(StepRule::Custom {
                alpha0: 1.0 / q.strong_convexity(),
            }),
            Bound::ExponentAtMost(-0.85),
        ),
    };
    match solve(method, q, &cfg.strongly_convex(true), 1.0) {
        Ok(t) => rate_cell(cell, t, method, sc, bound),
        Err(e) => errored(cell, e),
    }
}

fn polynomial_regime(f: &Fixtures, method: Method) -> Cell {
    let lasso = &f.lasso;
    let (criterion, base, bound) = match method {
        Method::ProxGrad => (3, 1, -0.85),
        _ => (4, 2, -1.7),
    };
    let s = Schedule::polynomial(1.0, 0.5, base).expect("valid schedule");
    let id = format!("poly{base}.{method}");
    let cell = Cell::new(&id, criterion, "canonical LASSO, polynomial errors, delta = 0.5");
    let cfg = f.config(method, lasso, CONVEX_ITERS).with_schedules(s, s).with_seed(11);
    let mut cell = match solve(method, lasso, &cfg, 1.0) {
        Ok(t) => rate_cell(cell, t, method, Convexity::Convex, Bound::ExponentAtMost(bound)),
        Err(e) => return errored(cell, e),
    };
    if criterion == 3 {
        let summable = check_summability(&s, CONVEX_ITERS)
            .map(|v| v.verdict == SummabilityVerdict::SummableEvidence)
            .unwrap_or(false);
        cell.detail.push_str(if summable { ", summable evidence" } else { ", not summable" });
        if !summable {
            cell.status = CellStatus::Violates;
        }
    }
    cell
}

fn geometric_regime(f: &Fixtures, method: Method) -> Cell {
    let q = &f.quad;
    let s = Schedule::geometric(1.0, 0.9).expect("valid schedule");
    let id = format!("geometric.{method}");
    let cell = Cell::new(&id, 5, "diag quadratic, geometric errors, rho = 0.9");
    let cfg = f
        .config(method, q, LINEAR_ITERS)
        .with_schedules(s, s)
        .with_seed(13)
        .strongly_convex(true);
    match solve(method, q, &cfg, 1.0) {
        Ok(t) => {
            let mut cell = rate_cell(cell, t, method, f.strong(), Bound::RatioBelowOne);
            // the error sequence caps the ratio, so the table band is informational here
            if let Some(v) = cell.classification.take() {
                let _ = write!(cell.detail, ", table band {}", v.as_str());
            }
            cell
        }
        Err(e) => errored(cell, e),
    }
}

/// Non-summable noise: the error floor exists and scales with `σ`.
fn noise_floor(f: &Fixtures) -> Vec<Cell> {
    let lasso = &f.lasso;
    let method = Method::ProxGrad;
    let noisy = |sigma: f64| -> crate::Result<Trace> {
        let s = Schedule::constant_noise(sigma)?;
        solve(method, lasso, &f.config(method, lasso, CONVEX_ITERS).with_schedules(s, s).with_seed(17), 1.0)
    };
    let exact = solve(method, lasso, &f.config(method, lasso, CONVEX_ITERS), 1.0);
    let mut floor_cell = Cell::new("noise.floor", 6, "canonical LASSO, constant noise sigma = 0.01");
    floor_cell.method = Some(method);
    let mut scale_cell = Cell::new("noise.doubling", 6, "doubling sigma doubles to quadruples the floor");
    scale_cell.method = Some(method);
    let (exact, small, large) = match (exact, noisy(0.01), noisy(0.02)) {
        (Ok(e), Ok(s), Ok(l)) => (e, s, l),
        (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => {
            let msg = e.to_string();
            floor_cell.detail.clone_from(&msg);
            scale_cell.detail = msg;
            return vec![floor_cell, scale_cell];
        }
    };
    let floor = error_floor(&small, &exact).expect("reference attached");
    let ratio = floor.tail_mean_gap / floor.exact_final_gap.max(f64::MIN_POSITIVE);
    let mut floor_cell = floor_cell.check(
        "floor/exact",
        ratio,
        ">= 10".into(),
        floor.floor_detected,
    );
    floor_cell.detail = format!(
        "tail mean {:.3e}, exact final {:.3e}",
        floor.tail_mean_gap, floor.exact_final_gap
    );
    let big = tail_mean_gap(&large).expect("reference attached");
    let growth = big / floor.tail_mean_gap;
    let mut scale_cell = scale_cell.check(
        "floor growth",
        growth,
        "in [2, 4]".into(),
        (2.0..=4.0).contains(&growth),
    );
    scale_cell.detail = format!("tail means {:.3e} -> {:.3e}", floor.tail_mean_gap, big);
    vec![floor_cell, scale_cell]
}

fn exactness_ladder(f: &Fixtures) -> Cell {
    let cell = Cell::new("ladder.zero_schedules", 7, "zero schedules reproduce exact-oracle traces bytewise");
    let mut mismatches = Vec::new();
    for (problem, name, strong) in [(&f.lasso, "lasso", false), (&f.quad, "quadratic", true)] {
        for method in Method::ALL {
            if strong && method == Method::Admm {
                continue;
            }
            let cfg = f.config(method, problem, 200).with_seed(99).strongly_convex(strong);
            let inexact = solve(method, problem, &cfg, 1.0).map(|t| t.to_csv());
            let exact = solve_with(method, problem, &cfg, 1.0, &mut ExactOracle).map(|t| t.to_csv());
            match (inexact, exact) {
                (Ok(a), Ok(b)) if a == b => {}
                _ => mismatches.push(format!("{name}/{method}")),
            }
        }
    }
    let detail = if mismatches.is_empty() {
        "7 method/problem pairs identical".to_string()
    } else {
        format!("differs: {}", mismatches.join(", "))
    };
    cell.boolean("byte identity", mismatches.is_empty(), detail)
}

fn prox_invariants() -> Cell {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_expansion = 0.0f64;
    let mut minimality_failures = 0;
    for case in 0..1000 {
        let n = rng.random_range(1..8);
        let reg = match case % 3 {
            0 => Regularizer::Zero,
            1 => Regularizer::L1 { lambda: rng.random_range(0.01..2.0) },
            _ => Regularizer::SquaredL2 { lambda: rng.random_range(0.01..2.0) },
        };
        let step = rng.random_range(0.01..3.0);
        let u: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let qu = ProxQuery::new(&u, step, reg).expect("valid query");
        let qv = ProxQuery::new(&v, step, reg).expect("valid query");
        let (pu, pv) = (prox_exact(&qu), prox_exact(&qv));
        let d = distance(&u, &v);
        if d > 0.0 {
            worst_expansion = worst_expansion.max(distance(&pu, &pv) / d);
        }
        let base = prox_objective(&qu, &pu).expect("same length");
        let probe: Vec<f64> = pu.iter().map(|x| x + rng.random_range(-1e-3..1e-3)).collect();
        if prox_objective(&qu, &probe).expect("same length") < base - 1e-15 {
            minimality_failures += 1;
        }
    }
    Cell::new("invariant.prox", 8, "prox nonexpansive and minimal, 1000 seeded cases").boolean(
        "prox",
        worst_expansion <= 1.0 + 1e-12 && minimality_failures == 0,
        format!("max expansion {worst_expansion:.6}, minimality failures {minimality_failures}"),
    )
}

fn gradient_invariants(f: &Fixtures) -> Cell {
    let svm = random_svm(40, 10, 1.0, 3).expect("valid generator arguments");
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst_fd = 0.0f64;
    let mut lipschitz_violations = 0;
    for p in [&f.lasso, &f.quad, &svm] {
        let n = p.dimension();
        for _ in 0..20 {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let g = p.smooth_gradient(&x);
            let h = 1e-6;
            let fd: Vec<f64> = (0..n)
                .map(|i| {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[i] += h;
                    xm[i] -= h;
                    (p.smooth_value(&xp) - p.smooth_value(&xm)) / (2.0 * h)
                })
                .collect();
            worst_fd = worst_fd.max(distance(&g, &fd) / norm(&g).max(1.0));
            let gy = p.smooth_gradient(&y);
            if distance(&g, &gy) > p.lipschitz() * distance(&x, &y) * (1.0 + 1e-10) {
                lipschitz_violations += 1;
            }
        }
    }
    Cell::new("invariant.gradient", 8, "finite differences and Lipschitz sampling").boolean(
        "gradient",
        worst_fd <= 1e-5 && lipschitz_violations == 0,
        format!("worst fd relative error {worst_fd:.2e}, Lipschitz violations {lipschitz_violations}"),
    )
}

fn fitter_invariants() -> Cell {
    let seq = |f: &dyn Fn(f64) -> f64| -> Vec<f64> { (0..=100).map(|k| f(k.max(1) as f64)).collect() };
    let w = crate::analysis::Window::new(1, 100);
    let mut worst = 0.0f64;
    for e in [-0.5, -1.0, -2.0] {
        let est = fit_power_rate(&seq(&|k| k.powf(e)), w).expect("exact sequence fits");
        worst = worst.max((est.exponent().unwrap_or(f64::NAN) - e).abs());
    }
    for r in [0.5f64, 0.9, 0.99] {
        let g: Vec<f64> = (0..=100i32).map(|k| r.powi(k)).collect();
        let w = crate::analysis::Window::new(1, if r == 0.5 { 40 } else { 100 });
        let est = fit_linear_rate(&g, w).expect("exact sequence fits");
        worst = worst.max((est.ratio().unwrap_or(f64::NAN) - r).abs());
    }
    Cell::new("invariant.rate_fit", 8, "exact recovery of synthetic power and geometric rates").check(
        "max abs error",
        worst,
        "<= 1e-9".into(),
        worst <= 1e-9,
    )
}

fn determinism(f: &Fixtures) -> Cell {
    let lasso = &f.lasso;
    let s = Schedule::constant_noise(0.05).expect("valid schedule");
    let mut diffs = Vec::new();
    for method in Method::ALL {
        let cfg = f.config(method, lasso, 100).with_schedules(s, s).with_seed(5);
        let a = solve(method, lasso, &cfg, 1.0).map(|t| t.to_csv());
        let b = solve(method, lasso, &cfg, 1.0).map(|t| t.to_csv());
        if !matches!((&a, &b), (Ok(x), Ok(y)) if x == y) {
            diffs.push(method.to_string());
        }
    }
    Cell::new("invariant.determinism", 8, "repeated noisy runs are byte-identical").boolean(
        "determinism",
        diffs.is_empty(),
        if diffs.is_empty() { "all methods".into() } else { diffs.join(", ") },
    )
}

fn one_step_cells(f: &Fixtures) -> Vec<Cell> {
    let method = Method::ProxGrad;
    let b = vec![0.7, -1.3, 2.1, 0.4];
    let quad = make_quadratic(DenseMatrix::identity(4), b.clone()).expect("valid");
    let quad = {
        let r = closed_form_reference(&quad).expect("identity has full rank");
        quad.with_reference(r).expect("closed form matches")
    };
    let quad_cell = Cell::new("one_step.quadratic", 9, "identity-Hessian quadratic, one prox-gradient step");
    let quad_cell = match solve(method, &quad, &f.config(method, &quad, 1), 1.0) {
        Ok(t) => {
            let gap = t.final_gap().unwrap_or(f64::NAN);
            quad_cell.check("gap after 1", gap, "<= 1e-12".into(), gap.abs() <= 1e-12)
        }
        Err(e) => errored(quad_cell, e),
    };

    let lasso = make_lasso(DenseMatrix::identity(2), vec![3.0, 0.5], 1.0).expect("valid");
    let lasso_cell = Cell::new("one_step.lasso", 9, "identity-design LASSO, one step to the soft threshold");
    let mut last = Vec::new();
    let run = crate::solvers::proximal_gradient_iterates(
        &lasso,
        &f.config(method, &lasso, 1),
        &mut ExactOracle,
        |step| {
            last = step.x.to_vec();
            true
        },
    );
    let lasso_cell = match run {
        Ok(_) => {
            let err = distance(&last, &[2.0, 0.0]);
            let p_err = (lasso.objective(&last) - 2.625).abs();
            let mut c = lasso_cell.check("|x1 - x*|", err, "<= 1e-10".into(), err <= 1e-10 && p_err <= 1e-10);
            c.detail = format!("objective error {p_err:.1e}");
            c
        }
        Err(e) => errored(lasso_cell, e),
    };
    vec![quad_cell, lasso_cell]
}

/// The step-2/L mutation must make the strongly convex prox-gradient cell fail.
fn mutation_smoke(f: &Fixtures) -> Cell {
    let mutated = Fixtures {
        lasso: f.lasso.clone(),
        quad: f.quad.clone(),
        options: SuiteOptions { step_scale: 2.0 },
    };
    let inner = strongly_convex_cell(&mutated, Method::ProxGrad);
    let caught = inner.status != CellStatus::Pass;
    let mut cell = Cell::new("mutation.step_2_over_L", 10, "step 2/L flips the strongly convex prox-gradient cell");
    cell.method = Some(Method::ProxGrad);
    cell = cell.boolean(
        "mutant caught",
        caught,
        format!("mutant cell {} ({})", inner.status.as_str(), inner.detail),
    );
    cell.value = inner.value;
    cell
}

/// Runs the whole matrix. Cells run concurrently; the order of the result is fixed.
pub fn run_suite(options: SuiteOptions) -> SuiteReport {
    let fixtures = Fixtures {
        lasso: canonical_lasso(),
        quad: canonical_strongly_convex(),
        options,
    };
    let f = &fixtures;
    type Job<'a> = Box<dyn Fn() -> Vec<Cell> + Send + Sync + 'a>;
    let mut jobs: Vec<Job<'_>> = vec![
        Box::new(move || table_column(f)),
        Box::new(move || vec![strongly_convex_cell(f, Method::ProxGrad)]),
        Box::new(move || vec![strongly_convex_cell(f, Method::Accelerated)]),
        Box::new(move || vec![strongly_convex_cell(f, Method::Subgradient)]),
        Box::new(move || vec![polynomial_regime(f, Method::ProxGrad)]),
        Box::new(move || vec![polynomial_regime(f, Method::Accelerated)]),
        Box::new(move || vec![geometric_regime(f, Method::ProxGrad)]),
        Box::new(move || vec![geometric_regime(f, Method::Accelerated)]),
        Box::new(move || noise_floor(f)),
        Box::new(move || vec![exactness_ladder(f)]),
        Box::new(|| vec![prox_invariants()]),
        Box::new(move || vec![gradient_invariants(f)]),
        Box::new(|| vec![fitter_invariants()]),
        Box::new(move || vec![determinism(f)]),
        Box::new(move || one_step_cells(f)),
    ];
    if options.step_scale == 1.0 {
        jobs.push(Box::new(move || vec![mutation_smoke(f)]));
    }
    let cells: Vec<Cell> = jobs.par_iter().flat_map(|job| job()).collect();
    let passed = cells.iter().all(|c| c.status == CellStatus::Pass);
    SuiteReport {
        schema: SUITE_SCHEMA,
        options,
        cells,
        passed,
    }
}
