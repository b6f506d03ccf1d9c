//! The four first-order methods: subgradient, proximal gradient, accelerated
//! proximal gradient and ADMM. Each runs against an [`Oracle`] and records a
//! [`Trace`].

mod admm;
mod proximal;
mod subgradient;
mod trace;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::oracles::{ErrorSchedule, InexactOracle};
use crate::problems::CompositeProblem;
use crate::scalar::{lit, Scalar};

pub use crate::oracles::{ExactOracle, Oracle};
pub use admm::{admm, admm_with, AdmmState};
pub use proximal::{
    accelerated_iterates, accelerated_proximal_gradient, accelerated_proximal_gradient_with,
    proximal_gradient, proximal_gradient_iterates, proximal_gradient_with,
};
pub use subgradient::{subgradient_iterates, subgradient_method, subgradient_method_with};
pub use trace::{Trace, TraceMeta, TraceRecord, TRACE_COLUMNS};

/// Objective value past which a run is treated as diverged.
pub const DIVERGENCE_OBJECTIVE: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Subgradient,
    ProxGrad,
    Accelerated,
    Admm,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Subgradient,
        Method::ProxGrad,
        Method::Accelerated,
        Method::Admm,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Subgradient => "subgradient",
            Method::ProxGrad => "prox_grad",
            Method::Accelerated => "accelerated",
            Method::Admm => "admm",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| invalid(format!("unknown method '{s}'")))
    }
}

/// Base step size. Subgradient divides it by `√k` (convex) or `k` (strongly convex).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum StepRule<T> {
    #[default]
    OneOverL,
    Custom { alpha0: T },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar + Serialize + serde::de::DeserializeOwned")]
pub struct SolverConfig<T> {
    pub max_iters: usize,
    #[serde(default)]
    pub step: StepRule<T>,
    #[serde(default)]
    pub x0: Option<Vec<T>>,
    #[serde(default)]
    pub grad_schedule: ErrorSchedule<T>,
    #[serde(default)]
    pub prox_schedule: ErrorSchedule<T>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub strongly_convex: bool,
    /// Function-value restart for the accelerated method.
    #[serde(default)]
    pub restart: bool,
}

impl<T: Scalar> SolverConfig<T> {
    pub fn new(max_iters: usize) -> Self {
        Self {
            max_iters,
            step: StepRule::OneOverL,
            x0: None,
            grad_schedule: ErrorSchedule::zero(),
            prox_schedule: ErrorSchedule::zero(),
            seed: 0,
            strongly_convex: false,
            restart: false,
        }
    }

    pub fn with_step(mut self, step: StepRule<T>) -> Self {
        self.step = step;
        self
    }

    pub fn with_schedules(mut self, grad: ErrorSchedule<T>, prox: ErrorSchedule<T>) -> Self {
        self.grad_schedule = grad;
        self.prox_schedule = prox;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_x0(mut self, x0: Vec<T>) -> Self {
        self.x0 = Some(x0);
        self
    }

    pub fn strongly_convex(mut self, on: bool) -> Self {
        self.strongly_convex = on;
        self
    }

    pub fn oracle(&self) -> InexactOracle<T> {
        InexactOracle::new(self.grad_schedule, self.prox_schedule, self.seed)
    }

    pub(crate) fn validate(&self, problem: &CompositeProblem<T>) -> Result<Vec<T>> {
        if self.max_iters == 0 {
            return Err(invalid("max_iters must be at least 1"));
        }
        if let StepRule::Custom { alpha0 } = self.step {
            if !(alpha0 > T::zero()) || !alpha0.is_finite() {
                return Err(invalid("custom step alpha0 must be positive"));
            }
        }
        match &self.x0 {
            Some(x0) if x0.len() != problem.dimension() => Err(Error::DimensionMismatch {
                expected: problem.dimension(),
                got: x0.len(),
            }),
            Some(x0) => Ok(x0.clone()),
            None => Ok(vec![T::zero(); problem.dimension()]),
        }
    }

    /// `1/L` or the custom base step.
    pub fn base_step(&self, problem: &CompositeProblem<T>) -> T {
        match self.step {
            StepRule::OneOverL => T::one() / problem.lipschitz(),
            StepRule::Custom { alpha0 } => alpha0,
        }
    }
}

/// One observed iterate, handed to the per-iteration callback.
#[derive(Debug)]
pub struct Step<'a, T> {
    pub k: usize,
    pub x: &'a [T],
    pub objective: T,
    pub grad_error_norm: T,
    pub prox_gap: T,
    pub prox_degraded: bool,
    pub primal_residual: Option<T>,
    pub dual_residual: Option<T>,
}

impl<'a, T: Scalar> Step<'a, T> {
    pub(crate) fn plain(k: usize, x: &'a [T], objective: T) -> Self {
        Self {
            k,
            x,
            objective,
            grad_error_norm: T::zero(),
            prox_gap: T::zero(),
            prox_degraded: false,
            primal_residual: None,
            dual_residual: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOutcome {
    pub iterations: usize,
    pub diverged: bool,
    pub stopped_early: bool,
    pub ridge_regularized: bool,
}

/// Continue / stop decision for an objective value; `None` means keep going.
pub(crate) fn divergence_check<T: Scalar>(f: T) -> Option<bool> {
    if !f.is_finite() {
        // not recorded
        Some(false)
    } else if f > lit(DIVERGENCE_OBJECTIVE) {
        // recorded, then stop
        Some(true)
    } else {
        None
    }
}

/// Runs `method` with the schedules and seed in `cfg`.
pub fn solve<T: Scalar>(
    method: Method,
    problem: &CompositeProblem<T>,
    cfg: &SolverConfig<T>,
    rho: T,
) -> Result<Trace<T>> {
    let mut oracle = cfg.oracle();
    solve_with(method, problem, cfg, rho, &mut oracle)
}

/// Runs `method` against an explicit oracle.
pub fn solve_with<T: Scalar, O: Oracle<T>>(
    method: Method,
    problem: &CompositeProblem<T>,
    cfg: &SolverConfig<T>,
    rho: T,
    oracle: &mut O,
) -> Result<Trace<T>> {
    match method {
        Method::Subgradient => subgradient_method_with(problem, cfg, oracle),
        Method::ProxGrad => proximal_gradient_with(problem, cfg, oracle),
        Method::Accelerated => accelerated_proximal_gradient_with(problem, cfg, oracle),
        Method::Admm => admm_with(problem, rho, cfg, oracle),
    }
}

pub(crate) fn record_run<T, F>(
    method: Method,
    problem: &CompositeProblem<T>,
    cfg: &SolverConfig<T>,
    run: F,
) -> Result<Trace<T>>
where
    T: Scalar,
    F: FnOnce(&mut dyn FnMut(&Step<'_, T>) -> bool) -> Result<RunOutcome>,
{
    let started = std::time::Instant::now();
    let mut trace = Trace::new(method, problem, cfg.max_iters);
    let outcome = run(&mut |step| {
        trace.push(problem, step);
        true
    })?;
    trace.meta.diverged = outcome.diverged;
    trace.meta.ridge_regularized = outcome.ridge_regularized;
    trace.meta.wall_time = started.elapsed();
    Ok(trace)
}
