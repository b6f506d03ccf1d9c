use std::time::Duration;

use serde::Serialize;

use super::{Method, Step};
use crate::linalg::{distance, fmt_f64, norm};
use crate::problems::{CompositeProblem, ProblemKind};
use crate::scalar::Scalar;

/// Column order of `trace.csv`.
pub const TRACE_COLUMNS: [&str; 7] = [
    "k",
    "objective",
    "gap_vs_pstar",
    "grad_error_norm",
    "prox_gap",
    "primal_residual",
    "dual_residual",
];

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord<T> {
    pub k: usize,
    /// `ℓ(x_k) + r(x_k)`; for ADMM evaluated at `z_k`.
    pub objective: T,
    pub best_objective: T,
    pub grad_error_norm: T,
    pub prox_gap: T,
    pub iterate_norm: T,
    pub distance_to_x_star: Option<T>,
    pub primal_residual: Option<T>,
    pub dual_residual: Option<T>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceMeta {
    pub method: Method,
    pub problem: ProblemKind,
    pub max_iters: usize,
    pub diverged: bool,
    pub degraded_prox_steps: usize,
    pub ridge_regularized: bool,
    #[serde(skip)]
    pub wall_time: Duration,
}

#[derive(Debug, Clone)]
pub struct Trace<T> {
    pub records: Vec<TraceRecord<T>>,
    pub meta: TraceMeta,
    pub p_star: Option<T>,
}

impl<T: Scalar> Trace<T> {
    pub(crate) fn new(method: Method, problem: &CompositeProblem<T>, max_iters: usize) -> Self {
        Self {
            records: Vec::with_capacity(max_iters + 1),
            meta: TraceMeta {
                method,
                problem: problem.kind(),
                max_iters,
                diverged: false,
                degraded_prox_steps: 0,
                ridge_regularized: false,
                wall_time: Duration::ZERO,
            },
            p_star: problem.p_star(),
        }
    }

    pub(crate) fn push(&mut self, problem: &CompositeProblem<T>, step: &Step<'_, T>) {
        let best = match self.records.last() {
            Some(r) if r.best_objective <= step.objective => r.best_objective,
            _ => step.objective,
        };
        if step.prox_degraded {
            self.meta.degraded_prox_steps += 1;
        }
        self.records.push(TraceRecord {
            k: step.k,
            objective: step.objective,
            best_objective: best,
            grad_error_norm: step.grad_error_norm,
            prox_gap: step.prox_gap,
            iterate_norm: norm(step.x),
            distance_to_x_star: problem.x_star().map(|xs| distance(step.x, xs)),
            primal_residual: step.primal_residual,
            dual_residual: step.dual_residual,
        });
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn method(&self) -> Method {
        self.meta.method
    }

    pub fn objectives(&self) -> Vec<T> {
        self.records.iter().map(|r| r.objective).collect()
    }

    /// `f(x_k) − p*` per iterate; `None` without a reference optimum.
    pub fn gaps(&self) -> Option<Vec<T>> {
        let p = self.p_star?;
        Some(self.records.iter().map(|r| r.objective - p).collect())
    }

    /// `min_{j≤k} f(x_j) − p*`.
    pub fn best_gaps(&self) -> Option<Vec<T>> {
        let p = self.p_star?;
        Some(self.records.iter().map(|r| r.best_objective - p).collect())
    }

    pub fn final_gap(&self) -> Option<T> {
        Some(self.records.last()?.objective - self.p_star?)
    }

    pub fn final_objective(&self) -> Option<T> {
        self.records.last().map(|r| r.objective)
    }

    /// `trace.csv`: header plus one row per record, 17 significant digits,
    /// empty cells where a column does not apply.
    pub fn to_csv(&self) -> String {
        let mut out = TRACE_COLUMNS.join(",");
        out.push('\n');
        let opt = |v: Option<T>| v.map(fmt_f64).unwrap_or_default();
        for r in &self.records {
            let gap = self.p_star.map(|p| r.objective - p);
            let row = [
                r.k.to_string(),
                fmt_f64(r.objective),
                opt(gap),
                fmt_f64(r.grad_error_norm),
                fmt_f64(r.prox_gap),
                opt(r.primal_residual),
                opt(r.dual_residual),
            ];
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Long-format `k,metric,value` rows for plotting tools.
    pub fn to_long_csv(&self) -> String {
        let mut out = String::from("k,metric,value\n");
        for r in &self.records {
            let mut emit = |name: &str, v: T| {
                out.push_str(&format!("{},{},{}\n", r.k, name, fmt_f64(v)));
            };
            emit("objective", r.objective);
            emit("best_objective", r.best_objective);
            if let Some(p) = self.p_star {
                emit("gap", r.objective - p);
                emit("best_gap", r.best_objective - p);
            }
            emit("grad_error_norm", r.grad_error_norm);
            emit("prox_gap", r.prox_gap);
            emit("iterate_norm", r.iterate_norm);
            if let Some(d) = r.distance_to_x_star {
                emit("distance_to_x_star", d);
            }
            if let Some(v) = r.primal_residual {
                emit("primal_residual", v);
            }
            if let Some(v) = r.dual_residual {
                emit("dual_residual", v);
            }
        }
        out
    }
}
