use super::{divergence_check, record_run, Method, Oracle, RunOutcome, SolverConfig, Step, Trace};
use crate::error::{invalid, Result};
use crate::linalg::{distance, norm, sub, Cholesky};
use crate::problems::{CompositeProblem, SmoothPart};
use crate::prox::ProxQuery;
use crate::scalar::{lit, Scalar};

/// Inner gradient iterations for x-updates without a closed form.
pub const ADMM_INNER_ITERS: usize = 50;

/// Scaled-form ADMM state for `min ℓ(x) + r(z)` s.t. `x = z`.
#[derive(Debug, Clone)]
pub struct AdmmState<T> {
    pub x: Vec<T>,
    pub z: Vec<T>,
    pub u: Vec<T>,
    rho: T,
    factor: Option<(Cholesky<T>, Vec<T>)>,
    ridge_regularized: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct AdmmIteration<T> {
    pub grad_error_norm: T,
    pub prox_gap: T,
    pub prox_degraded: bool,
    pub primal_residual: T,
    pub dual_residual: T,
}

impl<T: Scalar> AdmmState<T> {
    /// Starts from `x = z = x0` with `u = −∇ℓ(x0)/ρ`, the scaled dual that
    /// makes `(x*, x*, −∇ℓ(x*)/ρ)` a fixed point.
    pub fn new(problem: &CompositeProblem<T>, rho: T, x0: Vec<T>) -> Result<Self> {
        if !(rho > T::zero()) || !rho.is_finite() {
            return Err(invalid("ADMM rho must be positive"));
        }
        let mut ridge_regularized = false;
        let factor = match problem.smooth() {
            SmoothPart::LeastSquares { a, b } => {
                let system = a.gram().shifted(rho);
                let chol = match Cholesky::factor(&system) {
                    Some(c) => c,
                    None => {
                        ridge_regularized = true;
                        Cholesky::factor(&system.shifted(lit(1e-10)))
                            .ok_or_else(|| invalid("ADMM x-update system is singular"))?
                    }
                };
                Some((chol, a.t_matvec(b)))
            }
            SmoothPart::SquaredHinge { .. } => None,
        };
        let u = problem
            .smooth_gradient(&x0)
            .into_iter()
            .map(|g| -g / rho)
            .collect();
        Ok(Self {
            z: x0.clone(),
            x: x0,
            u,
            rho,
            factor,
            ridge_regularized,
        })
    }

    pub fn rho(&self) -> T {
        self.rho
    }

    pub fn ridge_regularized(&self) -> bool {
        self.ridge_regularized
    }

    /// One sweep of x-update, z-update, dual update.
    pub fn step<O: Oracle<T>>(
        &mut self,
        problem: &CompositeProblem<T>,
        oracle: &mut O,
        k: usize,
    ) -> Result<AdmmIteration<T>> {
        let rho = self.rho;
        let grad_error_norm = match &self.factor {
            Some((chol, atb)) => {
                // ∇ℓ(x) + e + ρ(x − z + u) = 0 with e the oracle's error at z
                let (g, e_norm) = oracle.gradient(problem, &self.z, k)?;
                let mut rhs: Vec<T> = atb
                    .iter()
                    .zip(self.z.iter().zip(&self.u))
                    .map(|(&c, (&z, &u))| c + rho * (z - u))
                    .collect();
                if e_norm > T::zero() {
                    let exact = problem.smooth_gradient(&self.z);
                    for ((r, gi), ei) in rhs.iter_mut().zip(&g).zip(&exact) {
                        *r = *r - (*gi - *ei);
                    }
                }
                self.x = chol.solve(&rhs);
                e_norm
            }
            None => {
                let step = T::one() / (problem.lipschitz() + rho);
                let mut e_last = T::zero();
                for _ in 0..ADMM_INNER_ITERS {
                    let (g, e_norm) = oracle.gradient(problem, &self.x, k)?;
                    e_last = e_norm;
                    for i in 0..self.x.len() {
                        let d = g[i] + rho * (self.x[i] - self.z[i] + self.u[i]);
                        self.x[i] = self.x[i] - step * d;
                    }
                }
                e_last
            }
        };
        let center: Vec<T> = self.x.iter().zip(&self.u).map(|(&x, &u)| x + u).collect();
        let q = ProxQuery::new(&center, T::one() / rho, problem.regularizer())?;
        let out = oracle.prox(&q, k)?;
        let z_prev = std::mem::replace(&mut self.z, out.point);
        let residual = sub(&self.x, &self.z);
        for (u, r) in self.u.iter_mut().zip(&residual) {
            *u = *u + *r;
        }
        Ok(AdmmIteration {
            grad_error_norm,
            prox_gap: out.gap,
            prox_degraded: out.degraded,
            primal_residual: norm(&residual),
            dual_residual: rho * distance(&self.z, &z_prev),
        })
    }
}

fn admm_iterates<T, O, F>(
    problem: &CompositeProblem<T>,
    rho: T,
    cfg: &SolverConfig<T>,
    oracle: &mut O,
    mut observe: F,
) -> Result<RunOutcome>
where
    T: Scalar,
    O: Oracle<T>,
    F: FnMut(&Step<'_, T>) -> bool,
{
    let x0 = cfg.validate(problem)?;
    let mut state = AdmmState::new(problem, rho, x0)?;
    let mut outcome = RunOutcome {
        ridge_regularized: state.ridge_regularized(),
        ..RunOutcome::default()
    };
    let first = Step {
        primal_residual: Some(T::zero()),
        dual_residual: Some(T::zero()),
        ..Step::plain(0, &state.z, problem.objective(&state.z))
    };
    if !observe(&first) {
        outcome.stopped_early = true;
        return Ok(outcome);
    }
    for k in 1..=cfg.max_iters {
        let it = state.step(problem, oracle, k)?;
        let f = problem.objective(&state.z);
        outcome.iterations = k;
        let verdict = divergence_check(f);
        if verdict == Some(false) {
            outcome.diverged = true;
            break;
        }
        let step = Step {
            k,
            x: &state.z,
            objective: f,
            grad_error_norm: it.grad_error_norm,
            prox_gap: it.prox_gap,
            prox_degraded: it.prox_degraded,
            primal_residual: Some(it.primal_residual),
            dual_residual: Some(it.dual_residual),
        };
        if !observe(&step) {
            outcome.stopped_early = true;
            break;
        }
        if verdict == Some(true) {
            outcome.diverged = true;
            break;
        }
    }
    Ok(outcome)
}

/// ADMM with penalty `rho`; the trace reports the objective at `z_k`.
pub fn admm<T: Scalar>(
    problem: &CompositeProblem<T>,
    rho: T,
    cfg: &SolverConfig<T>,
) -> Result<Trace<T>> {
    admm_with(problem, rho, cfg, &mut cfg.oracle())
}

pub fn admm_with<T: Scalar, O: Oracle<T>>(
    problem: &CompositeProblem<T>,
    rho: T,
    cfg: &SolverConfig<T>,
    oracle: &mut O,
) -> Result<Trace<T>> {
    if !(rho > T::zero()) {
        return Err(invalid("ADMM rho must be positive"));
    }
    record_run(Method::Admm, problem, cfg, |observe| {
        admm_iterates(problem, rho, cfg, oracle, observe)
    })
}
