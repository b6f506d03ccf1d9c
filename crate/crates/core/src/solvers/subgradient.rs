use super::{divergence_check, record_run, Method, Oracle, RunOutcome, SolverConfig, Step, Trace};
use crate::error::Result;
use crate::problems::CompositeProblem;
use crate::prox::subgradient_select;
use crate::scalar::Scalar;

/// `x_{k+1} = x_k − α_k (g_ℓ + g_r)` with `α_k = α₀/√k`, or `α₀/k` in
/// strongly convex mode.
pub fn subgradient_iterates<T, O, F>(
    problem: &CompositeProblem<T>,
    cfg: &SolverConfig<T>,
    oracle: &mut O,
    mut observe: F,
) -> Result<RunOutcome>
where
    T: Scalar,
    O: Oracle<T>,
    F: FnMut(&Step<'_, T>) -> bool,
{
    let mut x = cfg.validate(problem)?;
    let alpha0 = cfg.base_step(problem);
    let reg = problem.regularizer();
    let mut outcome = RunOutcome::default();
    if !observe(&Step::plain(0, &x, problem.objective(&x))) {
        outcome.stopped_early = true;
        return Ok(outcome);
    }
    for k in 1..=cfg.max_iters {
        let (g, e_norm) = oracle.gradient(problem, &x, k)?;
        let gr = subgradient_select(&reg, &x);
        let kf = T::from_usize(k).unwrap();
        let alpha = if cfg.strongly_convex {
            alpha0 / kf
        } else {
            alpha0 / kf.sqrt()
        };
        for ((xi, gi), ri) in x.iter_mut().zip(&g).zip(&gr) {
            *xi = *xi - alpha * (*gi + *ri);
        }
        let f = problem.objective(&x);
        outcome.iterations = k;
        let verdict = divergence_check(f);
        if verdict == Some(false) {
            outcome.diverged = true;
            break;
        }
        let step = Step {
            grad_error_norm: e_norm,
            ..Step::plain(k, &x, f)
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

pub fn subgradient_method<T: Scalar>(
    problem: &CompositeProblem<T>,
    cfg: &SolverConfig<T>,
) -> Result<Trace<T>> {
    subgradient_method_with(problem, cfg, &mut cfg.oracle())
}

pub fn subgradient_method_with<T: Scalar, O: Oracle<T>>(
    problem: &CompositeProblem<T>,
    cfg: &SolverConfig<T>,
    oracle: &mut O,
) -> Result<Trace<T>> {
    record_run(Method::Subgradient, problem, cfg, |observe| {
        subgradient_iterates(problem, cfg, oracle, observe)
    })
}
