use super::{divergence_check, record_run, Method, Oracle, RunOutcome, SolverConfig, Step, Trace};
use crate::error::{invalid, Result};
use crate::linalg::axpy;
use crate::problems::CompositeProblem;
use crate::prox::ProxQuery;
use crate::scalar::{lit, Scalar};

/// Forward-backward step from `point`: gradient step on `ℓ`, then the
/// (possibly inexact) prox of `α·r`.
fn prox_step<T: Scalar, O: Oracle<T>>(
    problem: &CompositeProblem<T>,
    oracle: &mut O,
    point: &[T],
    alpha: T,
    k: usize,
) -> Result<(Vec<T>, T, T, bool)> {
    let (g, e_norm) = oracle.gradient(problem, point, k)?;
    let center = axpy(point, -alpha, &g);
    let q = ProxQuery::new(&center, alpha, problem.regularizer())?;
    let out = oracle.prox(&q, k)?;
    Ok((out.point, e_norm, out.gap, out.degraded))
}

/// ISTA: `x_{k+1} = prox_{α r}(x_k − α g_k)` with `α = 1/L` by default.
pub fn proximal_gradient_iterates<T, O, F>(
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
    let alpha = cfg.base_step(problem);
    let mut outcome = RunOutcome::default();
    if !observe(&Step::plain(0, &x, problem.objective(&x))) {
        outcome.stopped_early = true;
        return Ok(outcome);
    }
    for k in 1..=cfg.max_iters {
        let (next, e_norm, gap, degraded) = prox_step(problem, oracle, &x, alpha, k)?;
        x = next;
        let f = problem.objective(&x);
        outcome.iterations = k;
        let verdict = divergence_check(f);
        if verdict == Some(false) {
            outcome.diverged = true;
            break;
        }
        let step = Step {
            grad_error_norm: e_norm,
            prox_gap: gap,
            prox_degraded: degraded,
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

/// FISTA. Convex mode uses the `t_{k+1} = (1 + √(1 + 4t_k²))/2` momentum;
/// strongly convex mode uses the constant `(1 − √(μ/L))/(1 + √(μ/L))`.
pub fn accelerated_iterates<T, O, F>(
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
    let alpha = cfg.base_step(problem);
    let constant_momentum = if cfg.strongly_convex {
        let mu = problem.strong_convexity();
        if !(mu > T::zero()) {
            return Err(invalid("strongly convex mode needs mu > 0"));
        }
        let sq = (mu / problem.lipschitz()).sqrt();
        Some((T::one() - sq) / (T::one() + sq))
    } else {
        None
    };
    let mut outcome = RunOutcome::default();
    let mut f_prev = problem.objective(&x);
    if !observe(&Step::plain(0, &x, f_prev)) {
        outcome.stopped_early = true;
        return Ok(outcome);
    }
    let mut y = x.clone();
    let mut t = T::one();
    for k in 1..=cfg.max_iters {
        let (next, e_norm, gap, degraded) = prox_step(problem, oracle, &y, alpha, k)?;
        let f = problem.objective(&next);
        outcome.iterations = k;
        let verdict = divergence_check(f);
        if verdict == Some(false) {
            outcome.diverged = true;
            break;
        }
        let beta = if cfg.restart && f > f_prev {
            t = T::one();
            T::zero()
        } else if let Some(b) = constant_momentum {
            b
        } else {
            let t_next = (T::one() + (T::one() + lit::<T>(4.0) * t * t).sqrt()) / lit(2.0);
            let b = (t - T::one()) / t_next;
            t = t_next;
            b
        };
        y = next
            .iter()
            .zip(&x)
            .map(|(&xn, &xo)| xn + beta * (xn - xo))
            .collect();
        x = next;
        f_prev = f;
        let step = Step {
            grad_error_norm: e_norm,
            prox_gap: gap,
            prox_degraded: degraded,
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

pub fn proximal_gradient<T: Scalar>(
    problem: &CompositeProblem<T>,
    cfg: &SolverConfig<T>,
) -> Result<Trace<T>> {
    proximal_gradient_with(problem, cfg, &mut cfg.oracle())
}

pub fn proximal_gradient_with<T: Scalar, O: Oracle<T>>(
    problem: &CompositeProblem<T>,
    cfg: &SolverConfig<T>,
    oracle: &mut O,
) -> Result<Trace<T>> {
    record_run(Method::ProxGrad, problem, cfg, |observe| {
        proximal_gradient_iterates(problem, cfg, oracle, observe)
    })
}

pub fn accelerated_proximal_gradient<T: Scalar>(
    problem: &CompositeProblem<T>,
    cfg: &SolverConfig<T>,
) -> Result<Trace<T>> {
    accelerated_proximal_gradient_with(problem, cfg, &mut cfg.oracle())
}

pub fn accelerated_proximal_gradient_with<T: Scalar, O: Oracle<T>>(
    problem: &CompositeProblem<T>,
    cfg: &SolverConfig<T>,
    oracle: &mut O,
) -> Result<Trace<T>> {
    record_run(Method::Accelerated, problem, cfg, |observe| {
        accelerated_iterates(problem, cfg, oracle, observe)
    })
}
