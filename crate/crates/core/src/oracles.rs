//! Inexact gradient and prox oracles driven by error schedules.
//!
//! A schedule prescribes the error magnitude at iteration `k`. Gradient errors
//! are injected as a random direction of exactly that norm. Prox errors are
//! injected as a point whose subproblem gap is a prescribed `ε_k`; in
//! [`ScheduleMode::MatchPaper`] the gap is the square of the magnitude, so the
//! magnitude sequence is the `√ε_k` sequence.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::axpy;
use crate::problems::CompositeProblem;
use crate::prox::{prox_exact, prox_gap, ProxQuery};
use crate::scalar::{lit, wide, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decay<T> {
    Zero,
    /// `c / k^(base + δ)`
    Polynomial { c: T, delta: T, base: u8 },
    /// `c·ρᵏ`
    Geometric { c: T, rho: T },
    /// Random magnitude with mean `σ` at every iteration.
    ConstantNoise { sigma: T },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleMode {
    /// Prox gap target is the squared magnitude.
    #[default]
    MatchPaper,
    /// Prox gap target is the magnitude itself.
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScheduleSpec", into = "ScheduleSpec", bound = "T: Scalar")]
pub struct ErrorSchedule<T> {
    pub decay: Decay<T>,
    pub mode: ScheduleMode,
}

impl<T: Scalar> Default for ErrorSchedule<T> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<T: Scalar> ErrorSchedule<T> {
    pub fn zero() -> Self {
        Self {
            decay: Decay::Zero,
            mode: ScheduleMode::MatchPaper,
        }
    }

    pub fn polynomial(c: T, delta: T, base: u8) -> Result<Self> {
        if !(c > T::zero()) {
            return Err(invalid("polynomial schedule needs c > 0"));
        }
        if !(delta > T::zero()) {
            return Err(invalid("polynomial schedule needs delta > 0"));
        }
        if base != 1 && base != 2 {
            return Err(invalid("polynomial power_base must be 1 or 2"));
        }
        Ok(Self {
            decay: Decay::Polynomial { c, delta, base },
            mode: ScheduleMode::MatchPaper,
        })
    }

    pub fn geometric(c: T, rho: T) -> Result<Self> {
        if !(c > T::zero()) {
            return Err(invalid("geometric schedule needs c > 0"));
        }
        if !(rho > T::zero() && rho < T::one()) {
            return Err(invalid("geometric schedule needs rho in (0, 1)"));
        }
        Ok(Self {
            decay: Decay::Geometric { c, rho },
            mode: ScheduleMode::MatchPaper,
        })
    }

    pub fn constant_noise(sigma: T) -> Result<Self> {
        if !(sigma >= T::zero()) || !sigma.is_finite() {
            return Err(invalid("constant_noise needs sigma >= 0"));
        }
        Ok(Self {
            decay: Decay::ConstantNoise { sigma },
            mode: ScheduleMode::MatchPaper,
        })
    }

    pub fn with_mode(mut self, mode: ScheduleMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn is_zero(&self) -> bool {
        match self.decay {
            Decay::Zero => true,
            Decay::ConstantNoise { sigma } => sigma.is_zero(),
            _ => false,
        }
    }

    /// Expected magnitude at `k` (the exact value for deterministic schedules).
    pub fn expected_magnitude(&self, k: usize) -> T {
        let kf = T::from_usize(k).unwrap();
        match self.decay {
            Decay::Zero => T::zero(),
            Decay::Polynomial { c, delta, base } => {
                c / kf.powf(T::from_u8(base).unwrap() + delta)
            }
            Decay::Geometric { c, rho } => c * rho.powf(kf),
            Decay::ConstantNoise { sigma } => sigma,
        }
    }

    /// Gap target `ε_k` for the prox oracle.
    pub fn prox_target(&self, k: usize, rng: &mut ChaCha8Rng) -> Result<T> {
        let m = schedule_magnitude(self, k, rng)?;
        Ok(match self.mode {
            ScheduleMode::MatchPaper => m * m,
            ScheduleMode::Raw => m,
        })
    }

    pub fn variant_name(&self) -> &'static str {
        match self.decay {
            Decay::Zero => "zero",
            Decay::Polynomial { .. } => "polynomial",
            Decay::Geometric { .. } => "geometric",
            Decay::ConstantNoise { .. } => "constant_noise",
        }
    }
}

/// Error magnitude at iteration `k ≥ 1`.
///
/// `constant_noise` draws `2σ·U[0,1)`, which has mean `σ`.
pub fn schedule_magnitude<T: Scalar>(
    s: &ErrorSchedule<T>,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Result<T> {
    if k == 0 {
        return Err(invalid("schedules are indexed from k = 1"));
    }
    Ok(match s.decay {
        Decay::ConstantNoise { sigma } => {
            if sigma.is_zero() {
                T::zero()
            } else {
                let u: f64 = rng.random();
                lit::<T>(2.0 * u) * sigma
            }
        }
        _ => s.expected_magnitude(k),
    })
}

/// Uniform direction on the unit sphere.
pub fn unit_direction<T: Scalar>(n: usize, rng: &mut ChaCha8Rng) -> Vec<T> {
    loop {
        let d: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let nrm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        if nrm > 1e-300 {
            return d.into_iter().map(|v| lit(v / nrm)).collect();
        }
    }
}

/// `∇ℓ(x) + e` with `‖e‖ = schedule_magnitude(s, k)`; returns the gradient and `‖e‖`.
pub fn inexact_gradient<T: Scalar>(
    problem: &CompositeProblem<T>,
    x: &[T],
    k: usize,
    s: &ErrorSchedule<T>,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<T>, T)> {
    if x.len() != problem.dimension() {
        return Err(Error::DimensionMismatch {
            expected: problem.dimension(),
            got: x.len(),
        });
    }
    let m = schedule_magnitude(s, k, rng)?;
    let g = problem.smooth_gradient(x);
    if m.is_zero() {
        return Ok((g, T::zero()));
    }
    let d = unit_direction::<T>(x.len(), rng);
    Ok((axpy(&g, m, &d), m))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProxOutcome<T> {
    pub point: Vec<T>,
    /// Achieved subproblem gap over the exact prox.
    pub gap: T,
    /// The target gap could not be realized; `point` is the exact prox.
    pub degraded: bool,
}

/// Bisection steps allowed when realizing a prox gap.
pub const PROX_BISECTION_CAP: usize = 200;

/// An `ε_k`-approximate prox point, `ε_k = s.prox_target(k)`.
pub fn inexact_prox<T: Scalar>(
    q: &ProxQuery<'_, T>,
    k: usize,
    s: &ErrorSchedule<T>,
    rng: &mut ChaCha8Rng,
) -> Result<ProxOutcome<T>> {
    let target = s.prox_target(k, rng)?;
    prox_with_gap(q, target, rng)
}

/// Exact prox moved along a random direction until the subproblem gap lies
/// in `[0.99ε, ε]`.
///
/// The subproblem is 1-strongly convex, so the gap along any unit direction
/// at distance `s` is at least `s²/2`; `s = √(2ε)` therefore brackets the
/// target from above and bisection on `[0, √(2ε)]` always has a root.
pub fn prox_with_gap<T: Scalar>(
    q: &ProxQuery<'_, T>,
    target: T,
    rng: &mut ChaCha8Rng,
) -> Result<ProxOutcome<T>> {
    if !(target >= T::zero()) {
        return Err(invalid("prox gap target must be nonnegative"));
    }
    let exact = prox_exact(q);
    if target.is_zero() {
        return Ok(ProxOutcome {
            point: exact,
            gap: T::zero(),
            degraded: false,
        });
    }
    let d = unit_direction::<T>(exact.len(), rng);
    let lower_ok = lit::<T>(0.99) * target;
    let mut lo = T::zero();
    let mut hi = (lit::<T>(2.0) * target).sqrt();
    let mut probe = hi;
    for _ in 0..PROX_BISECTION_CAP {
        let candidate = axpy(&exact, probe, &d);
        let gap = prox_gap(q, &exact, &candidate)?;
        if gap >= lower_ok && gap <= target {
            return Ok(ProxOutcome {
                point: candidate,
                gap,
                degraded: false,
            });
        }
        if gap > target {
            hi = probe;
        } else {
            lo = probe;
        }
        let mid = (lo + hi) * lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        probe = mid;
    }
    Ok(ProxOutcome {
        point: exact,
        gap: T::zero(),
        degraded: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SummabilityVerdict {
    SummableEvidence,
    DivergingEvidence,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summability {
    pub partial_sum: f64,
    pub tail_fraction: f64,
    pub verdict: SummabilityVerdict,
}

/// Tail mass below which a partial sum is read as evidence of summability.
pub const SUMMABLE_TAIL_FRACTION: f64 = 0.05;

/// Advisory summability diagnostic: sums expected magnitudes over `1..=horizon`
/// and compares the mass of the last half against the total.
pub fn check_summability<T: Scalar>(s: &ErrorSchedule<T>, horizon: usize) -> Result<Summability> {
    if horizon < 10 {
        return Err(invalid("summability horizon must be at least 10"));
    }
    let mut total = 0.0f64;
    let mut tail = 0.0f64;
    let half = horizon / 2;
    for k in 1..=horizon {
        let m = wide(s.expected_magnitude(k));
        total += m;
        if k > half {
            tail += m;
        }
    }
    let tail_fraction = if total > 0.0 { tail / total } else { 0.0 };
    let verdict = if matches!(s.decay, Decay::ConstantNoise { sigma } if sigma > T::zero())
        || tail_fraction >= SUMMABLE_TAIL_FRACTION
    {
        SummabilityVerdict::DivergingEvidence
    } else {
        SummabilityVerdict::SummableEvidence
    };
    Ok(Summability {
        partial_sum: total,
        tail_fraction,
        verdict,
    })
}

/// Source of gradients and prox points for the solvers.
pub trait Oracle<T: Scalar> {
    /// Gradient of `ℓ` at `x` for iteration `k`, with the injected error norm.
    fn gradient(&mut self, problem: &CompositeProblem<T>, x: &[T], k: usize) -> Result<(Vec<T>, T)>;

    /// Prox point for iteration `k`.
    fn prox(&mut self, q: &ProxQuery<'_, T>, k: usize) -> Result<ProxOutcome<T>>;
}

/// Exact gradient and exact prox.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactOracle;

impl<T: Scalar> Oracle<T> for ExactOracle {
    fn gradient(&mut self, problem: &CompositeProblem<T>, x: &[T], _k: usize) -> Result<(Vec<T>, T)> {
        Ok((problem.smooth_gradient(x), T::zero()))
    }

    fn prox(&mut self, q: &ProxQuery<'_, T>, _k: usize) -> Result<ProxOutcome<T>> {
        Ok(ProxOutcome {
            point: prox_exact(q),
            gap: T::zero(),
            degraded: false,
        })
    }
}

/// Scheduled errors on both oracles. Gradient and prox errors use independent
/// ChaCha streams derived from one seed.
#[derive(Debug, Clone)]
pub struct InexactOracle<T> {
    pub grad_schedule: ErrorSchedule<T>,
    pub prox_schedule: ErrorSchedule<T>,
    grad_rng: ChaCha8Rng,
    prox_rng: ChaCha8Rng,
}

impl<T: Scalar> InexactOracle<T> {
    pub fn new(grad_schedule: ErrorSchedule<T>, prox_schedule: ErrorSchedule<T>, seed: u64) -> Self {
        let grad_rng = ChaCha8Rng::seed_from_u64(seed);
        let mut prox_rng = ChaCha8Rng::seed_from_u64(seed);
        prox_rng.set_stream(1);
        Self {
            grad_schedule,
            prox_schedule,
            grad_rng,
            prox_rng,
        }
    }
}

impl<T: Scalar> Oracle<T> for InexactOracle<T> {
    fn gradient(&mut self, problem: &CompositeProblem<T>, x: &[T], k: usize) -> Result<(Vec<T>, T)> {
        inexact_gradient(problem, x, k, &self.grad_schedule, &mut self.grad_rng)
    }

    fn prox(&mut self, q: &ProxQuery<'_, T>, k: usize) -> Result<ProxOutcome<T>> {
        inexact_prox(q, k, &self.prox_schedule, &mut self.prox_rng)
    }
}

/// Flat JSON form: `{variant, c, delta, rho, sigma, power_base, mode}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    pub variant: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_base: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub mode: ScheduleMode,
}

impl<T: Scalar> TryFrom<ScheduleSpec> for ErrorSchedule<T> {
    type Error = Error;

    fn try_from(s: ScheduleSpec) -> Result<Self> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| invalid(format!("schedule '{}' requires field '{}'", s.variant, name)))
        };
        let sched = match s.variant.as_str() {
            "zero" => ErrorSchedule::zero(),
            "polynomial" => ErrorSchedule::polynomial(
                lit(s.c.unwrap_or(1.0)),
                lit(need(s.delta, "delta")?),
                s.power_base.unwrap_or(1),
            )?,
            "geometric" => {
                ErrorSchedule::geometric(lit(s.c.unwrap_or(1.0)), lit(need(s.rho, "rho")?))?
            }
            "constant_noise" => ErrorSchedule::constant_noise(lit(need(s.sigma, "sigma")?))?,
            other => return Err(invalid(format!("unknown schedule variant '{other}'"))),
        };
        Ok(sched.with_mode(s.mode))
    }
}

impl<T: Scalar> From<ErrorSchedule<T>> for ScheduleSpec {
    fn from(s: ErrorSchedule<T>) -> Self {
        let mut spec = ScheduleSpec {
            variant: s.variant_name().to_string(),
            c: None,
            delta: None,
            power_base: None,
            rho: None,
            sigma: None,
            mode: s.mode,
        };
        match s.decay {
            Decay::Zero => {}
            Decay::Polynomial { c, delta, base } => {
                spec.c = Some(wide(c));
                spec.delta = Some(wide(delta));
                spec.power_base = Some(base);
            }
            Decay::Geometric { c, rho } => {
                spec.c = Some(wide(c));
                spec.rho = Some(wide(rho));
            }
            Decay::ConstantNoise { sigma } => spec.sigma = Some(wide(sigma)),
        }
        spec
    }
}
