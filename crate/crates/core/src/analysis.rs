//! Empirical rate fitting and comparison against the rate table:
//!
//! | method            | convex      | strongly convex     |
//! |-------------------|-------------|---------------------|
//! | subgradient       | `O(1/√k)`   | `O(1/k)`            |
//! | proximal gradient | `O(1/k)`    | `O((1 − μ/L)^k)`    |
//! | accelerated       | `O(1/k²)`   | `O((1 − √(μ/L))^k)` |
//! | ADMM              | `O(1/k)`    | n/a                 |
//!
//! Table entries are upper bounds, so a faster fitted rate ("beats") passes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracles::{check_summability, Decay, ErrorSchedule, ScheduleMode, ScheduleSpec, Summability};
use crate::scalar::{wide, Scalar};
use crate::solvers::{Method, Trace};

/// Gap values at or below this are numerical floor and excluded from fits.
pub const GAP_FLOOR: f64 = 1e-13;
pub const MIN_FIT_POINTS: usize = 10;
pub const EXPONENT_TOLERANCE: f64 = 0.15;
pub const RATIO_TOLERANCE: f64 = 0.03;
pub const MIN_R_SQUARED: f64 = 0.9;
/// Error-floor test: final-tail mean gap over exact-run final gap.
pub const FLOOR_FACTOR: f64 = 10.0;

/// Inclusive iteration range `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: usize,
    pub end: usize,
}

impl Window {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum RateModel {
    /// `gap ≈ C·k^exponent`
    Power { exponent: f64 },
    /// `gap ≈ C·ratio^k`
    Linear { ratio: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub model: RateModel,
    pub r_squared: f64,
    pub window: Window,
    pub floor_detected: bool,
    /// A linear fit was requested but the fitted ratio was not below 1.
    pub model_mismatch: bool,
}

impl RateEstimate {
    pub fn exponent(&self) -> Option<f64> {
        match self.model {
            RateModel::Power { exponent } => Some(exponent),
            RateModel::Linear { .. } => None,
        }
    }

    pub fn ratio(&self) -> Option<f64> {
        match self.model {
            RateModel::Linear { ratio } => Some(ratio),
            RateModel::Power { .. } => None,
        }
    }
}

struct LineFit {
    slope: f64,
    r_squared: f64,
}

fn least_squares_line(points: &[(f64, f64)]) -> LineFit {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2))
        .sum();
    let r_squared = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    LineFit { slope, r_squared }
}

/// Usable `(k, gap)` pairs in the window; the flag reports clipped points.
fn usable_points<T: Scalar>(gaps: &[T], window: Window) -> Result<(Vec<(f64, f64)>, bool)> {
    if window.start >= window.end {
        return Err(crate::error::invalid("fit window needs start < end"));
    }
    if window.end >= gaps.len() {
        return Err(crate::error::invalid(format!(
            "fit window end {} outside a sequence of length {}",
            window.end,
            gaps.len()
        )));
    }
    let mut floored = false;
    let mut pts = Vec::with_capacity(window.end - window.start + 1);
    for (k, g) in gaps.iter().enumerate().take(window.end + 1).skip(window.start) {
        let g = wide(*g);
        if g > GAP_FLOOR && g.is_finite() {
            pts.push((k as f64, g.ln()));
        } else {
            floored = true;
        }
    }
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::TooFewPoints {
            usable: pts.len(),
            required: MIN_FIT_POINTS,
        });
    }
    Ok((pts, floored))
}

/// Slope of `log gap` against `log k`; `gaps[k]` is the gap at iteration `k`
/// and `k = 0` is never used.
pub fn fit_power_rate<T: Scalar>(gaps: &[T], window: Window) -> Result<RateEstimate> {
    let window = Window::new(window.start.max(1), window.end);
    let (pts, floor_detected) = usable_points(gaps, window)?;
    let pts: Vec<(f64, f64)> = pts.into_iter().map(|(k, lg)| (k.ln(), lg)).collect();
    let fit = least_squares_line(&pts);
    Ok(RateEstimate {
        model: RateModel::Power {
            exponent: fit.slope,
        },
        r_squared: fit.r_squared,
        window,
        floor_detected,
        model_mismatch: false,
    })
}

/// Slope of `log gap` against `k`, reported as `ratio = exp(slope)`. A ratio
/// of 1 or more falls back to a power fit flagged as a model mismatch.
pub fn fit_linear_rate<T: Scalar>(gaps: &[T], window: Window) -> Result<RateEstimate> {
    let (pts, floor_detected) = usable_points(gaps, window)?;
    let fit = least_squares_line(&pts);
    let ratio = fit.slope.exp();
    if ratio < 1.0 {
        return Ok(RateEstimate {
            model: RateModel::Linear { ratio },
            r_squared: fit.r_squared,
            window,
            floor_detected,
            model_mismatch: false,
        });
    }
    let mut est = fit_power_rate(gaps, window)?;
    est.model_mismatch = true;
    est.floor_detected |= floor_detected;
    Ok(est)
}

/// Second half of the stretch before the gap first reaches the floor.
pub fn default_window<T: Scalar>(gaps: &[T]) -> Option<Window> {
    if gaps.len() < 2 {
        return None;
    }
    let first_floor = gaps
        .iter()
        .enumerate()
        .skip(1)
        .find(|(_, g)| !(wide(**g) > GAP_FLOOR))
        .map(|(k, _)| k);
    let end = match first_floor {
        Some(k) => k.checked_sub(1)?,
        None => gaps.len() - 1,
    };
    let start = (end / 2).min(end.saturating_sub(MIN_FIT_POINTS - 1)).max(1);
    (start < end).then_some(Window::new(start, end))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum Convexity {
    Convex,
    StronglyConvex { mu_over_l: f64 },
}

impl Convexity {
    pub fn is_strong(&self) -> bool {
        matches!(self, Convexity::StronglyConvex { .. })
    }
}

/// A rate table cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum TableRate {
    Power { exponent: f64 },
    Linear { ratio: f64 },
}

pub fn table_cell(method: Method, convexity: Convexity) -> Result<TableRate> {
    Ok(match (method, convexity) {
        (Method::Subgradient, Convexity::Convex) => TableRate::Power { exponent: -0.5 },
        (Method::Subgradient, Convexity::StronglyConvex { .. }) => TableRate::Power { exponent: -1.0 },
        (Method::ProxGrad, Convexity::Convex) => TableRate::Power { exponent: -1.0 },
        (Method::ProxGrad, Convexity::StronglyConvex { mu_over_l }) => TableRate::Linear {
            ratio: 1.0 - mu_over_l,
        },
        (Method::Accelerated, Convexity::Convex) => TableRate::Power { exponent: -2.0 },
        (Method::Accelerated, Convexity::StronglyConvex { mu_over_l }) => TableRate::Linear {
            ratio: 1.0 - mu_over_l.sqrt(),
        },
        (Method::Admm, Convexity::Convex) => TableRate::Power { exponent: -1.0 },
        (Method::Admm, Convexity::StronglyConvex { .. }) => {
            return Err(Error::NotApplicable("ADMM, strongly convex".into()))
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Meets,
    Beats,
    Violates,
    /// Fit quality below [`MIN_R_SQUARED`].
    Inconclusive,
}

impl Verdict {
    pub fn passes(&self) -> bool {
        matches!(self, Verdict::Meets | Verdict::Beats)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Meets => "meets",
            Verdict::Beats => "beats",
            Verdict::Violates => "violates",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

fn band(value: f64, target: f64, tolerance: f64) -> Verdict {
    if value < target - tolerance {
        Verdict::Beats
    } else if value <= target + tolerance {
        Verdict::Meets
    } else {
        Verdict::Violates
    }
}

/// Compares a fitted rate with the table cell for `(method, convexity)`.
pub fn classify_against_table(method: Method, convexity: Convexity, est: &RateEstimate) -> Result<Verdict> {
    let cell = table_cell(method, convexity)?;
    if !(est.r_squared >= MIN_R_SQUARED) {
        return Ok(Verdict::Inconclusive);
    }
    Ok(match (cell, est.model) {
        (TableRate::Power { exponent: target }, RateModel::Power { exponent }) => {
            band(exponent, target, EXPONENT_TOLERANCE)
        }
        // geometric decay is faster than any power law
        (TableRate::Power { .. }, RateModel::Linear { .. }) => Verdict::Beats,
        (TableRate::Linear { ratio: target }, RateModel::Linear { ratio }) => {
            band(ratio, target, RATIO_TOLERANCE)
        }
        (TableRate::Linear { .. }, RateModel::Power { .. }) => Verdict::Violates,
    })
}

/// Fits the model the table cell calls for, over `window`.
pub fn fit_for_cell<T: Scalar>(
    method: Method,
    convexity: Convexity,
    gaps: &[T],
    window: Window,
) -> Result<RateEstimate> {
    match table_cell(method, convexity) {
        Ok(TableRate::Linear { .. }) => fit_linear_rate(gaps, window),
        _ => fit_power_rate(gaps, window),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionStatus {
    Satisfied,
    NotSatisfied,
    /// No error condition is tabulated for this method; nothing obviously breaks it.
    NotCovered,
}

/// Decay class of an error norm sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
enum DecayClass {
    Zero,
    Power(f64),
    Linear,
    Constant,
}

fn decay_class<T: Scalar>(s: &ErrorSchedule<T>, prox: bool) -> DecayClass {
    // prox conditions are stated on √ε_k
    let halve = prox && s.mode == ScheduleMode::Raw;
    match s.decay {
        Decay::Zero => DecayClass::Zero,
        Decay::ConstantNoise { sigma } if sigma.is_zero() => DecayClass::Zero,
        Decay::ConstantNoise { .. } => DecayClass::Constant,
        Decay::Geometric { .. } => DecayClass::Linear,
        Decay::Polynomial { delta, base, .. } => {
            let p = f64::from(base) + wide(delta);
            DecayClass::Power(if halve { p / 2.0 } else { p })
        }
    }
}

/// Whether a pair of schedules meets the error condition for `(method, convexity)`:
/// `O(1/k^{1+δ})` for convex proximal gradient, `O(1/k^{2+δ})` for convex
/// acceleration, linear decay for both in the strongly convex case.
pub fn error_condition<T: Scalar>(
    method: Method,
    convexity: Convexity,
    grad: &ErrorSchedule<T>,
    prox: &ErrorSchedule<T>,
) -> ConditionStatus {
    let classes = [decay_class(grad, false), decay_class(prox, true)];
    let ok = |c: DecayClass, min_power: Option<f64>| match c {
        DecayClass::Zero | DecayClass::Linear => true,
        DecayClass::Power(p) => min_power.is_some_and(|m| p > m),
        DecayClass::Constant => false,
    };
    let verdict = |min_power: Option<f64>| {
        if classes.iter().all(|&c| ok(c, min_power)) {
            ConditionStatus::Satisfied
        } else {
            ConditionStatus::NotSatisfied
        }
    };
    match (method, convexity.is_strong()) {
        (Method::ProxGrad, false) => verdict(Some(1.0)),
        (Method::Accelerated, false) => verdict(Some(2.0)),
        (Method::ProxGrad, true) | (Method::Accelerated, true) => verdict(None),
        (Method::Subgradient, _) | (Method::Admm, _) => {
            let non_summable = classes
                .iter()
                .any(|c| matches!(c, DecayClass::Constant) || matches!(c, DecayClass::Power(p) if *p <= 1.0));
            if non_summable {
                ConditionStatus::NotSatisfied
            } else {
                ConditionStatus::NotCovered
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorFloor {
    pub tail_mean_gap: f64,
    pub exact_final_gap: f64,
    pub factor: f64,
    pub floor_detected: bool,
}

/// Mean per-iterate gap over the final 10% of a trace.
pub fn tail_mean_gap<T: Scalar>(trace: &Trace<T>) -> Option<f64> {
    let gaps = trace.gaps()?;
    let n = gaps.len();
    let tail = (n / 10).max(1);
    Some(gaps[n - tail..].iter().map(|g| wide(*g)).sum::<f64>() / tail as f64)
}

/// Measures the error floor of `trace` against an exact-oracle rerun.
pub fn error_floor<T: Scalar>(trace: &Trace<T>, exact: &Trace<T>) -> Option<ErrorFloor> {
    let tail = tail_mean_gap(trace)?;
    let exact_final = wide(exact.final_gap()?).max(0.0);
    Some(ErrorFloor {
        tail_mean_gap: tail,
        exact_final_gap: exact_final,
        factor: FLOOR_FACTOR,
        floor_detected: tail > FLOOR_FACTOR * exact_final,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub exponent: f64,
    pub ratio: f64,
    pub min_r_squared: f64,
    pub gap_floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            exponent: EXPONENT_TOLERANCE,
            ratio: RATIO_TOLERANCE,
            min_r_squared: MIN_R_SQUARED,
            gap_floor: GAP_FLOOR,
        }
    }
}

/// One row of the error-regime matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeReport {
    pub method: Method,
    pub convexity: Convexity,
    pub grad_schedule: ScheduleSpec,
    pub prox_schedule: ScheduleSpec,
    pub condition: ConditionStatus,
    pub grad_summability: Summability,
    pub prox_summability: Summability,
    pub table_cell: Option<TableRate>,
    pub estimate: Option<RateEstimate>,
    pub classification: Option<Verdict>,
    pub rate_preserved: Option<bool>,
    /// The condition fails and the tabulated rate was not observed.
    pub degraded: bool,
    pub error_floor: Option<ErrorFloor>,
    pub tolerances: Tolerances,
    pub notes: Vec<String>,
}

/// Pairs the error condition for `(method, convexity)` with the rate fitted
/// on the trace's best-so-far gaps. `exact` is an exact-oracle rerun, used
/// for the error-floor measurement.
pub fn error_regime_report<T: Scalar>(
    trace: &Trace<T>,
    exact: Option<&Trace<T>>,
    grad_schedule: &ErrorSchedule<T>,
    prox_schedule: &ErrorSchedule<T>,
    method: Method,
    convexity: Convexity,
) -> RegimeReport {
    let mut notes = Vec::new();
    let horizon = trace.len().saturating_sub(1).max(10);
    let summ = |s: &ErrorSchedule<T>| check_summability(s, horizon).expect("horizon >= 10");
    let condition = error_condition(method, convexity, grad_schedule, prox_schedule);
    let cell = table_cell(method, convexity).ok();
    if cell.is_none() {
        notes.push("table cell is n/a; rate reported without classification".into());
    }
    let mut estimate = None;
    let mut classification = None;
    match trace.best_gaps() {
        None => notes.push("no reference optimum; gaps unavailable".into()),
        Some(gaps) => match default_window(&gaps) {
            None => notes.push("gap reaches the numerical floor immediately".into()),
            Some(w) => match fit_for_cell(method, convexity, &gaps, w) {
                Ok(est) => {
                    if cell.is_some() {
                        classification = classify_against_table(method, convexity, &est).ok();
                    }
                    estimate = Some(est);
                }
                Err(e) => notes.push(format!("fit inconclusive: {e}")),
            },
        },
    }
    let geometric = [grad_schedule, prox_schedule]
        .iter()
        .any(|s| matches!(s.decay, Decay::Geometric { .. }));
    let rate_preserved = match (cell, estimate) {
        // a geometric error sequence caps the achievable ratio, so only the
        // linear class itself is expected to survive
        (Some(TableRate::Linear { .. }), Some(est)) if geometric => {
            notes.push("geometric errors: checked against the linear class, ratio < 1".into());
            Some(est.r_squared >= MIN_R_SQUARED && est.ratio().is_some_and(|r| r < 1.0))
        }
        _ => classification.map(|v| v.passes()),
    };
    let degraded = condition == ConditionStatus::NotSatisfied && rate_preserved != Some(true);
    let noisy = [grad_schedule, prox_schedule]
        .iter()
        .any(|s| matches!(s.decay, Decay::ConstantNoise { sigma } if sigma > T::zero()));
    let floor = if noisy {
        match exact {
            Some(ex) => error_floor(trace, ex),
            None => {
                notes.push("no exact-oracle rerun supplied; error floor not measured".into());
                None
            }
        }
    } else {
        None
    };
    RegimeReport {
        method,
        convexity,
        grad_schedule: (*grad_schedule).into(),
        prox_schedule: (*prox_schedule).into(),
        condition,
        grad_summability: summ(grad_schedule),
        prox_summability: summ(prox_schedule),
        table_cell: cell,
        estimate,
        classification,
        rate_preserved,
        degraded,
        error_floor: floor,
        tolerances: Tolerances::default(),
        notes,
    }
}
