//! Nonsmooth parts `r`, their exact proximal maps and subgradient selections.
//!
//! Every supported `r` is separable, so the prox and the subproblem gap are
//! evaluated coordinate by coordinate.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::{lit, Scalar};

/// The nonsmooth part of a composite objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regularizer<T> {
    /// `r ≡ 0`
    Zero,
    /// `r(x) = λ‖x‖₁`
    L1 { lambda: T },
    /// `r(x) = λ‖x‖²`
    SquaredL2 { lambda: T },
}

impl<T: Scalar> Regularizer<T> {
    pub fn l1(lambda: T) -> Result<Self> {
        if !(lambda > T::zero()) || !lambda.is_finite() {
            return Err(invalid("l1 weight must be positive and finite"));
        }
        Ok(Regularizer::L1 { lambda })
    }

    pub fn squared_l2(lambda: T) -> Result<Self> {
        if !(lambda > T::zero()) || !lambda.is_finite() {
            return Err(invalid("squared-l2 weight must be positive and finite"));
        }
        Ok(Regularizer::SquaredL2 { lambda })
    }

    #[inline]
    fn coord_value(&self, v: T) -> T {
        match *self {
            Regularizer::Zero => T::zero(),
            Regularizer::L1 { lambda } => lambda * v.abs(),
            Regularizer::SquaredL2 { lambda } => lambda * v * v,
        }
    }

    pub fn value(&self, x: &[T]) -> T {
        match self {
            Regularizer::Zero => T::zero(),
            _ => x.iter().map(|&v| self.coord_value(v)).sum(),
        }
    }

    /// `r(a) − r(b)` accumulated coordinate-wise.
    fn value_difference(&self, a: &[T], b: &[T]) -> T {
        match *self {
            Regularizer::Zero => T::zero(),
            Regularizer::L1 { lambda } => {
                lambda
                    * a.iter()
                        .zip(b)
                        .map(|(&x, &y)| x.abs() - y.abs())
                        .sum::<T>()
            }
            Regularizer::SquaredL2 { lambda } => {
                lambda * a.iter().zip(b).map(|(&x, &y)| (x - y) * (x + y)).sum::<T>()
            }
        }
    }

    /// True when the regularizer is differentiable everywhere.
    pub fn is_smooth(&self) -> bool {
        !matches!(self, Regularizer::L1 { .. })
    }
}

/// Prox subproblem `argmin_y t·r(y) + ½‖center − y‖²`.
#[derive(Debug, Clone, Copy)]
pub struct ProxQuery<'a, T> {
    pub center: &'a [T],
    pub step: T,
    pub regularizer: Regularizer<T>,
}

impl<'a, T: Scalar> ProxQuery<'a, T> {
    pub fn new(center: &'a [T], step: T, regularizer: Regularizer<T>) -> Result<Self> {
        if !(step > T::zero()) || !step.is_finite() {
            return Err(invalid("prox step must be positive and finite"));
        }
        if center.iter().any(|v| !v.is_finite()) {
            return Err(invalid("prox center must be finite"));
        }
        Ok(Self {
            center,
            step,
            regularizer,
        })
    }
}

/// Exact proximal point of `t·r` at `q.center`.
pub fn prox_exact<T: Scalar>(q: &ProxQuery<'_, T>) -> Vec<T> {
    match q.regularizer {
        Regularizer::Zero => q.center.to_vec(),
        Regularizer::L1 { lambda } => {
            let tau = q.step * lambda;
            q.center.iter().map(|&v| soft_threshold(v, tau)).collect()
        }
        Regularizer::SquaredL2 { lambda } => {
            let denom = T::one() + lit::<T>(2.0) * q.step * lambda;
            q.center.iter().map(|&v| v / denom).collect()
        }
    }
}

/// `sign(v)·max(|v| − τ, 0)`
#[inline]
pub fn soft_threshold<T: Scalar>(v: T, tau: T) -> T {
    let m = v.abs() - tau;
    if m > T::zero() {
        m.copysign(v)
    } else {
        T::zero()
    }
}

/// Subproblem objective `t·r(y) + ½‖center − y‖²`.
pub fn prox_objective<T: Scalar>(q: &ProxQuery<'_, T>, y: &[T]) -> Result<T> {
    check_dim(q.center.len(), y.len())?;
    let quad: T = q
        .center
        .iter()
        .zip(y)
        .map(|(&v, &w)| (v - w) * (v - w))
        .sum::<T>()
        * lit(0.5);
    Ok(q.step * q.regularizer.value(y) + quad)
}

/// `prox_objective(q, y) − prox_objective(q, base)` evaluated without forming
/// either objective, so small gaps survive cancellation.
pub fn prox_gap<T: Scalar>(q: &ProxQuery<'_, T>, base: &[T], y: &[T]) -> Result<T> {
    check_dim(q.center.len(), y.len())?;
    check_dim(q.center.len(), base.len())?;
    let quad: T = q
        .center
        .iter()
        .zip(y.iter().zip(base))
        .map(|(&v, (&w, &b))| (b - w) * ((v - w) + (v - b)))
        .sum::<T>()
        * lit(0.5);
    Ok(q.step * q.regularizer.value_difference(y, base) + quad)
}

/// A deterministic element of `∂r(x)`; the l1 kink maps to 0.
pub fn subgradient_select<T: Scalar>(regularizer: &Regularizer<T>, x: &[T]) -> Vec<T> {
    match *regularizer {
        Regularizer::Zero => vec![T::zero(); x.len()],
        Regularizer::L1 { lambda } => x
            .iter()
            .map(|&v| {
                if v > T::zero() {
                    lambda
                } else if v < T::zero() {
                    -lambda
                } else {
                    T::zero()
                }
            })
            .collect(),
        Regularizer::SquaredL2 { lambda } => {
            let two_l = lit::<T>(2.0) * lambda;
            x.iter().map(|&v| two_l * v).collect()
        }
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn q<'a>(c: &'a [f64], t: f64, r: Regularizer<f64>) -> ProxQuery<'a, f64> {
        ProxQuery::new(c, t, r).unwrap()
    }

    // 1-d oracle: minimize |y|·τ + ½(v−y)² by checking the three sign cases.
    fn l1_prox_by_cases(v: f64, tau: f64) -> f64 {
        let obj = |y: f64| tau * y.abs() + 0.5 * (v - y) * (v - y);
        // stationary point on y > 0, on y < 0, and the kink
        let mut candidates = vec![0.0];
        if v - tau > 0.0 {
            candidates.push(v - tau);
        }
        if v + tau < 0.0 {
            candidates.push(v + tau);
        }
        candidates
            .into_iter()
            .min_by(|a, b| obj(*a).partial_cmp(&obj(*b)).unwrap())
            .unwrap()
    }

    #[test]
    fn zero_kind_is_identity() {
        let c = [5.0, -3.0];
        assert_eq!(prox_exact(&q(&c, 1.0, Regularizer::Zero)), vec![5.0, -3.0]);
    }

    #[test]
    fn l1_soft_threshold_matches_case_analysis() {
        let c = [2.0, -0.5, 0.0];
        let got = prox_exact(&q(&c, 1.0, Regularizer::l1(1.0).unwrap()));
        let oracle: Vec<f64> = c.iter().map(|&v| l1_prox_by_cases(v, 1.0)).collect();
        assert_eq!(oracle, vec![1.0, 0.0, 0.0]);
        assert_eq!(got, oracle);
    }

    #[test]
    fn squared_l2_shrinks_by_half() {
        let c = [2.0, 2.0];
        let got = prox_exact(&q(&c, 1.0, Regularizer::squared_l2(0.5).unwrap()));
        assert_eq!(got, vec![1.0, 1.0]);
    }

    #[test]
    fn objective_examples() {
        let c = [1.0, 2.0];
        assert_eq!(prox_objective(&q(&c, 1.0, Regularizer::Zero), &c).unwrap(), 0.0);
        let c = [2.0];
        let v = prox_objective(&q(&c, 1.0, Regularizer::l1(1.0).unwrap()), &[1.0]).unwrap();
        assert_eq!(v, 1.5);
        assert!(prox_objective(&q(&c, 1.0, Regularizer::Zero), &[1.0, 2.0]).is_err());
    }

    #[test]
    fn exact_prox_is_minimal_against_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for r in [
            Regularizer::Zero,
            Regularizer::l1(0.7).unwrap(),
            Regularizer::squared_l2(0.3).unwrap(),
        ] {
            let c: Vec<f64> = (0..4).map(|_| rng.random_range(-3.0..3.0)).collect();
            let query = q(&c, 0.8, r);
            let best = prox_objective(&query, &prox_exact(&query)).unwrap();
            for _ in 0..100 {
                let y: Vec<f64> = (0..4).map(|_| rng.random_range(-4.0..4.0)).collect();
                assert!(best <= prox_objective(&query, &y).unwrap());
            }
        }
    }

    #[test]
    fn gap_agrees_with_objective_difference() {
        let c = [1.5, -0.2, 0.9];
        let query = q(&c, 0.5, Regularizer::l1(1.0).unwrap());
        let ys = prox_exact(&query);
        let y = [1.3, 0.1, 0.0];
        let direct = prox_objective(&query, &y).unwrap() - prox_objective(&query, &ys).unwrap();
        assert!((prox_gap(&query, &ys, &y).unwrap() - direct).abs() < 1e-15);
    }

    #[test]
    fn subgradient_examples() {
        let l1 = Regularizer::l1(1.0).unwrap();
        assert_eq!(subgradient_select(&l1, &[2.0, -3.0]), vec![1.0, -1.0]);
        assert_eq!(subgradient_select(&l1, &[0.0]), vec![0.0]);
        let sq = Regularizer::squared_l2(0.5).unwrap();
        assert_eq!(subgradient_select(&sq, &[4.0]), vec![4.0]);
        assert_eq!(subgradient_select(&Regularizer::Zero, &[4.0]), vec![0.0]);
    }

    #[test]
    fn fixed_points() {
        let c = [0.3, -1.0];
        assert_eq!(prox_exact(&q(&c, 10.0, Regularizer::Zero)), c.to_vec());
        let z = [0.0, 0.0];
        assert_eq!(prox_exact(&q(&z, 2.0, Regularizer::l1(3.0).unwrap())), z.to_vec());
    }

    #[test]
    fn rejects_invalid_queries() {
        assert!(ProxQuery::new(&[1.0], 0.0, Regularizer::Zero).is_err());
        assert!(ProxQuery::new(&[f64::INFINITY], 1.0, Regularizer::Zero).is_err());
        assert!(Regularizer::l1(-1.0).is_err());
        assert!(Regularizer::squared_l2(0.0).is_err());
    }
}
