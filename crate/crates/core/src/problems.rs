//! Composite problems `min ℓ(x) + r(x)` and generators for the least-squares,
//! LASSO and squared-hinge SVM instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{dot, symmetric_eigenvalues, Cholesky, DenseMatrix};
use crate::prox::Regularizer;
use crate::oracles::ExactOracle;
use crate::scalar::{lit, wide, Scalar};
use crate::solvers::{self, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Quadratic,
    Lasso,
    Svm,
}

impl ProblemKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProblemKind::Quadratic => "quadratic",
            ProblemKind::Lasso => "lasso",
            ProblemKind::Svm => "svm",
        }
    }
}

/// The smooth part `ℓ`.
#[derive(Debug, Clone, PartialEq)]
pub enum SmoothPart<T> {
    /// `½‖Ax − b‖²`
    LeastSquares { a: DenseMatrix<T>, b: Vec<T> },
    /// `C·Σᵢ max(0, 1 − yᵢ⟨xᵢ, w⟩)²`
    SquaredHinge {
        features: DenseMatrix<T>,
        labels: Vec<T>,
        c: T,
    },
}

impl<T: Scalar> SmoothPart<T> {
    pub fn dimension(&self) -> usize {
        match self {
            SmoothPart::LeastSquares { a, .. } => a.cols(),
            SmoothPart::SquaredHinge { features, .. } => features.cols(),
        }
    }

    pub fn value(&self, x: &[T]) -> T {
        match self {
            SmoothPart::LeastSquares { a, b } => {
                let r = a.matvec(x);
                lit::<T>(0.5)
                    * r.iter()
                        .zip(b)
                        .map(|(&ri, &bi)| (ri - bi) * (ri - bi))
                        .sum::<T>()
            }
            SmoothPart::SquaredHinge {
                features,
                labels,
                c,
            } => {
                *c * labels
                    .iter()
                    .enumerate()
                    .map(|(i, &y)| {
                        let slack = (T::one() - y * dot(features.row(i), x)).max(T::zero());
                        slack * slack
                    })
                    .sum::<T>()
            }
        }
    }

    pub fn gradient(&self, x: &[T]) -> Vec<T> {
        match self {
            SmoothPart::LeastSquares { a, b } => {
                let r: Vec<T> = a.matvec(x).iter().zip(b).map(|(&ri, &bi)| ri - bi).collect();
                a.t_matvec(&r)
            }
            SmoothPart::SquaredHinge {
                features,
                labels,
                c,
            } => {
                let weights: Vec<T> = labels
                    .iter()
                    .enumerate()
                    .map(|(i, &y)| {
                        let slack = (T::one() - y * dot(features.row(i), x)).max(T::zero());
                        -lit::<T>(2.0) * *c * slack * y
                    })
                    .collect();
                features.t_matvec(&weights)
            }
        }
    }
}

/// Best-known optimum attached to a problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reference<T> {
    pub p_star: T,
    pub x_star: Vec<T>,
    /// Solver iterations that produced the reference (0 for closed forms).
    pub budget: usize,
}

/// `min ℓ(x) + r(x)` with its curvature constants.
#[derive(Debug, Clone)]
pub struct CompositeProblem<T> {
    kind: ProblemKind,
    smooth: SmoothPart<T>,
    regularizer: Regularizer<T>,
    lipschitz: T,
    strong_convexity: T,
    reference: Option<Reference<T>>,
}

impl<T: Scalar> CompositeProblem<T> {
    /// Assembles a problem from parts; constants are validated but not recomputed.
    pub fn from_parts(
        kind: ProblemKind,
        smooth: SmoothPart<T>,
        regularizer: Regularizer<T>,
        lipschitz: T,
        strong_convexity: T,
    ) -> Result<Self> {
        if !(lipschitz > T::zero()) || !lipschitz.is_finite() {
            return Err(invalid("Lipschitz constant must be positive and finite"));
        }
        if !(strong_convexity >= T::zero()) || strong_convexity > lipschitz {
            return Err(invalid("strong convexity modulus must lie in [0, L]"));
        }
        Ok(Self {
            kind,
            smooth,
            regularizer,
            lipschitz,
            strong_convexity,
            reference: None,
        })
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn dimension(&self) -> usize {
        self.smooth.dimension()
    }

    pub fn smooth(&self) -> &SmoothPart<T> {
        &self.smooth
    }

    pub fn smooth_value(&self, x: &[T]) -> T {
        self.smooth.value(x)
    }

    pub fn smooth_gradient(&self, x: &[T]) -> Vec<T> {
        self.smooth.gradient(x)
    }

    pub fn nonsmooth_value(&self, x: &[T]) -> T {
        self.regularizer.value(x)
    }

    pub fn objective(&self, x: &[T]) -> T {
        self.smooth_value(x) + self.nonsmooth_value(x)
    }

    pub fn regularizer(&self) -> Regularizer<T> {
        self.regularizer
    }

    pub fn lipschitz(&self) -> T {
        self.lipschitz
    }

    pub fn strong_convexity(&self) -> T {
        self.strong_convexity
    }

    pub fn reference(&self) -> Option<&Reference<T>> {
        self.reference.as_ref()
    }

    pub fn p_star(&self) -> Option<T> {
        self.reference.as_ref().map(|r| r.p_star)
    }

    pub fn x_star(&self) -> Option<&[T]> {
        self.reference.as_ref().map(|r| r.x_star.as_slice())
    }

    /// Attaches a reference optimum after checking `ℓ(x*) + r(x*) = p*`.
    pub fn with_reference(mut self, reference: Reference<T>) -> Result<Self> {
        if reference.x_star.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: reference.x_star.len(),
            });
        }
        let f = self.objective(&reference.x_star);
        let scale = reference.p_star.abs().max(T::one());
        if (f - reference.p_star).abs() > lit::<T>(1e-10) * scale {
            return Err(invalid(format!(
                "reference p* = {} does not match objective at x* = {}",
                reference.p_star, f
            )));
        }
        self.reference = Some(reference);
        Ok(self)
    }

    /// Runs [`reference_optimum`] and stores the result.
    pub fn attach_reference(&mut self, budget: usize) -> Result<&Reference<T>> {
        let r = reference_optimum(self, budget)?;
        self.reference = Some(r);
        Ok(self.reference.as_ref().expect("just stored"))
    }

    pub fn summary(&self, seed: Option<u64>) -> ProblemSummary {
        let (rows, cols) = match &self.smooth {
            SmoothPart::LeastSquares { a, .. } => (a.rows(), a.cols()),
            SmoothPart::SquaredHinge { features, .. } => (features.rows(), features.cols()),
        };
        let lambda = match self.regularizer {
            Regularizer::L1 { lambda } | Regularizer::SquaredL2 { lambda }
                if self.kind != ProblemKind::Svm =>
            {
                Some(wide(lambda))
            }
            _ => None,
        };
        let c = match &self.smooth {
            SmoothPart::SquaredHinge { c, .. } => Some(wide(*c)),
            _ => None,
        };
        ProblemSummary {
            kind: self.kind,
            seed,
            dims: [rows, cols],
            lambda,
            c,
            lipschitz: wide(self.lipschitz),
            mu: wide(self.strong_convexity),
            p_star: self.p_star().map(wide),
            budget_used: self.reference.as_ref().map(|r| r.budget),
        }
    }
}

/// JSON description of a problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSummary {
    pub kind: ProblemKind,
    pub seed: Option<u64>,
    pub dims: [usize; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(rename = "C", skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(rename = "L")]
    pub lipschitz: f64,
    pub mu: f64,
    pub p_star: Option<f64>,
    pub budget_used: Option<usize>,
}

/// Extreme eigenvalues of `AᵀA`, with the smallest reported as 0 when `A`
/// lacks full column rank.
fn curvature_bounds<T: Scalar>(a: &DenseMatrix<T>) -> (T, T) {
    let eig = symmetric_eigenvalues(&a.gram());
    let max = *eig.last().expect("nonempty spectrum");
    let min = eig[0];
    let rank_tol = lit::<T>(10.0) * T::from_usize(a.cols()).unwrap() * T::epsilon() * max;
    let mu = if a.rows() >= a.cols() && min > rank_tol {
        min
    } else {
        T::zero()
    };
    (max, mu)
}

/// `ℓ(x) = ½‖Ax − b‖²`, `r ≡ 0`.
pub fn make_quadratic<T: Scalar>(a: DenseMatrix<T>, b: Vec<T>) -> Result<CompositeProblem<T>> {
    least_squares(ProblemKind::Quadratic, a, b, Regularizer::Zero)
}

/// `ℓ(x) = ½‖Ax − b‖²`, `r(x) = λ‖x‖₁`.
pub fn make_lasso<T: Scalar>(
    a: DenseMatrix<T>,
    b: Vec<T>,
    lambda: T,
) -> Result<CompositeProblem<T>> {
    let reg = Regularizer::l1(lambda)?;
    least_squares(ProblemKind::Lasso, a, b, reg)
}

fn least_squares<T: Scalar>(
    kind: ProblemKind,
    a: DenseMatrix<T>,
    b: Vec<T>,
    regularizer: Regularizer<T>,
) -> Result<CompositeProblem<T>> {
    if a.rows() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            got: b.len(),
        });
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(invalid("right-hand side must be finite"));
    }
    if a.is_zero() {
        return Err(Error::ZeroMatrix);
    }
    let (l, mu) = curvature_bounds(&a);
    CompositeProblem::from_parts(
        kind,
        SmoothPart::LeastSquares { a, b },
        regularizer,
        l,
        mu.min(l),
    )
}

/// Squared-hinge SVM: `ℓ(w) = C·Σ max(0, 1 − yᵢ⟨xᵢ,w⟩)²`, `r(w) = ½‖w‖²`.
///
/// `L = 2C·σ_max(X)²` bounds the curvature of the squared hinge from above.
pub fn make_svm<T: Scalar>(
    features: DenseMatrix<T>,
    labels: Vec<T>,
    c: T,
) -> Result<CompositeProblem<T>> {
    if features.rows() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: features.rows(),
            got: labels.len(),
        });
    }
    if labels.iter().any(|&y| y != T::one() && y != -T::one()) {
        return Err(invalid("SVM labels must be -1 or +1"));
    }
    if !(c > T::zero()) || !c.is_finite() {
        return Err(invalid("SVM weight C must be positive"));
    }
    if features.is_zero() {
        return Err(Error::ZeroMatrix);
    }
    let (smax2, _) = curvature_bounds(&features);
    let l = lit::<T>(2.0) * c * smax2;
    CompositeProblem::from_parts(
        ProblemKind::Svm,
        SmoothPart::SquaredHinge {
            features,
            labels,
            c,
        },
        Regularizer::squared_l2(lit(0.5))?,
        l,
        T::zero(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzEstimate<T> {
    pub value: T,
    pub iterations: usize,
    pub converged: bool,
}

/// `σ_max(A)²` by power iteration on `AᵀA`.
///
/// Stops once the Rayleigh quotient changes by less than 1e-8 relative
/// between sweeps; otherwise returns the last quotient with `converged = false`.
pub fn estimate_lipschitz<T: Scalar>(
    a: &DenseMatrix<T>,
    iterations: usize,
) -> Result<LipschitzEstimate<T>> {
    if iterations == 0 {
        return Err(invalid("power iteration needs at least one iteration"));
    }
    let n = a.cols();
    // deterministic start with no symmetry to align against an eigenvector
    let mut v: Vec<T> = (0..n)
        .map(|i| T::one() + lit::<T>(0.5) * (T::from_usize(i).unwrap() * lit(0.618_033_988_7)).sin())
        .collect();
    normalize(&mut v);
    let tol = lit::<T>(1e-8);
    let mut lambda = T::zero();
    for it in 1..=iterations {
        let w = a.t_matvec(&a.matvec(&v));
        let next = dot(&v, &w);
        let wn = crate::linalg::norm(&w);
        if wn.is_zero() {
            return Ok(LipschitzEstimate {
                value: T::zero(),
                iterations: it,
                converged: true,
            });
        }
        v = w.into_iter().map(|x| x / wn).collect();
        let done = it > 1 && (next - lambda).abs() <= tol * next.abs();
        lambda = next;
        if done {
            // one more Rayleigh quotient with the refined vector
            let w = a.t_matvec(&a.matvec(&v));
            return Ok(LipschitzEstimate {
                value: dot(&v, &w).max(lambda),
                iterations: it,
                converged: true,
            });
        }
    }
    Ok(LipschitzEstimate {
        value: lambda,
        iterations,
        converged: false,
    })
}

fn normalize<T: Scalar>(v: &mut [T]) {
    let n = crate::linalg::norm(v);
    for x in v.iter_mut() {
        *x = *x / n;
    }
}

/// Normal-equations optimum of an unregularized least-squares problem with
/// full column rank; `None` otherwise.
pub fn closed_form_reference<T: Scalar>(problem: &CompositeProblem<T>) -> Option<Reference<T>> {
    let SmoothPart::LeastSquares { a, b } = problem.smooth() else {
        return None;
    };
    if problem.regularizer() != Regularizer::Zero || problem.strong_convexity().is_zero() {
        return None;
    }
    let x_star = Cholesky::factor(&a.gram())?.solve(&a.t_matvec(b));
    Some(Reference {
        p_star: problem.objective(&x_star),
        x_star,
        budget: 0,
    })
}

/// Number of strictly increasing objective steps that flags a bad `L`.
pub const PERSISTENT_INCREASE: usize = 100;

/// Best objective and iterate of an exact-oracle accelerated run (with
/// function-value restart) from `x₀ = 0`.
pub fn reference_optimum<T: Scalar>(
    problem: &CompositeProblem<T>,
    budget: usize,
) -> Result<Reference<T>> {
    if budget == 0 {
        return Err(invalid("reference budget must be at least 1"));
    }
    // function-value restart keeps exact-oracle descent monotone up to restarts,
    // so a long run of increases can only come from a bad step size
    let mut cfg = SolverConfig::new(budget);
    cfg.restart = true;
    let x0 = vec![T::zero(); problem.dimension()];
    let mut best_f = problem.objective(&x0);
    let mut best_x = x0;
    let mut prev = best_f;
    let mut increases = 0usize;
    let mut failure = None;
    let outcome = solvers::accelerated_iterates(problem, &cfg, &mut ExactOracle, |step| {
        let f = step.objective;
        if f < best_f {
            best_f = f;
            best_x.copy_from_slice(step.x);
        }
        let slack = lit::<T>(1e-14) * prev.abs().max(T::one());
        if f > prev + slack {
            increases += 1;
        } else {
            increases = 0;
        }
        prev = f;
        if increases > PERSISTENT_INCREASE {
            failure = Some(Error::MisspecifiedLipschitz(increases));
            return false;
        }
        true
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    if outcome.diverged {
        return Err(Error::MisspecifiedLipschitz(increases));
    }
    Ok(Reference {
        p_star: best_f,
        x_star: best_x,
        budget,
    })
}

/// Gaussian matrix with `N(0, 1/rows)` entries.
pub fn gaussian_matrix<T: Scalar>(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Result<DenseMatrix<T>> {
    let s = 1.0 / (rows as f64).sqrt();
    let entries = (0..rows * cols)
        .map(|_| lit::<T>(s * rng.sample::<f64, _>(StandardNormal)))
        .collect();
    DenseMatrix::new(rows, cols, entries)
}

/// Seeded sparse-recovery LASSO: Gaussian design, `sparsity` planted
/// coefficients of unit scale, additive noise of standard deviation `noise`.
pub fn planted_lasso<T: Scalar>(
    rows: usize,
    cols: usize,
    sparsity: usize,
    noise: f64,
    lambda: T,
    seed: u64,
) -> Result<CompositeProblem<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = gaussian_matrix::<T>(rows, cols, &mut rng)?;
    planted_lasso_with(a, sparsity, noise, lambda, &mut rng)
}

/// As [`planted_lasso`] on a caller-supplied design.
pub fn planted_lasso_on<T: Scalar>(
    a: DenseMatrix<T>,
    sparsity: usize,
    noise: f64,
    lambda: T,
    seed: u64,
) -> Result<CompositeProblem<T>> {
    planted_lasso_with(a, sparsity, noise, lambda, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn planted_lasso_with<T: Scalar>(
    a: DenseMatrix<T>,
    sparsity: usize,
    noise: f64,
    lambda: T,
    rng: &mut ChaCha8Rng,
) -> Result<CompositeProblem<T>> {
    if sparsity > a.cols() {
        return Err(invalid("sparsity exceeds dimension"));
    }
    let mut truth = vec![T::zero(); a.cols()];
    for slot in truth.iter_mut().take(sparsity) {
        let mag: f64 = rng.random_range(0.5..1.5);
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        *slot = lit(sign * mag);
    }
    let b = planted_rhs(&a, &truth, noise, rng);
    make_lasso(a, b, lambda)
}

/// Seeded least-squares instance `A x_true + noise`.
pub fn planted_quadratic<T: Scalar>(a: DenseMatrix<T>, noise: f64, seed: u64) -> Result<CompositeProblem<T>> {
    planted_quadratic_with(a, noise, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Gaussian design followed by [`planted_quadratic`] on the same stream.
pub fn planted_gaussian_quadratic<T: Scalar>(
    rows: usize,
    cols: usize,
    noise: f64,
    seed: u64,
) -> Result<CompositeProblem<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = gaussian_matrix::<T>(rows, cols, &mut rng)?;
    planted_quadratic_with(a, noise, &mut rng)
}

fn planted_quadratic_with<T: Scalar>(
    a: DenseMatrix<T>,
    noise: f64,
    rng: &mut ChaCha8Rng,
) -> Result<CompositeProblem<T>> {
    let truth: Vec<T> = (0..a.cols())
        .map(|_| lit(rng.sample::<f64, _>(StandardNormal)))
        .collect();
    let b = planted_rhs(&a, &truth, noise, rng);
    make_quadratic(a, b)
}

fn planted_rhs<T: Scalar>(a: &DenseMatrix<T>, truth: &[T], noise: f64, rng: &mut ChaCha8Rng) -> Vec<T> {
    a.matvec(truth)
        .into_iter()
        .map(|v| v + lit(noise * rng.sample::<f64, _>(StandardNormal)))
        .collect()
}

/// Two Gaussian classes separated along a random direction.
pub fn random_svm<T: Scalar>(samples: usize, features: usize, c: T, seed: u64) -> Result<CompositeProblem<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = gaussian_matrix::<T>(samples, features, &mut rng)?;
    let w: Vec<T> = (0..features)
        .map(|_| lit(rng.sample::<f64, _>(StandardNormal)))
        .collect();
    let labels = (0..samples)
        .map(|i| {
            let m = dot(x.row(i), &w) + lit(0.1 * rng.sample::<f64, _>(StandardNormal));
            if m >= T::zero() {
                T::one()
            } else {
                -T::one()
            }
        })
        .collect();
    make_svm(x, labels, c)
}
