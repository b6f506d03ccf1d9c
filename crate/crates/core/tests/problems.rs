use approx::assert_relative_eq;
use proptest::prelude::*;
use proxlab::linalg::{dot, norm, DenseMatrix};
use proxlab::problems::{
    closed_form_reference, estimate_lipschitz, make_lasso, make_quadratic, make_svm, planted_gaussian_quadratic,
    planted_lasso, random_svm, reference_optimum,
};
use proxlab::prox::soft_threshold;
use proxlab::{Matrix, Problem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn rayleigh(a: &Matrix, v: &[f64]) -> f64 {
    let av = a.matvec(v);
    dot(&av, &av) / dot(v, v)
}

/// Largest `‖Av‖²/‖v‖²` over random unit vectors.
fn sampled_spectral_norm2(a: &Matrix, samples: usize, seed: u64) -> (f64, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = (0.0, vec![0.0; a.cols()]);
    for _ in 0..samples {
        let v = random_vec(a.cols(), &mut rng);
        let q = rayleigh(a, &v);
        if q > best.0 {
            best = (q, v);
        }
    }
    best
}

/// Sampling followed by random-perturbation hill climbing; never uses a
/// matrix-vector power recursion.
fn climbed_spectral_norm2(a: &Matrix, samples: usize, seed: u64) -> f64 {
    let (mut best, mut v) = sampled_spectral_norm2(a, samples, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut radius = 0.5;
    while radius > 1e-9 {
        let mut improved = false;
        for _ in 0..200 {
            let d = random_vec(a.cols(), &mut rng);
            let scale = radius * norm(&v) / norm(&d);
            let cand: Vec<f64> = v.iter().zip(&d).map(|(x, y)| x + scale * y).collect();
            let q = rayleigh(a, &cand);
            if q > best {
                best = q;
                v = cand;
                improved = true;
            }
        }
        if !improved {
            radius *= 0.5;
        }
    }
    best
}

fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    while hi - lo > 1e-12 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if f(a) < f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    let w = 0.5 * (lo + hi);
    (w, f(w))
}

/// Cyclic coordinate descent for `½‖Ax−b‖² + λ‖x‖₁`.
fn lasso_coordinate_descent(a: &Matrix, b: &[f64], lambda: f64, sweeps: usize) -> Vec<f64> {
    let n = a.cols();
    let col_sq: Vec<f64> = (0..n)
        .map(|j| (0..a.rows()).map(|i| a.get(i, j).powi(2)).sum())
        .collect();
    let mut x = vec![0.0; n];
    let mut resid: Vec<f64> = b.to_vec();
    for _ in 0..sweeps {
        for j in 0..n {
            if col_sq[j] == 0.0 {
                continue;
            }
            let rho: f64 = (0..a.rows()).map(|i| a.get(i, j) * resid[i]).sum::<f64>() + col_sq[j] * x[j];
            let new = soft_threshold(rho, lambda) / col_sq[j];
            let delta = new - x[j];
            if delta != 0.0 {
                for (i, r) in resid.iter_mut().enumerate() {
                    *r -= a.get(i, j) * delta;
                }
                x[j] = new;
            }
        }
    }
    x
}

fn generators() -> Vec<(&'static str, Problem)> {
    vec![
        ("quadratic", planted_gaussian_quadratic(30, 10, 0.1, 3).unwrap()),
        ("lasso", planted_lasso(20, 50, 5, 0.05, 0.1, 4).unwrap()),
        ("svm", random_svm(40, 8, 0.5, 5).unwrap()),
    ]
}

#[test]
fn two_by_two_lipschitz_matches_randomized_spectral_norm() {
    let a = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
    let p = make_quadratic(a.clone(), vec![1.0, 1.0]).unwrap();
    let (sampled, _) = sampled_spectral_norm2(&a, 10_000, 1);
    assert!(p.lipschitz() >= sampled * (1.0 - 1e-12));
    assert_relative_eq!(p.lipschitz(), sampled, max_relative = 1e-4);
    assert_relative_eq!(p.lipschitz(), (3.0 + 5f64.sqrt()) / 2.0, max_relative = 1e-12);
}

#[test]
fn lasso_constants_follow_the_quadratic() {
    let a = DenseMatrix::diag(&[2.0, 1.0]).unwrap();
    let q = make_quadratic(a.clone(), vec![2.0, 1.0]).unwrap();
    let l = make_lasso(a, vec![2.0, 1.0], 0.5).unwrap();
    assert_eq!(q.lipschitz(), l.lipschitz());
    assert_eq!(q.strong_convexity(), l.strong_convexity());
    assert_eq!(l.nonsmooth_value(&[1.0, -2.0]), 1.5);
}

#[test]
fn lasso_at_zero_data_is_the_origin() {
    let p = make_lasso(DenseMatrix::identity(1), vec![0.0], 1.0).unwrap();
    let r = reference_optimum(&p, 10).unwrap();
    assert_eq!(r.x_star, vec![0.0]);
    assert_eq!(r.p_star, 0.0);
}

#[test]
fn separable_lasso_reference_matches_soft_threshold() {
    let b = [3.0, 0.5];
    let p = make_lasso(DenseMatrix::identity(2), b.to_vec(), 1.0).unwrap();
    let x: Vec<f64> = b.iter().map(|&v| soft_threshold(v, 1.0)).collect();
    assert_eq!(x, vec![2.0, 0.0]);
    let closed = 0.5 * ((x[0] - b[0]).powi(2) + (x[1] - b[1]).powi(2)) + x[0].abs() + x[1].abs();
    assert_eq!(closed, 2.625);
    let r = reference_optimum(&p, 100).unwrap();
    assert!((r.p_star - closed).abs() <= 1e-9);
    assert!((r.x_star[0] - 2.0).abs() < 1e-9 && r.x_star[1].abs() < 1e-9);
}

#[test]
fn random_lasso_reference_agrees_with_coordinate_descent() {
    let p = planted_lasso(20, 50, 5, 0.05, 0.1, 42).unwrap();
    let proxlab::problems::SmoothPart::LeastSquares { a, b } = p.smooth() else {
        panic!("lasso has a least-squares part");
    };
    let x_cd = lasso_coordinate_descent(a, b, 0.1, 20_000);
    let p_cd = p.objective(&x_cd);
    let r = reference_optimum(&p, 100_000).unwrap();
    assert!((r.p_star - p_cd).abs() <= 1e-9 * p_cd.abs().max(1.0), "{} vs {}", r.p_star, p_cd);
}

#[test]
fn svm_two_point_optimum_matches_golden_section() {
    let x = DenseMatrix::from_rows(&[vec![2.0], vec![-2.0]]).unwrap();
    let p = make_svm(x, vec![1.0, -1.0], 1.0).unwrap();
    let f = |w: f64| p.objective(&[w]);
    // coarse grid brackets the minimizer, golden section refines it
    let grid: Vec<f64> = (0..=400).map(|i| -2.0 + 0.01 * i as f64).collect();
    let i = (0..grid.len())
        .min_by(|&i, &j| f(grid[i]).partial_cmp(&f(grid[j])).unwrap())
        .unwrap();
    let (w, fmin) = golden_section(f, grid[i.saturating_sub(1)], grid[(i + 1).min(grid.len() - 1)]);
    assert_relative_eq!(w, 8.0 / 17.0, epsilon = 1e-6);
    let r = reference_optimum(&p, 2000).unwrap();
    assert!((r.p_star - fmin).abs() < 1e-10, "{} vs {}", r.p_star, fmin);
    assert_relative_eq!(r.p_star, 2.0 / 17.0, max_relative = 1e-10);
}

#[test]
fn svm_lipschitz_bounds_the_curvature() {
    let p = random_svm(30, 5, 2.0, 9).unwrap();
    let proxlab::problems::SmoothPart::SquaredHinge { features, .. } = p.smooth() else {
        panic!("svm has a squared-hinge part");
    };
    let smax2 = climbed_spectral_norm2(features, 2000, 2);
    assert!(p.lipschitz() >= 2.0 * 2.0 * smax2 * (1.0 - 1e-9));
    assert_eq!(p.strong_convexity(), 0.0);
}

#[test]
fn power_iteration_matches_randomized_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let a = proxlab::problems::gaussian_matrix::<f64>(10, 10, &mut rng).unwrap();
    let est = estimate_lipschitz(&a, 10_000).unwrap();
    assert!(est.converged);
    let (sampled, _) = sampled_spectral_norm2(&a, 100_000, 11);
    assert!(est.value >= sampled * (1.0 - 1e-6), "{} < {}", est.value, sampled);
    // plain sampling in 10 dimensions stops well short of the top; the climb closes it
    let climbed = climbed_spectral_norm2(&a, 100_000, 11);
    assert!(est.value >= climbed * (1.0 - 1e-6));
    assert!(est.value <= climbed * 1.001, "{} vs {}", est.value, climbed);
}

#[test]
fn reference_is_monotone_in_budget() {
    for (name, p) in generators() {
        for budget in [5usize, 50, 500] {
            let short = reference_optimum(&p, budget).unwrap().p_star;
            let long = reference_optimum(&p, 2 * budget).unwrap().p_star;
            assert!(long <= short + 1e-12, "{name}: budget {budget}: {long} > {short}");
        }
    }
}

#[test]
fn closed_form_reference_solves_full_rank_least_squares() {
    let p = make_quadratic(DenseMatrix::diag(&[2.0, 1.0]).unwrap(), vec![2.0, 1.0]).unwrap();
    let r = closed_form_reference(&p).unwrap();
    assert_eq!(r.budget, 0);
    assert_relative_eq!(r.x_star[0], 1.0, epsilon = 1e-14);
    assert_relative_eq!(r.x_star[1], 1.0, epsilon = 1e-14);
    let lasso = make_lasso(DenseMatrix::identity(2), vec![1.0, 1.0], 1.0).unwrap();
    assert!(closed_form_reference(&lasso).is_none());
    let wide = make_quadratic(DenseMatrix::from_rows(&[vec![1.0, 2.0]]).unwrap(), vec![1.0]).unwrap();
    assert!(closed_form_reference(&wide).is_none());
}

#[test]
fn gradients_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for (name, p) in generators() {
        for _ in 0..20 {
            let x = random_vec(p.dimension(), &mut rng);
            let g = p.smooth_gradient(&x);
            let h = 1e-5;
            let fd: Vec<f64> = (0..x.len())
                .map(|i| {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[i] += h;
                    xm[i] -= h;
                    (p.smooth_value(&xp) - p.smooth_value(&xm)) / (2.0 * h)
                })
                .collect();
            let diff: Vec<f64> = g.iter().zip(&fd).map(|(a, b)| a - b).collect();
            assert!(norm(&diff) <= 1e-5 * norm(&g).max(1.0), "{name}: {:?} vs {:?}", g, fd);
        }
    }
}

#[test]
fn gradient_lipschitz_and_strong_convexity_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for (name, p) in generators() {
        let (l, mu) = (p.lipschitz(), p.strong_convexity());
        assert!(l > 0.0 && mu >= 0.0 && mu <= l, "{name}");
        for _ in 0..100 {
            let x = random_vec(p.dimension(), &mut rng);
            let y = random_vec(p.dimension(), &mut rng);
            let d: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
            let gx = p.smooth_gradient(&x);
            let gy = p.smooth_gradient(&y);
            let dg: Vec<f64> = gy.iter().zip(&gx).map(|(a, b)| a - b).collect();
            assert!(norm(&dg) <= l * norm(&d) * (1.0 + 1e-9), "{name}: Lipschitz bound");
            let lower = p.smooth_value(&x) + dot(&gx, &d) + 0.5 * mu * dot(&d, &d);
            assert!(p.smooth_value(&y) >= lower - 1e-9 * lower.abs().max(1.0), "{name}: strong convexity");
        }
    }
}

#[test]
fn summary_reports_constants_and_budget() {
    let mut p = planted_lasso(20, 50, 5, 0.05, 0.1, 4).unwrap();
    p.attach_reference(200).unwrap();
    let s = serde_json::to_value(p.summary(Some(4))).unwrap();
    for key in ["kind", "seed", "dims", "lambda", "L", "mu", "p_star", "budget_used"] {
        assert!(s.get(key).is_some(), "missing {key} in {s}");
    }
    assert_eq!(s["budget_used"], 200);
    assert_eq!(s["kind"], "lasso");
}

fn diag_problem() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..6).prop_flat_map(|n| {
        (
            proptest::collection::vec(0.1f64..5.0, n),
            proptest::collection::vec(-5.0f64..5.0, n),
        )
    })
}

proptest! {
    #[test]
    fn diagonal_constants_are_extreme_squares((d, b) in diag_problem()) {
        let p = make_quadratic(DenseMatrix::diag(&d).unwrap(), b).unwrap();
        let max = d.iter().cloned().fold(f64::MIN, f64::max);
        let min = d.iter().cloned().fold(f64::MAX, f64::min);
        prop_assert!((p.lipschitz() - max * max).abs() <= 1e-12 * max * max);
        prop_assert!((p.strong_convexity() - min * min).abs() <= 1e-12 * max * max);
    }

    #[test]
    fn separable_lasso_closed_form((d, b) in diag_problem(), lambda in 0.01f64..3.0) {
        // per coordinate: argmin ½(d y − b)² + λ|y| = soft(d b, λ)/d²
        let p = make_lasso(DenseMatrix::diag(&d).unwrap(), b.clone(), lambda).unwrap();
        let x: Vec<f64> = d.iter().zip(&b).map(|(&di, &bi)| soft_threshold(di * bi, lambda) / (di * di)).collect();
        let r = reference_optimum(&p, 3000).unwrap();
        prop_assert!((r.p_star - p.objective(&x)).abs() <= 1e-9 * p.objective(&x).abs().max(1.0));
    }
}
