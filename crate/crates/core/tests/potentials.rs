use std::sync::Arc;

use lmc_core::numerics::linalg::max_abs_diff;
use lmc_core::potentials::*;
use lmc_core::prox::ShiftedL1;
use lmc_core::{NoiseSource, Prng};

fn fd_check(u: &dyn Potential, points: &[Vec<f64>], tol: f64) {
    for x in points {
        let an = u.gradient(x);
        for i in 0..x.len() {
            let h = 1e-5;
            let mut a = x.clone();
            let mut b = x.clone();
            a[i] += h;
            b[i] -= h;
            let fd = (u.value(&a) - u.value(&b)) / (2.0 * h);
            let rel = (fd - an[i]).abs() / fd.abs().max(an[i].abs()).max(1.0);
            assert!(rel < tol, "x={x:?} i={i}: fd {fd} vs {}", an[i]);
        }
    }
}

fn probe_points(seed: u64, n: usize, spread: f64) -> Vec<Vec<f64>> {
    let mut rng = Prng::new(seed, 0);
    (0..n).map(|_| rng.standard_normal(2).iter().map(|v| spread * v).collect()).collect()
}

#[test]
fn mixture_parameters_are_verbatim() {
    assert_eq!(PAPER_MEANS, [[0.0, 0.0], [-2.0, 3.0], [2.0, -3.0], [3.0, 3.0], [-2.0, -2.0]]);
    assert_eq!(paper_component_indices(1).unwrap(), vec![0]);
    assert_eq!(paper_component_indices(4).unwrap(), vec![1, 2, 3, 4]);
    assert_eq!(paper_component_indices(5).unwrap(), vec![0, 1, 2, 3, 4]);
    assert!(paper_component_indices(0).is_err());
    assert!(paper_component_indices(6).is_err());
}

#[test]
fn gaussian_mixture_gradients_and_hessians() {
    for k in [1, 3, 5] {
        let gm = paper_gaussian_mixture(k).unwrap();
        let pts = probe_points(k as u64, 20, 2.5);
        fd_check(&gm, &pts, 1e-6);
        for x in &pts {
            let h = gm.hessian(x).unwrap();
            for j in 0..2 {
                let e = 1e-5;
                let mut a = x.clone();
                let mut b = x.clone();
                a[j] += e;
                b[j] -= e;
                let (ga, gb) = (gm.gradient(&a), gm.gradient(&b));
                for i in 0..2 {
                    let fd = (ga[i] - gb[i]) / (2.0 * e);
                    assert!((fd - h[(i, j)]).abs() < 1e-5 * fd.abs().max(1.0));
                }
            }
        }
    }
}

#[test]
fn gaussian_mixture_far_field_is_finite() {
    let gm = paper_gaussian_mixture(5).unwrap();
    for x in [[10.0, 10.0], [-40.0, 25.0], [300.0, -300.0]] {
        assert!(gm.value(&x).is_finite());
        assert!(gm.gradient(&x).iter().all(|v| v.is_finite()));
        let r = gm.responsibilities(&x);
        assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn gaussian_mixture_integrates_to_one() {
    let gm = paper_gaussian_mixture(5).unwrap();
    let n = 401;
    let h = 20.0 / (n - 1) as f64;
    let mut total = 0.0;
    for a in 0..n {
        for b in 0..n {
            let wa = if a == 0 || a == n - 1 { 0.5 } else { 1.0 };
            let wb = if b == 0 || b == n - 1 { 0.5 } else { 1.0 };
            total += wa * wb * gm.density(&[-10.0 + a as f64 * h, -10.0 + b as f64 * h]);
        }
    }
    assert!((total * h * h - 1.0).abs() < 1e-3, "{}", total * h * h);
}

#[test]
fn log_sum_exp_agrees_with_naive_path() {
    let mut rng = Prng::new(3, 0);
    for _ in 0..200 {
        let a: Vec<f64> = rng.standard_normal(5).iter().map(|v| 20.0 * v).collect();
        let naive = a.iter().map(|v| v.exp()).sum::<f64>().ln();
        if naive.is_finite() && naive > f64::MIN_POSITIVE.ln() {
            assert!((log_sum_exp(&a) - naive).abs() < 1e-12 * naive.abs().max(1.0));
        }
    }
    assert!(log_sum_exp(&[-2000.0, -2001.0]).is_finite());
    let s = softmax(&[1000.0, 1000.0]);
    assert_eq!(s, vec![0.5, 0.5]);
}

#[test]
fn smoothed_laplacian_gradients() {
    for lam in [0.1, 0.5, 1.0] {
        for k in [1, 3, 5] {
            let lm = paper_laplacian_mixture(k, 0.5, lam).unwrap();
            fd_check(&lm, &probe_points(10 + k as u64, 20, 3.0), 1e-6);
        }
    }
}

#[test]
fn laplacian_surrogate_converges_linearly() {
    let lm = paper_laplacian_mixture(3, 0.5, 0.0).unwrap();
    let pts = probe_points(20, 50, 3.0);
    let lams = [1.0, 0.5, 0.25, 0.1, 0.01];
    let mut worst_c: f64 = 0.0;
    for x in &pts {
        let mut prev = f64::INFINITY;
        for &lam in &lams {
            let gap = (lm.with_smoothing(lam).unwrap().value(x) - lm.value(x)).abs();
            assert!(gap <= prev + 1e-15);
            prev = gap;
            worst_c = worst_c.max(gap / lam);
        }
    }
    // each envelope sits below its ℓ1 term by at most dλα²/2
    assert!(worst_c <= 2.0 * 0.25 / 2.0 + 1e-12, "{worst_c}");
}

#[test]
fn composite_smoothing_gradient() {
    let g = Arc::new(ShiftedL1::centered(2, 0.15).unwrap());
    for k in [1, 3, 5] {
        let cp = CompositePotential::new(Arc::new(paper_gaussian_mixture(k).unwrap()), g.clone()).unwrap();
        for lam in [0.25, 0.5, 1.0] {
            let s = SmoothedComposite::new(cp.clone(), lam).unwrap();
            fd_check(&s, &probe_points(30 + k as u64, 20, 2.0), 1e-6);
        }
    }
}

#[test]
fn composite_rejects_wrong_gradient() {
    struct Wrong;
    impl Potential for Wrong {
        fn dim(&self) -> usize {
            2
        }
        fn value(&self, x: &[f64]) -> f64 {
            x[0] * x[0]
        }
        fn gradient(&self, x: &[f64]) -> Vec<f64> {
            vec![x[0], 0.0]
        }
    }
    let g = Arc::new(ShiftedL1::centered(2, 0.15).unwrap());
    assert!(CompositePotential::new(Arc::new(Wrong), g).is_err());
}

#[test]
fn finite_sum_batch_estimates() {
    let data = BayesianLinearRegression::synthetic(10, 4).unwrap();
    let x = [0.3, -0.8];
    let full = full_gradient(&data, &x);
    let every: Vec<usize> = (0..10).collect();
    assert_eq!(stochastic_gradient(&data, &x, &every).unwrap(), full);
    let mut mean = [0.0; 2];
    for i in 0..10 {
        let g = stochastic_gradient(&data, &x, &[i]).unwrap();
        mean[0] += g[0] / 10.0;
        mean[1] += g[1] / 10.0;
    }
    assert!(max_abs_diff(&mean, &full) < 1e-12);
    assert!(stochastic_gradient(&data, &x, &[]).is_err());
    assert!(stochastic_gradient(&data, &x, &[10]).is_err());

    let small = BayesianLinearRegression::synthetic(6, 5).unwrap();
    let full = full_gradient(&small, &x);
    let mut mean = [0.0; 2];
    let mut count = 0.0;
    for i in 0..6 {
        for j in i + 1..6 {
            let g = stochastic_gradient(&small, &x, &[i, j]).unwrap();
            mean[0] += g[0];
            mean[1] += g[1];
            count += 1.0;
        }
    }
    assert_eq!(count, 15.0);
    assert!(max_abs_diff(&[mean[0] / count, mean[1] / count], &full) < 1e-12);
}

#[test]
fn regression_potential_matches_gaussian_posterior() {
    let data = BayesianLinearRegression::synthetic(100, 6).unwrap();
    let u = FullData(data.clone());
    fd_check(&u, &probe_points(40, 20, 1.0), 1e-6);
    let m = data.posterior_mean().unwrap();
    assert!(u.gradient(&m).iter().all(|v| v.abs() < 1e-10));
    let p = data.posterior_precision().unwrap();
    let x = [m[0] + 0.3, m[1] - 0.2];
    let d = [0.3, -0.2];
    let quad = 0.5 * lmc_core::numerics::linalg::dot(&d, &p.mul_vec(&d));
    assert!((u.value(&x) - u.value(&m) - quad).abs() < 1e-9);
}
