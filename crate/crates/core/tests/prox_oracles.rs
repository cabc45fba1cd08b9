use std::sync::Arc;

use lmc_core::numerics::linalg::{dot, max_abs_diff, norm2};
use lmc_core::potentials::{paper_gaussian_mixture, CompositePotential, Potential, Quadratic, ZeroPotential};
use lmc_core::prox::*;
use lmc_core::{NoiseSource, Prng, SpdMatrix};

/// Golden-section search driven by the sign of `diff(c, d) = f(c) − f(d)`,
/// which callers evaluate without cancellation.
fn golden_min(diff: impl Fn(f64, f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let c = b - r * (b - a);
        let d = a + r * (b - a);
        if diff(c, d) < 0.0 {
            b = d;
        } else {
            a = c;
        }
    }
    0.5 * (a + b)
}

fn uniform_vec(rng: &mut Prng, d: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..d).map(|_| lo + (hi - lo) * rng.uniform01()).collect()
}

#[test]
fn l1_prox_matches_golden_section() {
    let mut rng = Prng::new(1, 0);
    for _ in 0..200 {
        let x = uniform_vec(&mut rng, 3, -4.0, 4.0);
        let mu = uniform_vec(&mut rng, 3, -1.0, 1.0);
        let lam = 0.05 + rng.uniform01();
        let a = 0.1 + rng.uniform01();
        let p = l1_prox(lam, &x, &mu, a);
        for i in 0..3 {
            let diff = |c: f64, d: f64| {
                let (sc, sd) = ((c - mu[i]).signum(), (d - mu[i]).signum());
                let abs_gap = if sc == sd { sc * (c - d) } else { (c - mu[i]).abs() - (d - mu[i]).abs() };
                a * abs_gap + (c - d) * (c + d - 2.0 * x[i]) / (2.0 * lam)
            };
            let y = golden_min(diff, -10.0, 10.0);
            assert!((p[i] - y).abs() < 1e-8, "{} vs {}", p[i], y);
        }
    }
    assert_eq!(l1_prox(1.0, &[0.2, -0.3], &[0.0, 0.0], 0.5), vec![0.0, 0.0]);
}

#[test]
fn moreau_envelope_invariants() {
    let g = ShiftedL1::new(vec![0.3, -0.2], 0.7).unwrap();
    let mut rng = Prng::new(2, 0);
    for _ in 0..200 {
        let x = uniform_vec(&mut rng, 2, -3.0, 3.0);
        let (l1, l2) = (0.1 + rng.uniform01(), 1.2 + rng.uniform01());
        assert!(g.moreau_env(l2, &x) <= g.moreau_env(l1, &x) + 1e-15);
        assert!(g.moreau_env(l1, &x) <= g.value(&x) + 1e-15);
        let p = g.prox(l1, &x);
        let r = norm2(&lmc_core::numerics::linalg::sub(&x, &p));
        assert!((g.moreau_env(l1, &x) - g.value(&p) - r * r / (2.0 * l1)).abs() < 1e-12);
        let back: Vec<f64> = g.moreau_grad(l1, &x).iter().zip(&p).map(|(a, b)| a * l1 + b).collect();
        assert!(max_abs_diff(&back, &x) < 1e-14);
    }
    let lin: f64 = 0.7 * (100.3 + 99.4) - 2.0 * 0.5 * 0.49 / 2.0;
    assert!((l1_moreau(0.5, &[100.6, -99.6], &g.center, 0.7) - lin).abs() < 1e-10);
}

#[test]
fn hyperbolic_entropy_basics() {
    let h = HyperbolicEntropy::new(vec![0.7, 0.3]).unwrap();
    assert!((h.value(&[0.0, 0.0]) + 1.0).abs() < 1e-15);
    assert_eq!(h.grad(&[0.0, 0.0]), vec![0.0, 0.0]);
    let mut rng = Prng::new(3, 0);
    for _ in 0..200 {
        let x = uniform_vec(&mut rng, 2, -10.0, 10.0);
        assert!(max_abs_diff(&h.conj_grad(&h.grad(&x)), &x) < 1e-10);
        let hd = h.hess(&x);
        for i in 0..2 {
            let e = 1e-5;
            let mut a = x.clone();
            let mut b = x.clone();
            a[i] += e;
            b[i] -= e;
            let fd = (h.grad(&a)[i] - h.grad(&b)[i]) / (2.0 * e);
            assert!((fd - hd[(i, i)]).abs() < 1e-6 * hd[(i, i)].abs());
        }
    }
    assert!(HyperbolicEntropy::new(vec![0.0, 1.0]).is_err());
}

#[test]
fn bregman_divergence_properties() {
    let x = [0.4, -1.2];
    let y = [2.0, 0.1];
    let e = bregman_div(&EuclideanMap, &x, &y);
    assert!((e - 0.5 * ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2))).abs() < 1e-14);
    let h = HyperbolicEntropy::new(vec![0.7, 0.3]).unwrap();
    assert_eq!(bregman_div(&h, &x, &x), 0.0);
    let mut rng = Prng::new(4, 0);
    for _ in 0..500 {
        let a = uniform_vec(&mut rng, 2, -5.0, 5.0);
        let b = uniform_vec(&mut rng, 2, -5.0, 5.0);
        let direct = h.value(&a) - h.value(&b) - dot(&h.grad(&b), &lmc_core::numerics::linalg::sub(&a, &b));
        let dv = bregman_div(&h, &a, &b);
        assert!(dv > 0.0);
        assert!((dv - direct.max(0.0)).abs() < 1e-10 * (1.0 + direct.abs()));
    }
}

#[test]
fn left_bregman_prox_oracles() {
    let beta = vec![0.8, 0.2];
    let psi = HyperbolicEntropy::new(beta.clone()).unwrap();
    let mut rng = Prng::new(5, 0);
    for _ in 0..300 {
        let mu = uniform_vec(&mut rng, 2, -1.0, 1.0);
        let g = ShiftedL1::new(mu.clone(), 0.15 + rng.uniform01()).unwrap();
        let x = uniform_vec(&mut rng, 2, -5.0, 5.0);
        let lam = 0.05 + rng.uniform01();
        assert_eq!(left_bregman_prox_l1(&psi, lam, &mu, &g), mu);
        let y = left_bregman_prox_l1(&psi, lam, &x, &g);
        for i in 0..2 {
            let gap = psi.dphi_1d(i, x[i]) - psi.dphi_1d(i, y[i]);
            if y[i] == mu[i] {
                assert!(gap.abs() <= lam * g.scale + 1e-10);
            } else {
                assert!((lam * g.scale * (y[i] - mu[i]).signum() - gap).abs() < 1e-10);
            }
        }
    }

    // large β: βψ_β ≈ ½‖·‖², and D_{βψ}/λ = D_ψ/(λ/β)
    let big = 1e4;
    let psi = HyperbolicEntropy::new(vec![big, big]).unwrap();
    let g = ShiftedL1::new(vec![0.1, -0.3], 0.5).unwrap();
    let x = [1.7, -2.4];
    let y = left_bregman_prox_l1(&psi, 0.8 / big, &x, &g);
    assert!(max_abs_diff(&y, &g.prox(0.8, &x)) < 1e-3);
}

#[test]
fn left_envelope_gradient() {
    let psi = HyperbolicEntropy::new(vec![0.8, 0.2]).unwrap();
    let g = ShiftedL1::new(vec![0.2, -0.1], 0.15).unwrap();
    assert_eq!(left_bregman_env_grad(&psi, 0.3, &g.center, &g), vec![0.0, 0.0]);
    let mut rng = Prng::new(6, 0);
    for _ in 0..50 {
        let x = uniform_vec(&mut rng, 2, -3.0, 3.0);
        let lam = 0.25;
        let an = left_bregman_env_grad(&psi, lam, &x, &g);
        for i in 0..2 {
            let h = 1e-5;
            let mut a = x.clone();
            let mut b = x.clone();
            a[i] += h;
            b[i] -= h;
            let env = |z: &[f64]| {
                let y = left_bregman_prox_l1(&psi, lam, z, &g);
                g.value(&y) + bregman_div(&psi, &y, z) / lam
            };
            let fd = (env(&a) - env(&b)) / (2.0 * h);
            assert!((fd - an[i]).abs() < 1e-6 * fd.abs().max(an[i].abs()).max(1.0), "{fd} {}", an[i]);
            assert!((env(&x) - left_bregman_env_value(&psi, lam, &x, &g)).abs() < 1e-14);
        }
    }
    let e = left_bregman_env_grad(&EuclideanMap, 0.4, &[1.0, -0.05], &g);
    assert!(max_abs_diff(&e, &g.moreau_grad(0.4, &[1.0, -0.05])) < 1e-15);
}

#[test]
fn right_bregman_prox_oracles() {
    let psi = HyperbolicEntropy::new(vec![0.8, 0.2]).unwrap();
    let mut rng = Prng::new(7, 0);
    for _ in 0..100 {
        let mu = uniform_vec(&mut rng, 2, -1.0, 1.0);
        let g = ShiftedL1::new(mu.clone(), 0.15 + rng.uniform01()).unwrap();
        let x = uniform_vec(&mut rng, 2, -4.0, 4.0);
        let lam = 0.05 + rng.uniform01();
        assert_eq!(right_bregman_prox_l1(&psi, lam, &mu, &g).unwrap(), mu);
        let y = right_bregman_prox_l1(&psi, lam, &x, &g).unwrap();
        for i in 0..2 {
            let obj = |t: f64| {
                let b = psi.phi_1d(i, x[i]) - psi.phi_1d(i, t) - psi.dphi_1d(i, t) * (x[i] - t);
                g.scale * (t - mu[i]).abs() + b / lam
            };
            let (lo, hi) = (x[i].min(mu[i]) - 1.0, x[i].max(mu[i]) + 1.0);
            let best = (0..1000).map(|k| obj(lo + (hi - lo) * k as f64 / 999.0)).fold(f64::INFINITY, f64::min);
            assert!(obj(y[i]) <= best + 1e-12, "{} > {}", obj(y[i]), best);
        }
        let eu = right_bregman_prox_l1(&EuclideanMap, lam, &x, &g).unwrap();
        assert!(max_abs_diff(&eu, &g.prox(lam, &x)) < 1e-10);
    }
}

#[test]
fn q_metric_prox_oracles() {
    let g = ShiftedL1::centered(2, 0.15).unwrap();
    let x = [0.8, -0.05];
    let r = q_metric_prox(&g, &SpdMatrix::identity(2), 0.3, &x).unwrap();
    assert!(max_abs_diff(&r.point, &g.prox(0.3, &x)) < 1e-9);
    let q = SpdMatrix::from_rows(&[vec![1.0, 0.1], vec![0.1, 1.5]]).unwrap();
    assert_eq!(q_metric_prox(&ZeroFn, &q, 0.3, &x).unwrap().point, x.to_vec());

    let qi = q.inverse();
    let mut rng = Prng::new(8, 0);
    for _ in 0..20 {
        let x = uniform_vec(&mut rng, 2, -1.0, 1.0);
        let lam = 0.05 + rng.uniform01();
        let res = q_metric_prox(&g, &q, lam, &x).unwrap();
        assert!(res.converged);
        let obj = |y: &[f64]| {
            let d = [y[0] - x[0], y[1] - x[1]];
            g.value(y) + dot(&d, &qi.mul_vec(&d)) / (2.0 * lam)
        };
        let mut best = f64::INFINITY;
        for a in 0..200 {
            for b in 0..200 {
                let y = [x[0] - 1.0 + a as f64 / 99.5, x[1] - 1.0 + b as f64 / 99.5];
                best = best.min(obj(&y));
            }
        }
        assert!(obj(&res.point) <= best + 1e-12);
    }
}

/// Chambolle's (non-accelerated) projected gradient on the TV dual.
fn tv_oracle(h: usize, w: usize, gamma: f64, b: &[f64], iters: usize) -> Vec<f64> {
    let n = h * w;
    let grad = |x: &[f64]| {
        let mut u = vec![0.0; 2 * n];
        for r in 0..h {
            for c in 0..w {
                let i = r * w + c;
                u[i] = x[r * w + (c + 1) % w] - x[i];
                u[n + i] = x[((r + 1) % h) * w + c] - x[i];
            }
        }
        u
    };
    let div = |u: &[f64]| {
        let mut x = vec![0.0; n];
        for r in 0..h {
            for c in 0..w {
                let i = r * w + c;
                x[i] = u[r * w + (c + w - 1) % w] - u[i] + u[n + ((r + h - 1) % h) * w + c] - u[n + i];
            }
        }
        x
    };
    let mut p = vec![0.0; 2 * n];
    let primal = |p: &[f64]| -> Vec<f64> { div(p).iter().zip(b).map(|(d, bi)| bi - gamma * d).collect() };
    for _ in 0..iters {
        let g = grad(&primal(&p));
        for i in 0..n {
            let (a, c) = (p[i] + g[i] / (8.0 * gamma), p[n + i] + g[n + i] / (8.0 * gamma));
            let s = a.hypot(c).max(1.0);
            p[i] = a / s;
            p[n + i] = c / s;
        }
    }
    primal(&p)
}

#[test]
fn tv_prox_oracles() {
    let d = Difference2d::new(8, 8);
    let c = vec![3.5; 64];
    assert!(max_abs_diff(&tv_prox(&d, 0.7, &c, 10), &c) < 1e-14);
    let mut rng = Prng::new(9, 0);
    let b = uniform_vec(&mut rng, 64, 0.0, 1.0);
    assert!(max_abs_diff(&tv_prox(&d, 1e-8, &b, 10), &b) < 1e-6);

    let gamma = 0.1;
    let out = tv_prox_warm(&d, gamma, &b, 500, None);
    assert!(out.objective.windows(2).all(|w| w[1] <= w[0]));
    let oracle = tv_oracle(8, 8, gamma, &b, 200_000);
    assert!(max_abs_diff(&out.image, &oracle) < 1e-4, "{}", max_abs_diff(&out.image, &oracle));
}

#[test]
fn ball_projection_and_moreau_identity() {
    let tau = 0.4;
    assert_eq!(ball_projection_prox_conj(tau, &[2.0 * tau, 0.0]), vec![tau, 0.0]);
    let g = GroupL12 { scale: tau };
    let ball = BallIndicator { radius: tau };
    let mut rng = Prng::new(10, 0);
    for _ in 0..50 {
        let u: Vec<f64> = rng.standard_normal(32);
        let lam = 0.1 + rng.uniform01();
        let scaled: Vec<f64> = u.iter().map(|v| v / lam).collect();
        let p = g.prox(1.0 / lam, &scaled);
        let q = ball.prox(lam, &u);
        let sum: Vec<f64> = p.iter().zip(&q).map(|(a, b)| lam * a + b).collect();
        assert!(max_abs_diff(&sum, &u) < 1e-8);
    }
}

#[test]
fn firmly_nonexpansive() {
    let proxes: Vec<Box<dyn ProxFriendly>> = vec![
        Box::new(ShiftedL1::new(vec![0.1, -0.2, 0.3, 0.0], 0.6).unwrap()),
        Box::new(GroupL12 { scale: 0.5 }),
        Box::new(BallIndicator { radius: 0.5 }),
        Box::new(ZeroFn),
    ];
    let mut rng = Prng::new(11, 0);
    for g in &proxes {
        for _ in 0..1000 {
            let x = rng.standard_normal(4);
            let y = rng.standard_normal(4);
            let (px, py) = (g.prox(0.7, &x), g.prox(0.7, &y));
            let dp = lmc_core::numerics::linalg::sub(&px, &py);
            let dx = lmc_core::numerics::linalg::sub(&x, &y);
            assert!(dot(&dp, &dp) <= dot(&dp, &dx) + 1e-12);
        }
    }
}

#[test]
fn linops_pass_adjoint_tests() {
    let ops: Vec<Box<dyn LinOp>> = vec![
        Box::new(Difference2d::new(8, 11)),
        Box::new(IdentityOp { dim: 5 }),
        Box::new(ZeroOp { in_dim: 4, out_dim: 6 }),
        Box::new(DenseOp::new(3, 4, (0..12).map(|i| (i as f64).sin()).collect()).unwrap()),
    ];
    let mut rng = Prng::new(12, 0);
    for op in &ops {
        for _ in 0..20 {
            let x = rng.standard_normal(op.in_dim());
            let u = rng.standard_normal(op.out_dim());
            let l = dot(&op.apply(&x), &u);
            let r = dot(&x, &op.adjoint(&u));
            assert!((l - r).abs() < 1e-10 * (1.0 + l.abs()));
            assert!(norm2(&op.apply(&x)) <= op.norm_bound() * norm2(&x) + 1e-12);
        }
    }
    assert!((Difference2d::new(8, 8).norm_bound().powi(2) - 8.0).abs() < 1e-12);
}

#[test]
fn fb_envelope_gradient_checks() {
    let g = Arc::new(ShiftedL1::centered(2, 0.15).unwrap());
    let f0 = CompositePotential::new(Arc::new(ZeroPotential { dim: 2 }), g.clone()).unwrap();
    let x = [0.6, -0.01];
    assert!(max_abs_diff(&fb_envelope_grad(&f0, 0.3, &x).unwrap(), &g.moreau_grad(0.3, &x)) < 1e-15);

    let cases = vec![
        CompositePotential::new(Arc::new(paper_gaussian_mixture(1).unwrap()), g.clone()).unwrap(),
        CompositePotential::new(Arc::new(paper_gaussian_mixture(1).unwrap()), Arc::new(ZeroFn)).unwrap(),
        CompositePotential::new(Arc::new(Quadratic::standard(2)), g).unwrap(),
    ];
    let lam = 0.1;
    let mut rng = Prng::new(13, 0);
    for cp in &cases {
        for _ in 0..20 {
            let x: Vec<f64> = rng.standard_normal(2).iter().map(|v| 2.0 * v).collect();
            let an = fb_envelope_grad(cp, lam, &x).unwrap();
            for i in 0..2 {
                let h = 1e-5;
                let mut a = x.clone();
                let mut b = x.clone();
                a[i] += h;
                b[i] -= h;
                let fd = (fb_envelope_value(cp, lam, &a) - fb_envelope_value(cp, lam, &b)) / (2.0 * h);
                assert!((fd - an[i]).abs() < 1e-5 * fd.abs().max(an[i].abs()).max(1.0), "{fd} {}", an[i]);
            }
        }
    }

    struct NoHess;
    impl Potential for NoHess {
        fn dim(&self) -> usize {
            2
        }
        fn value(&self, _x: &[f64]) -> f64 {
            0.0
        }
        fn gradient(&self, _x: &[f64]) -> Vec<f64> {
            vec![0.0; 2]
        }
    }
    let cp = CompositePotential::new(Arc::new(NoHess), Arc::new(ZeroFn)).unwrap();
    assert!(matches!(fb_envelope_grad(&cp, 0.1, &x), Err(lmc_core::LmcError::Capability(_))));
}
