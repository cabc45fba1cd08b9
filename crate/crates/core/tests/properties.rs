use lmc_core::diagnostics::{kde2d, moment_summary, GridSpec};
use lmc_core::numerics::linalg::{dot, sub};
use lmc_core::prox::*;
use proptest::prelude::*;

fn coords(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-20.0..20.0f64, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn l1_prox_firmly_nonexpansive(x in coords(3), y in coords(3), mu in coords(3), lam in 0.01..5.0f64, a in 0.01..3.0f64) {
        let (px, py) = (l1_prox(lam, &x, &mu, a), l1_prox(lam, &y, &mu, a));
        let dp = sub(&px, &py);
        prop_assert!(dot(&dp, &dp) <= dot(&dp, &sub(&x, &y)) + 1e-9);
    }

    #[test]
    fn moreau_gradient_identity(x in coords(4), lam in 0.01..5.0f64, a in 0.01..3.0f64) {
        let g = ShiftedL1::new(vec![0.5, -1.0, 0.0, 2.0], a).unwrap();
        let p = g.prox(lam, &x);
        let m = g.moreau_grad(lam, &x);
        for i in 0..4 {
            prop_assert!((m[i] * lam + p[i] - x[i]).abs() <= 1e-12 * (1.0 + x[i].abs()));
        }
        prop_assert!(g.moreau_env(lam, &x) <= g.value(&x) + 1e-12);
    }

    #[test]
    fn hyperbolic_bregman_nonnegative(x in coords(2), y in coords(2), b0 in 0.05..5.0f64, b1 in 0.05..5.0f64) {
        let h = HyperbolicEntropy::new(vec![b0, b1]).unwrap();
        prop_assert!(bregman_div(&h, &x, &y) >= 0.0);
        let back = h.conj_grad(&h.grad(&x));
        prop_assert!((back[0] - x[0]).abs() < 1e-10 * (1.0 + x[0].abs()));
        prop_assert!((back[1] - x[1]).abs() < 1e-10 * (1.0 + x[1].abs()));
    }

    #[test]
    fn bregman_proxes_reduce_to_euclidean(x in coords(2), mu in coords(2), lam in 0.01..3.0f64, a in 0.01..2.0f64) {
        let g = ShiftedL1::new(mu, a).unwrap();
        let e = g.prox(lam, &x);
        let l = left_bregman_prox_l1(&EuclideanMap, lam, &x, &g);
        let r = right_bregman_prox_l1(&EuclideanMap, lam, &x, &g).unwrap();
        for i in 0..2 {
            prop_assert!((l[i] - e[i]).abs() < 1e-10);
            prop_assert!((r[i] - e[i]).abs() < 1e-10 * (1.0 + e[i].abs()));
        }
    }

    #[test]
    fn difference_adjoint(h in 2usize..9, w in 2usize..9, seed in any::<u64>()) {
        use lmc_core::{NoiseSource, Prng};
        let d = Difference2d::new(h, w);
        let mut rng = Prng::new(seed, 0);
        let x = rng.standard_normal(h * w);
        let u = rng.standard_normal(2 * h * w);
        let l = dot(&d.apply(&x), &u);
        let r = dot(&x, &d.adjoint(&u));
        prop_assert!((l - r).abs() < 1e-10 * (1.0 + l.abs()));
    }

    #[test]
    fn kde_permutation_invariant(pts in prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64), 2..40), shift in 0usize..40) {
        let s: Vec<Vec<f64>> = pts.iter().map(|&(a, b)| vec![a, b]).collect();
        let mut rot = s.clone();
        let k = shift % rot.len();
        rot.rotate_left(k);
        let g = GridSpec::square(-4.0, 4.0, 17);
        prop_assert_eq!(kde2d(&s, &g, None).unwrap().values, kde2d(&rot, &g, None).unwrap().values);
    }

    #[test]
    fn moment_translation(pts in prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 2..50), b0 in -10.0..10.0f64, b1 in -10.0..10.0f64) {
        let s: Vec<Vec<f64>> = pts.iter().map(|&(a, b)| vec![a, b]).collect();
        let t: Vec<Vec<f64>> = s.iter().map(|v| vec![v[0] + b0, v[1] + b1]).collect();
        let (m, c) = moment_summary(&s).unwrap();
        let (mt, ct) = moment_summary(&t).unwrap();
        prop_assert!((mt[0] - m[0] - b0).abs() < 1e-10 && (mt[1] - m[1] - b1).abs() < 1e-10);
        for i in 0..4 {
            prop_assert!((ct.as_slice()[i] - c.as_slice()[i]).abs() < 1e-9);
        }
    }
}
