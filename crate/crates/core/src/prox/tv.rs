//! Isotropic total variation and its proximity operator.

use crate::prox::linop::Difference2d;
use crate::prox::ProxFriendly;

/// Output of [`tv_prox_warm`].
#[derive(Debug, Clone)]
pub struct TvProxOutput {
    pub image: Vec<f64>,
    /// Final dual field (two channels), reusable as a warm start.
    pub dual: Vec<f64>,
    /// Primal objective after each inner iteration.
    pub objective: Vec<f64>,
}

/// Pixelwise projection of a two-channel field onto the ball of radius
/// `radius`. This is the proximity operator of the conjugate of `radius·TV`
/// seen as a function of the gradient field.
pub fn ball_projection_prox_conj(radius: f64, u: &[f64]) -> Vec<f64> {
    let mut out = u.to_vec();
    project_in_place(radius, &mut out);
    out
}

fn project_in_place(radius: f64, u: &mut [f64]) {
    let n = u.len() / 2;
    let (a, b) = u.split_at_mut(n);
    for (p, q) in a.iter_mut().zip(b.iter_mut()) {
        let r = (*p * *p + *q * *q).sqrt();
        if r > radius {
            let s = radius / r;
            *p *= s;
            *q *= s;
        }
    }
}

fn tv_norm(d: &Difference2d, x: &[f64], scratch: &mut [f64]) -> f64 {
    d.apply_into(x, scratch);
    let n = x.len();
    (0..n).map(|i| (scratch[i] * scratch[i] + scratch[n + i] * scratch[n + i]).sqrt()).sum()
}

/// `argmin_x ½‖x − b‖² + γ TV(x)` by the monotone fast gradient projection on
/// the dual, `n_iter` iterations, cold start.
pub fn tv_prox(d: &Difference2d, gamma: f64, b: &[f64], n_iter: usize) -> Vec<f64> {
    tv_prox_warm(d, gamma, b, n_iter, None).image
}

/// As [`tv_prox`], starting from a dual field `init` (projected first).
///
/// The returned image never has a larger objective than `b − γDᵀp₀`.
pub fn tv_prox_warm(
    d: &Difference2d,
    gamma: f64,
    b: &[f64],
    n_iter: usize,
    init: Option<&[f64]>,
) -> TvProxOutput {
    let n = d.pixels();
    debug_assert_eq!(b.len(), n);
    let mut scratch = vec![0.0; 2 * n];
    let mut p_prev = match init {
        Some(p) if p.len() == 2 * n => ball_projection_prox_conj(1.0, p),
        _ => vec![0.0; 2 * n],
    };
    let primal = |p: &[f64], out: &mut Vec<f64>, tmp: &mut Vec<f64>| {
        d.adjoint_into(p, tmp);
        for i in 0..n {
            out[i] = b[i] - gamma * tmp[i];
        }
    };
    let objective = |x: &[f64], scratch: &mut [f64]| {
        let q: f64 = x.iter().zip(b).map(|(a, c)| (a - c) * (a - c)).sum();
        0.5 * q + gamma * tv_norm(d, x, scratch)
    };

    let mut tmp = vec![0.0; n];
    let mut x_best = vec![0.0; n];
    primal(&p_prev, &mut x_best, &mut tmp);
    let mut f_best = objective(&x_best, &mut scratch);
    let mut trace = Vec::with_capacity(n_iter);
    if gamma <= 0.0 || n_iter == 0 {
        return TvProxOutput { image: x_best, dual: p_prev, objective: trace };
    }

    let step = 1.0 / (8.0 * gamma);
    let mut r = p_prev.clone();
    let mut z = vec![0.0; 2 * n];
    let mut xz = vec![0.0; n];
    let mut t = 1.0f64;
    for _ in 0..n_iter {
        primal(&r, &mut xz, &mut tmp);
        d.apply_into(&xz, &mut z);
        for k in 0..2 * n {
            z[k] = r[k] + step * z[k];
        }
        project_in_place(1.0, &mut z);
        primal(&z, &mut xz, &mut tmp);
        let fz = objective(&xz, &mut scratch);
        let accepted = fz <= f_best;
        if accepted {
            f_best = fz;
            std::mem::swap(&mut x_best, &mut xz);
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let a = t / t_next;
        let c = (t - 1.0) / t_next;
        // p_k is z when accepted, else p_prev.
        for k in 0..2 * n {
            let pk = if accepted { z[k] } else { p_prev[k] };
            r[k] = pk + a * (z[k] - pk) + c * (pk - p_prev[k]);
            p_prev[k] = pk;
        }
        t = t_next;
        trace.push(f_best);
    }
    TvProxOutput { image: x_best, dual: p_prev, objective: trace }
}

/// `τ·TV` on an `h × w` image, with an inexact iterative prox.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsotropicTv {
    pub op: Difference2d,
    pub scale: f64,
    pub inner_iters: usize,
}

impl IsotropicTv {
    pub fn new(height: usize, width: usize, scale: f64, inner_iters: usize) -> Self {
        Self { op: Difference2d::new(height, width), scale, inner_iters }
    }

    pub fn tv(&self, x: &[f64]) -> f64 {
        let mut scratch = vec![0.0; 2 * x.len()];
        tv_norm(&self.op, x, &mut scratch)
    }
}

impl ProxFriendly for IsotropicTv {
    fn value(&self, x: &[f64]) -> f64 {
        self.scale * self.tv(x)
    }

    fn prox(&self, lambda: f64, x: &[f64]) -> Vec<f64> {
        tv_prox(&self.op, lambda * self.scale, x, self.inner_iters)
    }

    fn subgrad(&self, x: &[f64]) -> Vec<f64> {
        use crate::prox::linop::LinOp;
        let mut g = self.op.apply(x);
        let n = x.len();
        for i in 0..n {
            let r = g[i].hypot(g[n + i]);
            if r > 0.0 {
                g[i] /= r;
                g[n + i] /= r;
            } else {
                g[i] = 0.0;
                g[n + i] = 0.0;
            }
        }
        let mut out = self.op.adjoint(&g);
        for v in &mut out {
            *v *= self.scale;
        }
        out
    }

    fn prox_warm(&self, lambda: f64, x: &[f64], warm: &mut Vec<f64>) -> Vec<f64> {
        let init = if warm.len() == 2 * x.len() { Some(warm.as_slice()) } else { None };
        let out = tv_prox_warm(&self.op, lambda * self.scale, x, self.inner_iters, init);
        *warm = out.dual;
        out.image
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step_image(h: usize, w: usize) -> Vec<f64> {
        (0..h * w).map(|k| if k % w < w / 2 { 0.0 } else { 10.0 }).collect()
    }

    #[test]
    fn constant_image_is_fixed() {
        let d = Difference2d::new(6, 6);
        let b = vec![4.2; 36];
        assert_eq!(tv_prox(&d, 3.0, &b, 20), b);
    }

    #[test]
    fn vanishing_weight_is_identity() {
        let d = Difference2d::new(8, 8);
        let b = step_image(8, 8);
        let x = tv_prox(&d, 1e-9, &b, 10);
        let err = x.iter().zip(&b).map(|(a, c)| (a - c).abs()).fold(0.0, f64::max);
        assert!(err < 1e-7);
    }

    #[test]
    fn objective_trace_is_monotone() {
        let d = Difference2d::new(8, 8);
        let b: Vec<f64> = (0..64).map(|k| ((k * 37) % 11) as f64).collect();
        let out = tv_prox_warm(&d, 0.7, &b, 50, None);
        for w in out.objective.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn prox_preserves_mean() {
        let d = Difference2d::new(8, 8);
        let b: Vec<f64> = (0..64).map(|k| ((k * 13) % 7) as f64).collect();
        let x = tv_prox(&d, 0.5, &b, 30);
        let mb: f64 = b.iter().sum::<f64>() / 64.0;
        let mx: f64 = x.iter().sum::<f64>() / 64.0;
        assert!((mb - mx).abs() < 1e-12);
    }
}
