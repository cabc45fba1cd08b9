//! Proximal and Bregman calculus.
//!
//! [`ProxFriendly`] is the interface every nonsmooth term exposes to the
//! proximal samplers: value, proximity operator, Moreau envelope and its
//! gradient, and a subgradient selection. Bregman variants live in
//! [`legendre`], linear operators in [`linop`].

pub mod fb;
pub mod legendre;
pub mod linop;
pub mod metric;
pub mod tv;

pub use fb::{fb_envelope_grad, fb_envelope_value};
pub use legendre::{
    bregman_div, left_bregman_env_grad, left_bregman_env_value, left_bregman_prox_l1,
    right_bregman_env_grad, right_bregman_env_value, right_bregman_prox_l1, EuclideanMap,
    HyperbolicEntropy, LegendreMap,
};
pub use linop::{DenseOp, Difference2d, IdentityOp, LinOp, ZeroOp};
pub use metric::{q_metric_prox, QProxResult};
pub use tv::{ball_projection_prox_conj, tv_prox, tv_prox_warm, IsotropicTv, TvProxOutput};

use crate::numerics::linalg::{norm2, sub};

/// A convex term `g` with a cheap proximity operator.
pub trait ProxFriendly: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;

    /// `argmin_y g(y) + ‖y − x‖²/(2λ)`.
    fn prox(&self, lambda: f64, x: &[f64]) -> Vec<f64>;

    /// Minimal-norm element of `∂g(x)`.
    fn subgrad(&self, x: &[f64]) -> Vec<f64>;

    fn moreau_env(&self, lambda: f64, x: &[f64]) -> f64 {
        let p = self.prox(lambda, x);
        let r = norm2(&sub(x, &p));
        self.value(&p) + r * r / (2.0 * lambda)
    }

    fn moreau_grad(&self, lambda: f64, x: &[f64]) -> Vec<f64> {
        let p = self.prox(lambda, x);
        x.iter().zip(&p).map(|(xi, pi)| (xi - pi) / lambda).collect()
    }

    /// Proximity operator with caller-held warm-start state. Iterative proxes
    /// read and update `warm`; closed-form ones ignore it.
    fn prox_warm(&self, lambda: f64, x: &[f64], warm: &mut Vec<f64>) -> Vec<f64> {
        let _ = warm;
        self.prox(lambda, x)
    }
}

/// Anything that can evaluate a (possibly approximate) proximity map.
pub trait ProxMap: Send + Sync {
    fn prox_map(&self, step: f64, x: &[f64]) -> Vec<f64>;
}

impl<T: ProxFriendly> ProxMap for T {
    fn prox_map(&self, step: f64, x: &[f64]) -> Vec<f64> {
        self.prox(step, x)
    }
}

/// `g = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroFn;

impl ProxFriendly for ZeroFn {
    fn value(&self, _x: &[f64]) -> f64 {
        0.0
    }

    fn prox(&self, _lambda: f64, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }

    fn subgrad(&self, x: &[f64]) -> Vec<f64> {
        vec![0.0; x.len()]
    }

    fn moreau_env(&self, _lambda: f64, _x: &[f64]) -> f64 {
        0.0
    }
}

/// Coordinate-wise soft thresholding, the proximity operator of `α‖· − μ‖₁`.
pub fn l1_prox(lambda: f64, x: &[f64], center: &[f64], scale: f64) -> Vec<f64> {
    let thr = lambda * scale;
    x.iter()
        .zip(center)
        .map(|(&xi, &mi)| {
            let r = xi - mi;
            mi + r.signum() * (r.abs() - thr).max(0.0)
        })
        .collect()
}

/// Moreau envelope of `α‖· − μ‖₁`: a sum of Huber functions.
pub fn l1_moreau(lambda: f64, x: &[f64], center: &[f64], scale: f64) -> f64 {
    x.iter()
        .zip(center)
        .map(|(&xi, &mi)| huber(lambda, scale, xi - mi))
        .sum()
}

/// Envelope of `α|t|` with parameter `λ`.
pub(crate) fn huber(lambda: f64, scale: f64, t: f64) -> f64 {
    let a = t.abs();
    if a <= lambda * scale {
        t * t / (2.0 * lambda)
    } else {
        scale * a - 0.5 * lambda * scale * scale
    }
}

/// `g(x) = α‖x − μ‖₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftedL1 {
    pub center: Vec<f64>,
    pub scale: f64,
}

impl ShiftedL1 {
    pub fn new(center: Vec<f64>, scale: f64) -> crate::Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(crate::LmcError::Domain(format!(
                "l1 scale must be positive, got {scale}"
            )));
        }
        Ok(Self { center, scale })
    }

    /// Laplacian prior at the origin.
    pub fn centered(dim: usize, scale: f64) -> crate::Result<Self> {
        Self::new(vec![0.0; dim], scale)
    }
}

impl ProxFriendly for ShiftedL1 {
    fn value(&self, x: &[f64]) -> f64 {
        self.scale
            * x.iter()
                .zip(&self.center)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
    }

    fn prox(&self, lambda: f64, x: &[f64]) -> Vec<f64> {
        l1_prox(lambda, x, &self.center, self.scale)
    }

    fn subgrad(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.center)
            .map(|(a, b)| {
                let r = a - b;
                if r == 0.0 {
                    0.0
                } else {
                    self.scale * r.signum()
                }
            })
            .collect()
    }

    fn moreau_env(&self, lambda: f64, x: &[f64]) -> f64 {
        l1_moreau(lambda, x, &self.center, self.scale)
    }
}

/// Group ℓ1–ℓ2 norm `τ Σ_i ‖(u_i, u_{n+i})‖` on a two-channel field of `n`
/// pixels (the isotropic TV norm applied to a gradient field).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupL12 {
    pub scale: f64,
}

impl GroupL12 {
    fn pixels(u: &[f64]) -> usize {
        debug_assert!(u.len() % 2 == 0);
        u.len() / 2
    }
}

impl ProxFriendly for GroupL12 {
    fn value(&self, u: &[f64]) -> f64 {
        let n = Self::pixels(u);
        self.scale * (0..n).map(|i| u[i].hypot(u[n + i])).sum::<f64>()
    }

    fn prox(&self, lambda: f64, u: &[f64]) -> Vec<f64> {
        let n = Self::pixels(u);
        let thr = lambda * self.scale;
        let mut out = vec![0.0; u.len()];
        for i in 0..n {
            let r = u[i].hypot(u[n + i]);
            if r > thr {
                let s = 1.0 - thr / r;
                out[i] = s * u[i];
                out[n + i] = s * u[n + i];
            }
        }
        out
    }

    fn subgrad(&self, u: &[f64]) -> Vec<f64> {
        let n = Self::pixels(u);
        let mut out = vec![0.0; u.len()];
        for i in 0..n {
            let r = u[i].hypot(u[n + i]);
            if r > 0.0 {
                out[i] = self.scale * u[i] / r;
                out[n + i] = self.scale * u[n + i] / r;
            }
        }
        out
    }
}

/// Indicator of the pixelwise Euclidean ball of radius `τ` on a two-channel
/// field: the conjugate of [`GroupL12`] with scale `τ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallIndicator {
    pub radius: f64,
}

impl ProxFriendly for BallIndicator {
    fn value(&self, u: &[f64]) -> f64 {
        let n = u.len() / 2;
        let tol = self.radius * (1.0 + 1e-12);
        if (0..n).all(|i| u[i].hypot(u[n + i]) <= tol) {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn prox(&self, _lambda: f64, u: &[f64]) -> Vec<f64> {
        ball_projection_prox_conj(self.radius, u)
    }

    fn subgrad(&self, u: &[f64]) -> Vec<f64> {
        vec![0.0; u.len()]
    }

    fn moreau_env(&self, lambda: f64, u: &[f64]) -> f64 {
        let p = self.prox(lambda, u);
        let r = norm2(&sub(u, &p));
        r * r / (2.0 * lambda)
    }
}
