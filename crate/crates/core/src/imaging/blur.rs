use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::prox::LinOp;
use crate::{LmcError, Result};

/// 2D FFT plans for an `h × w` periodic grid.
pub struct Fft2 {
    pub height: usize,
    pub width: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Fft2({}×{})", self.height, self.width)
    }
}

impl Fft2 {
    pub fn new(height: usize, width: usize) -> Self {
        let mut p = FftPlanner::new();
        Self {
            height,
            width,
            row_fwd: p.plan_fft_forward(width),
            row_inv: p.plan_fft_inverse(width),
            col_fwd: p.plan_fft_forward(height),
            col_inv: p.plan_fft_inverse(height),
        }
    }

    fn transform(&self, buf: &mut [Complex<f64>], inverse: bool) {
        let (h, w) = (self.height, self.width);
        let (rows, cols) = if inverse { (&self.row_inv, &self.col_inv) } else { (&self.row_fwd, &self.col_fwd) };
        rows.process(buf);
        let mut col = vec![Complex::new(0.0, 0.0); h];
        for j in 0..w {
            for i in 0..h {
                col[i] = buf[i * w + j];
            }
            cols.process(&mut col);
            for i in 0..h {
                buf[i * w + j] = col[i];
            }
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<Complex<f64>> {
        let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.transform(&mut buf, false);
        buf
    }

    /// Inverse transform, normalised, real part.
    pub fn inverse_real(&self, mut buf: Vec<Complex<f64>>) -> Vec<f64> {
        self.transform(&mut buf, true);
        let s = 1.0 / (self.height * self.width) as f64;
        buf.into_iter().map(|c| c.re * s).collect()
    }
}

/// Periodic convolution with a `k × k` uniform kernel. Even sizes put the
/// extra row and column on the positive-offset side.
#[derive(Debug, Clone)]
pub struct BlurOperator {
    pub kernel_size: usize,
    fft: Arc<Fft2>,
    transfer: Vec<Complex<f64>>,
}

impl BlurOperator {
    pub fn uniform(kernel_size: usize, height: usize, width: usize) -> Result<Self> {
        Self::uniform_with(kernel_size, Arc::new(Fft2::new(height, width)))
    }

    /// Reuses existing FFT plans.
    pub fn uniform_with(kernel_size: usize, fft: Arc<Fft2>) -> Result<Self> {
        let (h, w) = (fft.height, fft.width);
        if kernel_size == 0 || kernel_size > h || kernel_size > w {
            return Err(LmcError::Domain(format!("blur size {kernel_size} does not fit a {h}×{w} image")));
        }
        let lo = -(((kernel_size - 1) / 2) as isize);
        let hi = (kernel_size / 2) as isize;
        let wgt = 1.0 / (kernel_size * kernel_size) as f64;
        let mut psf = vec![0.0; h * w];
        for di in lo..=hi {
            for dj in lo..=hi {
                let i = di.rem_euclid(h as isize) as usize;
                let j = dj.rem_euclid(w as isize) as usize;
                psf[i * w + j] += wgt;
            }
        }
        let transfer = fft.forward(&psf);
        Ok(Self { kernel_size, fft, transfer })
    }

    pub fn height(&self) -> usize {
        self.fft.height
    }

    pub fn width(&self) -> usize {
        self.fft.width
    }

    pub fn fft(&self) -> &Arc<Fft2> {
        &self.fft
    }

    pub fn transfer(&self) -> &[Complex<f64>] {
        &self.transfer
    }

    fn filter(&self, x: &[f64], conj: bool) -> Vec<f64> {
        let mut f = self.fft.forward(x);
        for (v, t) in f.iter_mut().zip(&self.transfer) {
            *v *= if conj { t.conj() } else { *t };
        }
        self.fft.inverse_real(f)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.filter(x, false)
    }

    pub fn adjoint(&self, x: &[f64]) -> Vec<f64> {
        self.filter(x, true)
    }

    /// `(I + c H*H)⁻¹ b` by division in the Fourier domain.
    pub fn solve_shifted_normal(&self, c: f64, b: &[f64]) -> Vec<f64> {
        let mut f = self.fft.forward(b);
        for (v, t) in f.iter_mut().zip(&self.transfer) {
            *v /= 1.0 + c * t.norm_sqr();
        }
        self.fft.inverse_real(f)
    }
}

impl LinOp for BlurOperator {
    fn in_dim(&self) -> usize {
        self.height() * self.width()
    }
    fn out_dim(&self) -> usize {
        self.in_dim()
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        BlurOperator::apply(self, x)
    }
    fn adjoint(&self, u: &[f64]) -> Vec<f64> {
        BlurOperator::adjoint(self, u)
    }
    fn norm_bound(&self) -> f64 {
        1.0
    }
}
