//! Density estimates on grids, moment summaries and image quality metrics.

use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::numerics::linalg::Matrix;
use crate::potentials::Potential;
use crate::{LmcError, Result};

/// Version tag of the metric definitions below.
pub const METRICS_DEFINITIONS_VERSION: &str = "lmc-metrics-1";

/// Inclusive, evenly spaced 2D grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub y_min: f64,
    pub y_max: f64,
    pub ny: usize,
}

impl GridSpec {
    pub fn square(lo: f64, hi: f64, n: usize) -> Self {
        Self { x_min: lo, x_max: hi, nx: n, y_min: lo, y_max: hi, ny: n }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.ny < 2 || !(self.x_max > self.x_min) || !(self.y_max > self.y_min) {
            return Err(LmcError::Config(format!("grid axes must be increasing with at least two nodes: {self:?}")));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_max - self.y_min) / (self.ny - 1) as f64
    }

    pub fn x(&self, k: usize) -> f64 {
        self.x_min + k as f64 * self.dx()
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y_min + j as f64 * self.dy()
    }

    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }
}

/// Values on a [`GridSpec`], row `j` holding `y_j` and column `k` holding `x_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub spec: GridSpec,
    pub values: Vec<f64>,
}

impl DensityGrid {
    pub fn at(&self, j: usize, k: usize) -> f64 {
        self.values[j * self.spec.nx + k]
    }

    pub fn riemann_sum(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.spec.cell_area()
    }

    pub fn sup_distance(&self, other: &DensityGrid) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let s = &self.spec;
        let mut out = format!(
            "x_min={},x_max={},nx={},y_min={},y_max={},ny={}\n",
            s.x_min, s.x_max, s.nx, s.y_min, s.y_max, s.ny
        );
        for row in self.values.chunks(s.nx) {
            for (k, v) in row.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{v:e}");
            }
            out.push('\n');
        }
        out
    }
}

fn lex(a: &[f64], b: &[f64]) -> Ordering {
    a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1]))
}

/// Sample standard deviation, or zero when it is at rounding level.
fn std_dev(v: impl Iterator<Item = f64> + Clone, n: usize) -> f64 {
    let m = v.clone().sum::<f64>() / n as f64;
    let s = (v.map(|t| (t - m) * (t - m)).sum::<f64>() / (n - 1) as f64).sqrt();
    if s <= 1e-12 * (1.0 + m.abs()) {
        0.0
    } else {
        s
    }
}

/// Gaussian product-kernel density estimate of 2D samples.
///
/// The default bandwidth is Scott's rule `n^{−1/6} σ_j` per axis, falling
/// back to the grid spacing for a degenerate axis. Samples are sorted first
/// so the result does not depend on their order. Kernels are truncated at
/// eight bandwidths.
pub fn kde2d(samples: &[Vec<f64>], grid: &GridSpec, bandwidth: Option<[f64; 2]>) -> Result<DensityGrid> {
    grid.validate()?;
    if samples.len() < 2 {
        return Err(LmcError::Config(format!("KDE needs at least two samples, got {}", samples.len())));
    }
    if let Some(bad) = samples.iter().find(|s| s.len() != 2) {
        return Err(LmcError::Dimension { expected: 2, got: bad.len() });
    }
    let mut sorted: Vec<&[f64]> = samples.iter().map(|s| s.as_slice()).collect();
    sorted.sort_by(|a, b| lex(a, b));
    let n = sorted.len();
    let h = match bandwidth {
        Some(h) => {
            if !(h[0] > 0.0 && h[1] > 0.0) {
                return Err(LmcError::Config(format!("bandwidth must be positive, got {h:?}")));
            }
            h
        }
        None => {
            let f = (n as f64).powf(-1.0 / 6.0);
            let sx = std_dev(sorted.iter().map(|s| s[0]), n);
            let sy = std_dev(sorted.iter().map(|s| s[1]), n);
            [
                if sx > 0.0 { f * sx } else { grid.dx() },
                if sy > 0.0 { f * sy } else { grid.dy() },
            ]
        }
    };
    let (nx, ny) = (grid.nx, grid.ny);
    let mut values = vec![0.0; nx * ny];
    let norm = 1.0 / (2.0 * std::f64::consts::PI * h[0] * h[1] * n as f64);
    let window = |c: f64, lo: f64, step: f64, len: usize, bw: f64| -> (usize, usize) {
        let a = ((c - 8.0 * bw - lo) / step).floor().max(0.0);
        let b = ((c + 8.0 * bw - lo) / step).ceil().min((len - 1) as f64);
        if b < 0.0 || a > (len - 1) as f64 || a > b {
            (1, 0)
        } else {
            (a as usize, b as usize)
        }
    };
    let mut kx = vec![0.0; nx];
    for s in sorted {
        let (x0, x1) = window(s[0], grid.x_min, grid.dx(), nx, h[0]);
        let (y0, y1) = window(s[1], grid.y_min, grid.dy(), ny, h[1]);
        if x0 > x1 || y0 > y1 {
            continue;
        }
        for k in x0..=x1 {
            let t = (grid.x(k) - s[0]) / h[0];
            kx[k] = (-0.5 * t * t).exp();
        }
        for j in y0..=y1 {
            let t = (grid.y(j) - s[1]) / h[1];
            let ky = (-0.5 * t * t).exp() * norm;
            let row = &mut values[j * nx..(j + 1) * nx];
            for k in x0..=x1 {
                row[k] += ky * kx[k];
            }
        }
    }
    Ok(DensityGrid { spec: *grid, values })
}

/// `exp(−U)` on the grid, normalised so the Riemann sum is one.
pub fn density_grid(u: &dyn Potential, grid: &GridSpec) -> Result<DensityGrid> {
    grid.validate()?;
    crate::error::check_dim(2, u.dim())?;
    let mut logs = Vec::with_capacity(grid.nx * grid.ny);
    for j in 0..grid.ny {
        for k in 0..grid.nx {
            logs.push(-u.value(&[grid.x(k), grid.y(j)]));
        }
    }
    let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return Err(LmcError::Numeric("density is zero or infinite everywhere on the grid".into()));
    }
    let mut values: Vec<f64> = logs.iter().map(|l| (l - m).exp()).collect();
    let z = values.iter().sum::<f64>() * grid.cell_area();
    values.iter_mut().for_each(|v| *v /= z);
    Ok(DensityGrid { spec: *grid, values })
}

/// Unbiased sample mean and covariance.
pub fn moment_summary(samples: &[Vec<f64>]) -> Result<(Vec<f64>, Matrix)> {
    let n = samples.len();
    if n < 2 {
        return Err(LmcError::Config(format!("moment summary needs at least two samples, got {n}")));
    }
    let d = samples[0].len();
    let mut mean = vec![0.0; d];
    for s in samples {
        crate::error::check_dim(d, s.len())?;
        for i in 0..d {
            mean[i] += s[i];
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = Matrix::zeros(d);
    for s in samples {
        for i in 0..d {
            let a = s[i] - mean[i];
            for j in 0..d {
                cov[(i, j)] += a * (s[j] - mean[j]);
            }
        }
    }
    Ok((mean, cov.scale(1.0 / (n - 1) as f64)))
}

/// SNR and PSNR are in dB; both are `+∞` for a perfect estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub snr_db: f64,
    pub psnr_db: f64,
    pub mse: f64,
}

fn json_number(v: f64) -> serde_json::Value {
    if v == f64::INFINITY {
        serde_json::Value::String("+inf".into())
    } else {
        serde_json::json!(v)
    }
}

impl MetricsReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "snr_db": json_number(self.snr_db),
            "psnr_db": json_number(self.psnr_db),
            "mse": self.mse,
            "definitions_version": METRICS_DEFINITIONS_VERSION,
        })
    }
}

/// `mse = mean((t − e)²)`, `psnr = 10 log10(peak²/mse)`,
/// `snr = 10 log10(Σt² / Σ(t − e)²)`.
pub fn image_metrics(truth: &[f64], estimate: &[f64], peak: f64) -> Result<MetricsReport> {
    crate::error::check_dim(truth.len(), estimate.len())?;
    if truth.is_empty() {
        return Err(LmcError::Config("cannot compare empty images".into()));
    }
    let err: f64 = truth.iter().zip(estimate).map(|(t, e)| (t - e) * (t - e)).sum();
    let energy: f64 = truth.iter().map(|t| t * t).sum();
    let mse = err / truth.len() as f64;
    if err == 0.0 {
        return Ok(MetricsReport { snr_db: f64::INFINITY, psnr_db: f64::INFINITY, mse: 0.0 });
    }
    Ok(MetricsReport {
        snr_db: 10.0 * (energy / err).log10(),
        psnr_db: 10.0 * (peak * peak / mse).log10(),
        mse,
    })
}
