//! Bayesian image deconvolution with TV-type priors.

mod blur;
mod map;
mod model;

pub use blur::{BlurOperator, Fft2};
pub use map::{adapdhg_map, MapResult, ADAPT_FACTOR, ADAPT_RATIO};
pub use model::{
    mc_tv_grad_term, mc_tv_value, quad_prox, ApproxDataProx, DeconvolutionModel, McNorm, SmoothPart,
    TvPriorSpec, TvVariant,
};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::numerics::{NoiseSource, Prng};
use crate::prox::{Difference2d, LinOp};
use crate::{LmcError, Result};

pub const PAPER_SIGMA: f64 = 0.75;
pub const PAPER_TAU: f64 = 0.3;
pub const PAPER_GAMMA_TV: f64 = 15.0;
pub const TV_INNER_ITERS: usize = 10;
pub const MAP_ITERS: usize = 1000;

static CAMERA_128: &[u8] = include_bytes!("../../assets/camera_128.pgm");

/// A real-valued grayscale image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub height: usize,
    pub width: usize,
    pub pixels: Vec<f64>,
}

impl Image {
    pub fn new(height: usize, width: usize, pixels: Vec<f64>) -> Result<Self> {
        crate::error::check_dim(height * width, pixels.len())?;
        if height < 8 || width < 8 {
            return Err(LmcError::Domain(format!("images must be at least 8×8, got {height}×{width}")));
        }
        if !pixels.iter().all(|v| v.is_finite()) {
            return Err(LmcError::Domain("image has non-finite pixels".into()));
        }
        Ok(Self { height, width, pixels })
    }

    pub fn constant(height: usize, width: usize, v: f64) -> Result<Self> {
        Self::new(height, width, vec![v; height * width])
    }

    /// The built-in 128×128 test image.
    pub fn builtin_camera() -> Self {
        Self::from_pgm_bytes(CAMERA_128).expect("embedded test image is valid")
    }

    pub fn from_pgm_bytes(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0;
        let mut token = || -> Result<String> {
            loop {
                while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                    pos += 1;
                }
                if pos < bytes.len() && bytes[pos] == b'#' {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                    continue;
                }
                break;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(LmcError::Config("truncated PGM header".into()));
            }
            Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
        };
        let magic = token()?;
        let num = |s: String| s.parse::<usize>().map_err(|_| LmcError::Config(format!("bad PGM header field {s:?}")));
        let width = num(token()?)?;
        let height = num(token()?)?;
        let maxval = num(token()?)?;
        if maxval == 0 || maxval > 65535 {
            return Err(LmcError::Config(format!("unsupported PGM maxval {maxval}")));
        }
        let n = width * height;
        let pixels = match magic.as_str() {
            "P5" => {
                let data = &bytes[pos + 1..];
                if maxval < 256 {
                    if data.len() < n {
                        return Err(LmcError::Config("truncated PGM raster".into()));
                    }
                    data[..n].iter().map(|&b| b as f64).collect()
                } else {
                    if data.len() < 2 * n {
                        return Err(LmcError::Config("truncated PGM raster".into()));
                    }
                    data.chunks(2).take(n).map(|c| u16::from_be_bytes([c[0], c[1]]) as f64).collect()
                }
            }
            "P2" => {
                let text = String::from_utf8_lossy(&bytes[pos..]);
                let v: Vec<f64> = text.split_ascii_whitespace().take(n).filter_map(|t| t.parse().ok()).collect();
                if v.len() != n {
                    return Err(LmcError::Config("truncated PGM raster".into()));
                }
                v
            }
            other => return Err(LmcError::Config(format!("not a PGM file (magic {other:?})"))),
        };
        let scale = 255.0 / maxval as f64;
        Self::new(height, width, pixels.into_iter().map(|v| v * scale).collect())
    }

    pub fn read_pgm(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| LmcError::Config(format!("{}: {e}", path.display())))?;
        Self::from_pgm_bytes(&bytes)
    }

    /// Binary 8-bit PGM, clamped to [0, 255] and rounded.
    pub fn to_pgm_bytes(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.pixels.iter().map(|v| v.clamp(0.0, 255.0).round() as u8));
        out
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for row in self.pixels.chunks(self.width) {
            let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let r: std::result::Result<Vec<f64>, _> = line.split(',').map(|t| t.trim().parse::<f64>()).collect();
            rows.push(r.map_err(|e| LmcError::Config(format!("bad CSV image: {e}")))?);
        }
        let h = rows.len();
        let w = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != w) {
            return Err(LmcError::Config("ragged CSV image".into()));
        }
        Self::new(h, w, rows.concat())
    }

    /// Centered `h × w` window.
    pub fn center_crop(&self, h: usize, w: usize) -> Result<Self> {
        if h > self.height || w > self.width {
            return Err(LmcError::Dimension { expected: self.height.min(self.width), got: h.max(w) });
        }
        let (r0, c0) = ((self.height - h) / 2, (self.width - w) / 2);
        let mut px = Vec::with_capacity(h * w);
        for i in 0..h {
            px.extend_from_slice(&self.pixels[(r0 + i) * self.width + c0..(r0 + i) * self.width + c0 + w]);
        }
        Self::new(h, w, px)
    }

    /// A piecewise-constant test image: background, a bright rectangle and
    /// a dark disc.
    pub fn synthetic_piecewise(height: usize, width: usize) -> Result<Self> {
        let mut px = vec![60.0; height * width];
        let (hf, wf) = (height as f64, width as f64);
        for i in 0..height {
            for j in 0..width {
                let (y, x) = (i as f64 / hf, j as f64 / wf);
                if (0.15..0.55).contains(&y) && (0.2..0.7).contains(&x) {
                    px[i * width + j] = 200.0;
                }
                if (y - 0.7).powi(2) + (x - 0.65).powi(2) < 0.04 {
                    px[i * width + j] = 20.0;
                }
            }
        }
        Self::new(height, width, px)
    }
}

/// Periodic forward differences of an image (two channels).
pub fn diff_op(img: &Image) -> Vec<f64> {
    Difference2d::new(img.height, img.width).apply(&img.pixels)
}

/// Adjoint of [`diff_op`] (negative divergence).
pub fn diff_adjoint(height: usize, width: usize, field: &[f64]) -> Vec<f64> {
    Difference2d::new(height, width).adjoint(field)
}

/// `y = Hx + w`, `w ~ N(0, σ²I)`.
pub fn synthesize_observation(truth: &Image, blur: &BlurOperator, sigma: f64, rng: &mut Prng) -> Image {
    let mut y = blur.apply(&truth.pixels);
    let w = rng.standard_normal(y.len());
    y.iter_mut().zip(&w).for_each(|(a, e)| *a += sigma * e);
    Image { height: truth.height, width: truth.width, pixels: y }
}

/// The nine (blur, prior) model variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelId {
    M1,
    M2,
    M3,
    M4,
    M5,
    M6,
    M7,
    M8,
    M9,
}

impl ModelId {
    pub const ALL: [ModelId; 9] =
        [ModelId::M1, ModelId::M2, ModelId::M3, ModelId::M4, ModelId::M5, ModelId::M6, ModelId::M7, ModelId::M8, ModelId::M9];

    /// `(blur size, prior variant)`; rows are blur sizes 5, 6, 7 and columns
    /// TV, MC-TV, ME-TV.
    pub fn spec(self) -> (usize, TvVariant) {
        let i = self as usize;
        let size = [5, 6, 7][i / 3];
        let variant = [TvVariant::Tv, TvVariant::McTv, TvVariant::MeTv][i % 3];
        (size, variant)
    }

    pub fn label(self) -> &'static str {
        ["M1", "M2", "M3", "M4", "M5", "M6", "M7", "M8", "M9"][self as usize]
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|m| m.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| LmcError::Config(format!("unknown model {s:?}")))
    }
}
