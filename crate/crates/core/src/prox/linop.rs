//! Linear operators with adjoints.

/// A linear map `R^in → R^out`.
pub trait LinOp: Send + Sync {
    fn in_dim(&self) -> usize;
    fn out_dim(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Vec<f64>;
    fn adjoint(&self, u: &[f64]) -> Vec<f64>;
    /// An upper bound on the operator norm.
    fn norm_bound(&self) -> f64;
}

/// Periodic forward differences on an `h × w` row-major image.
///
/// Output is two channels of `h·w` values, horizontal then vertical.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Difference2d {
    pub height: usize,
    pub width: usize,
}

impl Difference2d {
    pub fn new(height: usize, width: usize) -> Self {
        Self { height, width }
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let (h, w) = (self.height, self.width);
        let n = h * w;
        debug_assert_eq!(x.len(), n);
        let (dh, dv) = out.split_at_mut(n);
        for i in 0..h {
            let row = i * w;
            let down = ((i + 1) % h) * w;
            for j in 0..w {
                let right = if j + 1 == w { 0 } else { j + 1 };
                let v = x[row + j];
                dh[row + j] = x[row + right] - v;
                dv[row + j] = x[down + j] - v;
            }
        }
    }

    pub fn adjoint_into(&self, u: &[f64], out: &mut [f64]) {
        let (h, w) = (self.height, self.width);
        let n = h * w;
        let (uh, uv) = u.split_at(n);
        for i in 0..h {
            let row = i * w;
            let up = ((i + h - 1) % h) * w;
            for j in 0..w {
                let left = if j == 0 { w - 1 } else { j - 1 };
                out[row + j] = uh[row + left] - uh[row + j] + uv[up + j] - uv[row + j];
            }
        }
    }
}

impl LinOp for Difference2d {
    fn in_dim(&self) -> usize {
        self.pixels()
    }

    fn out_dim(&self) -> usize {
        2 * self.pixels()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; 2 * self.pixels()];
        self.apply_into(x, &mut out);
        out
    }

    fn adjoint(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.pixels()];
        self.adjoint_into(u, &mut out);
        out
    }

    fn norm_bound(&self) -> f64 {
        8f64.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IdentityOp {
    pub dim: usize,
}

impl LinOp for IdentityOp {
    fn in_dim(&self) -> usize {
        self.dim
    }
    fn out_dim(&self) -> usize {
        self.dim
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }
    fn adjoint(&self, u: &[f64]) -> Vec<f64> {
        u.to_vec()
    }
    fn norm_bound(&self) -> f64 {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZeroOp {
    pub in_dim: usize,
    pub out_dim: usize,
}

impl LinOp for ZeroOp {
    fn in_dim(&self) -> usize {
        self.in_dim
    }
    fn out_dim(&self) -> usize {
        self.out_dim
    }
    fn apply(&self, _x: &[f64]) -> Vec<f64> {
        vec![0.0; self.out_dim]
    }
    fn adjoint(&self, _u: &[f64]) -> Vec<f64> {
        vec![0.0; self.in_dim]
    }
    fn norm_bound(&self) -> f64 {
        0.0
    }
}

/// A dense `rows × cols` matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOp {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseOp {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> crate::Result<Self> {
        crate::error::check_dim(rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
    }
}

impl LinOp for DenseOp {
    fn in_dim(&self) -> usize {
        self.cols
    }
    fn out_dim(&self) -> usize {
        self.rows
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.data
            .chunks(self.cols)
            .map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }
    fn adjoint(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (r, &ui) in self.data.chunks(self.cols).zip(u) {
            for (o, a) in out.iter_mut().zip(r) {
                *o += a * ui;
            }
        }
        out
    }
    fn norm_bound(&self) -> f64 {
        self.data.iter().map(|a| a * a).sum::<f64>().sqrt()
    }
}
