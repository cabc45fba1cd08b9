//! Small dense linear algebra on symmetric matrices.
//!
//! Everything here works on row-major square matrices of modest size (the
//! mixture experiments are two-dimensional). Eigendecompositions use a closed
//! form for `d <= 2` and cyclic Jacobi rotations otherwise.

use crate::error::{check_dim, LmcError, Result};

const SYMMETRY_TOL: f64 = 1e-12;
const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Dense square matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diag(entries: &[f64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &v) in entries.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds a matrix from rows; all rows must have the same length as the row count.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            check_dim(dim, row.len())?;
            data.extend_from_slice(row);
        }
        Ok(Self { dim, data })
    }

    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self> {
        check_dim(dim * dim, data.len())?;
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim.max(1)).map(<[f64]>::to_vec).collect()
    }

    pub fn transpose(&self) -> Self {
        let n = self.dim;
        let mut t = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.dim);
        self.data
            .chunks(self.dim.max(1))
            .map(|row| dot(row, v))
            .collect()
    }

    pub fn mul_mat(&self, other: &Matrix) -> Matrix {
        let n = self.dim;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Matrix {
            dim: self.dim,
            data,
        }
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            dim: self.dim,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// Adds `s` to every diagonal entry.
    pub fn shift_diagonal(&self, s: f64) -> Matrix {
        let mut m = self.clone();
        for i in 0..self.dim {
            m[(i, i)] += s;
        }
        m
    }

    /// `v vᵀ`.
    pub fn outer(v: &[f64]) -> Matrix {
        let n = v.len();
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = v[i] * v[j];
            }
        }
        m
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Symmetric within `1e-12` relative to the largest entry.
    pub fn is_symmetric(&self) -> bool {
        let scale = self.max_abs().max(1.0);
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                if (self[(i, j)] - self[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return false;
                }
            }
        }
        true
    }

    /// Replaces the matrix by `(A + Aᵀ)/2`.
    pub fn symmetrize(&mut self) {
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                let avg = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = avg;
                self[(j, i)] = avg;
            }
        }
    }

    fn require_symmetric(&self) -> Result<()> {
        if !self.is_finite() {
            return Err(LmcError::Domain("matrix has non-finite entries".into()));
        }
        if !self.is_symmetric() {
            return Err(LmcError::Domain("matrix is not symmetric".into()));
        }
        Ok(())
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.dim + j]
    }
}

/// A symmetric positive-definite matrix together with its Cholesky factor.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    matrix: Matrix,
    chol: Matrix,
}

impl SpdMatrix {
    /// Validates symmetry and positive definiteness (`assert_spd`).
    pub fn new(matrix: Matrix) -> Result<Self> {
        matrix.require_symmetric()?;
        let chol = cholesky(&matrix)?;
        Ok(Self { matrix, chol })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(Matrix::identity(dim)).expect("identity is SPD")
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    /// Lower-triangular `L` with `L Lᵀ = A`.
    pub fn cholesky_factor(&self) -> &Matrix {
        &self.chol
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        self.matrix.mul_vec(v)
    }

    /// `log det A` from the Cholesky diagonal.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim()).map(|i| self.chol[(i, i)].ln()).sum::<f64>()
    }

    pub fn inverse(&self) -> Matrix {
        let n = self.dim();
        let mut inv = Matrix::zeros(n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = chol_solve(&self.chol, &e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv.symmetrize();
        inv
    }
}

fn cholesky(m: &Matrix) -> Result<Matrix> {
    let n = m.dim;
    let mut l = Matrix::zeros(n);
    for j in 0..n {
        let mut diag = m[(j, j)];
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return Err(LmcError::Domain(format!(
                "Cholesky factorization failed at pivot {j} (value {diag:e}); matrix is not SPD"
            )));
        }
        let ljj = diag.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

fn chol_solve(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = l.dim;
    let mut z = b.to_vec();
    for i in 0..n {
        let mut s = z[i];
        for k in 0..i {
            s -= l[(i, k)] * z[k];
        }
        z[i] = s / l[(i, i)];
    }
    for i in (0..n).rev() {
        let mut s = z[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * z[k];
        }
        z[i] = s / l[(i, i)];
    }
    z
}

/// Solves `m z = b` through the stored Cholesky factor.
pub fn solve_spd(m: &SpdMatrix, b: &[f64]) -> Result<Vec<f64>> {
    check_dim(m.dim(), b.len())?;
    Ok(chol_solve(&m.chol, b))
}

/// Eigenvalues in ascending order with matching orthonormal eigenvectors
/// (stored as the columns of the returned matrix).
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl SymmetricEigen {
    /// `V diag(f(λ)) Vᵀ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let n = self.values.len();
        let mut out = Matrix::zeros(n);
        for (k, &lam) in self.values.iter().enumerate() {
            let w = f(lam);
            for i in 0..n {
                let vik = self.vectors[(i, k)] * w;
                for j in 0..n {
                    out[(i, j)] += vik * self.vectors[(j, k)];
                }
            }
        }
        out.symmetrize();
        out
    }
}

pub fn symmetric_eigen(m: &Matrix) -> Result<SymmetricEigen> {
    m.require_symmetric()?;
    match m.dim {
        0 => Ok(SymmetricEigen {
            values: vec![],
            vectors: Matrix::zeros(0),
        }),
        1 => Ok(SymmetricEigen {
            values: vec![m[(0, 0)]],
            vectors: Matrix::identity(1),
        }),
        2 => Ok(eigen_2x2(m[(0, 0)], 0.5 * (m[(0, 1)] + m[(1, 0)]), m[(1, 1)])),
        _ => jacobi_eigen(m),
    }
}

fn eigen_2x2(a: f64, b: f64, c: f64) -> SymmetricEigen {
    let mean = 0.5 * (a + c);
    let radius = (0.5 * (a - c)).hypot(b);
    let theta = 0.5 * (2.0 * b).atan2(a - c);
    let (s, co) = theta.sin_cos();
    // Column 0: eigenvector of the smaller eigenvalue.
    let vectors = Matrix {
        dim: 2,
        data: vec![-s, co, co, s],
    };
    SymmetricEigen {
        values: vec![mean - radius, mean + radius],
        vectors,
    }
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.dim;
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

fn jacobi_eigen(m: &Matrix) -> Result<SymmetricEigen> {
    let n = m.dim;
    let mut a = m.clone();
    a.symmetrize();
    let mut v = Matrix::identity(n);
    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);
    let mut sweeps = 0;
    while off_diagonal_norm(&a) > JACOBI_TOL * scale {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(LmcError::Numeric(format!(
                "Jacobi eigensolver did not converge in {JACOBI_MAX_SWEEPS} sweeps"
            )));
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let tau = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for r in 0..n {
            vectors[(r, new_col)] = v[(r, old_col)];
        }
    }
    Ok(SymmetricEigen { values, vectors })
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &Matrix) -> Result<f64> {
    m.require_symmetric()?;
    if m.dim == 2 {
        let (a, b, c) = (m[(0, 0)], 0.5 * (m[(0, 1)] + m[(1, 0)]), m[(1, 1)]);
        return Ok(0.5 * (a + c) - (0.5 * (a - c)).hypot(b));
    }
    let eig = symmetric_eigen(m)?;
    eig.values
        .first()
        .copied()
        .ok_or_else(|| LmcError::Domain("empty matrix".into()))
}

/// Principal square root `S` with `S S = m`, `S` symmetric positive definite.
pub fn spectral_sqrt(m: &SpdMatrix) -> Result<SpdMatrix> {
    let eig = symmetric_eigen(m.matrix())?;
    if let Some(&lo) = eig.values.first() {
        if !(lo > 0.0) {
            return Err(LmcError::Domain(format!(
                "spectral_sqrt needs positive eigenvalues, smallest is {lo:e}"
            )));
        }
    }
    SpdMatrix::new(eig.reconstruct_with(f64::sqrt))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scaled(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|v| v.is_finite())
}

/// Largest absolute difference between two vectors.
pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_of_identity_and_diagonal() {
        let s = spectral_sqrt(&SpdMatrix::identity(2)).unwrap();
        assert!(max_abs_diff(s.matrix().as_slice(), Matrix::identity(2).as_slice()) < 1e-15);
        let d = SpdMatrix::new(Matrix::diag(&[4.0, 9.0])).unwrap();
        let s = spectral_sqrt(&d).unwrap();
        assert!(max_abs_diff(s.matrix().as_slice(), &[2.0, 0.0, 0.0, 3.0]) < 1e-14);
    }

    #[test]
    fn rejects_non_symmetric_and_indefinite() {
        let ns = Matrix::from_rows(&[vec![1.0, 0.5], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(SpdMatrix::new(ns.clone()), Err(LmcError::Domain(_))));
        assert!(min_eigenvalue(&ns).is_err());
        let indef = Matrix::diag(&[1.0, -3.0]);
        assert!(SpdMatrix::new(indef).is_err());
    }

    #[test]
    fn min_eigenvalue_simple_cases() {
        assert_eq!(min_eigenvalue(&Matrix::diag(&[1.0, -3.0])).unwrap(), -3.0);
        for d in 1..6 {
            assert!((min_eigenvalue(&Matrix::identity(d)).unwrap() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn diagonal_solve() {
        let m = SpdMatrix::new(Matrix::diag(&[2.0, 4.0])).unwrap();
        let z = solve_spd(&m, &[2.0, 4.0]).unwrap();
        assert!(max_abs_diff(&z, &[1.0, 1.0]) < 1e-15);
        let b = [0.3, -1.7];
        assert_eq!(solve_spd(&SpdMatrix::identity(2), &b).unwrap(), b.to_vec());
        assert!(solve_spd(&m, &[1.0]).is_err());
    }

    #[test]
    fn eigenvectors_2x2_are_consistent() {
        let m = Matrix::from_rows(&[vec![1.0, -0.5], vec![-0.5, 1.0]]).unwrap();
        let e = symmetric_eigen(&m).unwrap();
        assert!((e.values[0] - 0.5).abs() < 1e-15);
        assert!((e.values[1] - 1.5).abs() < 1e-15);
        let back = e.reconstruct_with(|l| l);
        assert!(max_abs_diff(back.as_slice(), m.as_slice()) < 1e-15);
    }

    #[test]
    fn jacobi_handles_already_diagonal() {
        let m = Matrix::diag(&[3.0, -1.0, 2.0, 0.5]);
        let e = symmetric_eigen(&m).unwrap();
        assert_eq!(e.values, vec![-1.0, 0.5, 2.0, 3.0]);
    }

    #[test]
    fn log_det_and_inverse() {
        let m = SpdMatrix::from_rows(&[vec![1.0, 0.1], vec![0.1, 0.5]]).unwrap();
        assert!((m.log_det() - (0.5_f64 - 0.01).ln()).abs() < 1e-14);
        let prod = m.matrix().mul_mat(&m.inverse());
        assert!(max_abs_diff(prod.as_slice(), Matrix::identity(2).as_slice()) < 1e-14);
    }
}
