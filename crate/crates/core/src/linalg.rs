//! Small dense symmetric linear algebra.
//!
//! Dimensions in this crate stay in the single digits to low tens, so
//! everything is plain row-major `Vec<f64>` storage with O(d²) rank-1
//! updates and O(d³) factorizations.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Relative tolerance used when validating symmetry of user input.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Number of rank-1 updates after which the inverse and log-determinant
/// are recomputed from scratch.
pub const REFACTOR_EVERY: usize = 1000;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scaled(a: &[f64], c: f64) -> Vec<f64> {
    a.iter().map(|x| c * x).collect()
}

/// `y += c * x`
pub fn axpy(y: &mut [f64], c: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += c * xi;
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return invalid(format!("dimension mismatch: expected {expected}, got {got}"));
    }
    Ok(())
}

/// Dense symmetric matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn scaled_identity(dim: usize, c: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = c;
        }
        m
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, v) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = *v;
        }
        m
    }

    /// Builds a matrix from rows, rejecting non-square or asymmetric input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return invalid("matrix must have dimension >= 1");
        }
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            check_dim(dim, row.len())?;
            data.extend_from_slice(row);
        }
        let m = Self { dim, data };
        if !m.is_symmetric(SYMMETRY_TOL) {
            return invalid("matrix is not symmetric");
        }
        Ok(m)
    }

    /// Outer-product sum `Σ c_k x_k x_kᵀ`.
    pub fn from_outer_products<'a, I>(dim: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, &'a [f64])>,
    {
        let mut m = Self::zeros(dim);
        for (c, x) in terms {
            m.add_outer(c, x)?;
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        let scale = self.max_abs().max(1.0);
        (0..self.dim).all(|i| {
            (i + 1..self.dim).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= rel_tol * scale)
        })
    }

    /// Replaces the matrix with `(M + Mᵀ) / 2`.
    pub fn symmetrize(&mut self) {
        let n = self.dim;
        for i in 0..n {
            for j in i + 1..n {
                let avg = 0.5 * (self.data[i * n + j] + self.data[j * n + i]);
                self.data[i * n + j] = avg;
                self.data[j * n + i] = avg;
            }
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, x.len())?;
        Ok(self.data.chunks(self.dim).map(|row| dot(row, x)).collect())
    }

    /// `xᵀ M x`
    pub fn quad_form(&self, x: &[f64]) -> Result<f64> {
        Ok(dot(x, &self.mul_vec(x)?))
    }

    /// `xᵀ M y`
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        Ok(dot(x, &self.mul_vec(y)?))
    }

    /// `M += c x xᵀ`
    pub fn add_outer(&mut self, c: f64, x: &[f64]) -> Result<()> {
        check_dim(self.dim, x.len())?;
        let n = self.dim;
        for i in 0..n {
            let cxi = c * x[i];
            for j in 0..n {
                self.data[i * n + j] += cxi * x[j];
            }
        }
        Ok(())
    }

    /// `M + c I`
    pub fn shifted(&self, c: f64) -> Self {
        let mut m = self.clone();
        for i in 0..self.dim {
            m.data[i * self.dim + i] += c;
        }
        m
    }

    pub fn add(&self, other: &SymMatrix) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        Ok(Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|v| c * v).collect(),
        }
    }

    /// Lower-triangular Cholesky factor, or `None` when the matrix is not
    /// numerically positive definite.
    pub fn cholesky(&self) -> Option<Vec<f64>> {
        let n = self.dim;
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return None;
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Some(l)
    }

    /// Inverse and natural log-determinant through a Cholesky factorization.
    pub fn inverse_and_log_det(&self) -> Result<(SymMatrix, f64)> {
        let n = self.dim;
        let l = self
            .cholesky()
            .ok_or_else(|| Error::InvalidState("matrix is not positive definite".into()))?;
        let log_det = 2.0 * (0..n).map(|i| l[i * n + i].ln()).sum::<f64>();
        // Invert L column by column, then A⁻¹ = L⁻ᵀ L⁻¹.
        let mut linv = vec![0.0; n * n];
        for c in 0..n {
            for i in c..n {
                let mut s = if i == c { 1.0 } else { 0.0 };
                for k in c..i {
                    s -= l[i * n + k] * linv[k * n + c];
                }
                linv[i * n + c] = s / l[i * n + i];
            }
        }
        let mut inv = SymMatrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let s: f64 = (i..n).map(|k| linv[k * n + i] * linv[k * n + j]).sum();
                inv.data[i * n + j] = s;
                inv.data[j * n + i] = s;
            }
        }
        Ok((inv, log_det))
    }

    /// Solves `M x = b` for positive definite `M`.
    pub fn solve_pd(&self, b: &[f64]) -> Result<Vec<f64>> {
        let (inv, _) = self.inverse_and_log_det()?;
        inv.mul_vec(b)
    }
}

/// A positive definite matrix together with its maintained inverse and
/// log-determinant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosDefState {
    matrix: SymMatrix,
    inverse: SymMatrix,
    log_det: f64,
    updates_since_refactor: usize,
}

impl PosDefState {
    /// `λ I` with inverse `I / λ`.
    pub fn new(dim: usize, lambda: f64) -> Result<Self> {
        if dim == 0 {
            return invalid("dimension must be >= 1");
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return invalid(format!("regularization must be positive, got {lambda}"));
        }
        Ok(Self {
            matrix: SymMatrix::scaled_identity(dim, lambda),
            inverse: SymMatrix::scaled_identity(dim, 1.0 / lambda),
            log_det: dim as f64 * lambda.ln(),
            updates_since_refactor: 0,
        })
    }

    /// Wraps an arbitrary positive definite matrix.
    pub fn from_matrix(matrix: SymMatrix) -> Result<Self> {
        let (inverse, log_det) = matrix.inverse_and_log_det()?;
        Ok(Self {
            matrix,
            inverse,
            log_det,
            updates_since_refactor: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.matrix
    }

    pub fn inverse(&self) -> &SymMatrix {
        &self.inverse
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// `A ← A + x xᵀ`, keeping the inverse current with the
    /// Sherman–Morrison identity.
    pub fn rank1_update(&mut self, x: &[f64]) -> Result<()> {
        check_dim(self.dim(), x.len())?;
        if x.iter().all(|v| *v == 0.0) {
            return Ok(());
        }
        let n = self.dim();
        let ax = self.inverse.mul_vec(x)?;
        let denom = 1.0 + dot(x, &ax);
        self.matrix.add_outer(1.0, x)?;
        self.matrix.symmetrize();
        self.log_det += denom.ln();
        for i in 0..n {
            for j in 0..n {
                self.inverse.data[i * n + j] -= ax[i] * ax[j] / denom;
            }
        }
        self.inverse.symmetrize();
        self.updates_since_refactor += 1;
        if self.updates_since_refactor >= REFACTOR_EVERY {
            self.refactor()?;
        }
        Ok(())
    }

    /// Recomputes the inverse and log-determinant from the matrix.
    pub fn refactor(&mut self) -> Result<()> {
        let (inverse, log_det) = self.matrix.inverse_and_log_det()?;
        self.inverse = inverse;
        self.log_det = log_det;
        self.updates_since_refactor = 0;
        Ok(())
    }

    /// `xᵀ A⁻¹ x`
    pub fn inv_quad(&self, x: &[f64]) -> Result<f64> {
        Ok(self.inverse.quad_form(x)?.max(0.0))
    }

    /// Mahalanobis norm `‖x‖_{A⁻¹}`.
    pub fn mahalanobis_inv(&self, x: &[f64]) -> Result<f64> {
        Ok(self.inv_quad(x)?.sqrt())
    }

    /// Mahalanobis norm `‖x‖_A`.
    pub fn mahalanobis(&self, x: &[f64]) -> Result<f64> {
        Ok(self.matrix.quad_form(x)?.max(0.0).sqrt())
    }

    /// `A⁻¹ b`
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.inverse.mul_vec(b)
    }
}

/// Smallest eigenvalue of a symmetric matrix by cyclic Jacobi rotations.
pub fn min_eigenvalue(m: &SymMatrix) -> Result<f64> {
    Ok(eigenvalues(m)?.into_iter().fold(f64::INFINITY, f64::min))
}

/// All eigenvalues (unsorted) of a symmetric matrix.
pub fn eigenvalues(m: &SymMatrix) -> Result<Vec<f64>> {
    if !m.is_symmetric(1e-9) {
        return invalid("eigenvalues require a symmetric matrix");
    }
    let n = m.dim();
    let mut a = m.as_slice().to_vec();
    let frob = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let tol = 1e-14 * frob.max(1.0);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off < tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    Ok((0..n).map(|i| a[i * n + i]).collect())
}
