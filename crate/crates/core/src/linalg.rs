//! Small dense square matrices and a banded Cholesky factorization.
//!
//! The dense type only needs to carry Hessians in dimension `n <= ~6`, so
//! everything is row-major `Vec<f64>` with cyclic Jacobi for eigenvalues.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::math::sqrt;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Matrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diag(&vec![1.0; dim])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    /// Builds a matrix from rows; every row must have `rows.len()` entries.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix { dim, data })
    }

    /// `u uᵀ` for a vector `u`.
    pub fn outer(u: &[f64]) -> Self {
        let dim = u.len();
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = u[i] * u[j];
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| crate::math::dot(self.row(i), v))
            .collect()
    }

    /// `zᵀ M z`.
    pub fn quad_form(&self, z: &[f64]) -> f64 {
        crate::math::dot(z, &self.mul_vec(z))
    }

    pub fn frobenius_norm(&self) -> f64 {
        sqrt(self.data.iter().map(|x| x * x).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Symmetric up to `tol * max|M_ij|`.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        (0..self.dim).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol * scale))
    }

    pub fn scaled(mut self, s: f64) -> Self {
        self.data.iter_mut().for_each(|x| *x *= s);
        self
    }

    pub fn add_assign_scaled(&mut self, other: &Matrix, s: f64) {
        debug_assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    /// Eigenvalues of a symmetric matrix in ascending order (cyclic Jacobi).
    pub fn symmetric_eigenvalues(&self) -> Vec<f64> {
        let n = self.dim;
        let mut a = self.clone();
        let scale = a.frobenius_norm();
        if scale == 0.0 {
            return vec![0.0; n];
        }
        for _sweep in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[(i, j)] * a[(i, j)])
                .sum();
            if sqrt(off) <= 1e-15 * scale {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[(p, q)];
                    if apq == 0.0 {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + sqrt(theta * theta + 1.0));
                    let c = 1.0 / sqrt(t * t + 1.0);
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
                }
            }
        }
        let mut ev: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.dim + j]
    }
}

/// Symmetric band matrix stored as its lower band: `band[i][k]` is entry
/// `(i, i - k)` for `k <= bandwidth`.
#[derive(Debug, Clone)]
pub(crate) struct BandMatrix {
    size: usize,
    bandwidth: usize,
    band: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(size: usize, bandwidth: usize) -> Self {
        BandMatrix {
            size,
            bandwidth,
            band: vec![0.0; size * (bandwidth + 1)],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bandwidth);
        i * (self.bandwidth + 1) + (i - j)
    }

    /// Adds `v` to entry `(i, j)` (and implicitly `(j, i)`).
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let s = self.slot(i, j);
        self.band[s] += v;
    }

    pub fn diag(&self, i: usize) -> f64 {
        self.band[self.slot(i, i)]
    }

    pub fn add_diag(&mut self, shift: f64) {
        for i in 0..self.size {
            let s = self.slot(i, i);
            self.band[s] += shift;
        }
    }

    /// In-place Cholesky `A = L Lᵀ`. Returns `None` when `A` is not
    /// numerically positive definite.
    pub fn cholesky(mut self) -> Option<BandCholesky> {
        let w = self.bandwidth;
        for i in 0..self.size {
            let j0 = i.saturating_sub(w);
            for j in j0..=i {
                let k0 = j0.max(j.saturating_sub(w));
                let mut sum = self.band[self.slot(i, j)];
                for k in k0..j {
                    sum -= self.band[self.slot(i, k)] * self.band[self.slot(j, k)];
                }
                if i == j {
                    if !(sum > 0.0) || !sum.is_finite() {
                        return None;
                    }
                    let s = self.slot(i, i);
                    self.band[s] = sqrt(sum);
                } else {
                    let s = self.slot(i, j);
                    self.band[s] = sum / self.band[self.slot(j, j)];
                }
            }
        }
        Some(BandCholesky { factor: self })
    }
}

pub(crate) struct BandCholesky {
    factor: BandMatrix,
}

impl BandCholesky {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let l = &self.factor;
        let w = l.bandwidth;
        let n = l.size;
        let mut y = rhs.to_vec();
        for i in 0..n {
            let mut sum = y[i];
            for k in i.saturating_sub(w)..i {
                sum -= l.band[l.slot(i, k)] * y[k];
            }
            y[i] = sum / l.band[l.slot(i, i)];
        }
        for i in (0..n).rev() {
            let mut sum = y[i];
            for k in i + 1..(i + w + 1).min(n) {
                sum -= l.band[l.slot(k, i)] * y[k];
            }
            y[i] = sum / l.band[l.slot(i, i)];
        }
        y
    }
}
