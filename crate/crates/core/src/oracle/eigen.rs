//! Dense real-symmetric eigenproblems on top of `nalgebra`, with eigenvalues
//! returned in ascending order and eigenvectors as matching columns.

use nalgebra::{DMatrix, SymmetricEigen as NaSymmetricEigen};

use crate::error::{RabiError, Result};

/// Row-major dense square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), n, "matrix must be square");
            m.data[i * n..(i + 1) * n].copy_from_slice(r);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    /// Sets `(i, j)` and `(j, i)`.
    pub fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.set(i, j, v);
        self.set(j, i, v);
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| {
                self.data[i * self.n..(i + 1) * self.n]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// Max absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.data[i * self.n..(i + 1) * self.n].iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// True if every entry beyond the first off-diagonals is zero.
    pub fn is_tridiagonal(&self) -> bool {
        for i in 0..self.n {
            for j in 0..self.n {
                if i.abs_diff(j) > 1 && self.get(i, j) != 0.0 {
                    return false;
                }
            }
        }
        true
    }
}

/// Eigenpairs of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector of `values[k]`, when requested.
    pub vectors: Option<DenseMatrix>,
}

/// QR sweeps allowed per eigenvalue before giving up.
const MAX_SWEEPS_PER_VALUE: usize = 60;

fn empty(want_vectors: bool) -> SymmetricEigen {
    SymmetricEigen {
        values: Vec::new(),
        vectors: want_vectors.then(|| DenseMatrix::zeros(0)),
    }
}

/// Eigen-decomposition of a dense symmetric matrix.
pub fn symmetric_eigen(m: &DenseMatrix, want_vectors: bool) -> Result<SymmetricEigen> {
    let n = m.dim();
    if n == 0 {
        return Ok(empty(want_vectors));
    }
    let a = DMatrix::from_row_slice(n, n, &m.data);
    let eig = NaSymmetricEigen::try_new(a, f64::EPSILON, MAX_SWEEPS_PER_VALUE * n).ok_or(
        RabiError::NoConvergence {
            what: "symmetric eigensolver",
            iterations: MAX_SWEEPS_PER_VALUE * n,
        },
    )?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = want_vectors.then(|| {
        let mut v = DenseMatrix::zeros(n);
        for (k, &src) in order.iter().enumerate() {
            for r in 0..n {
                v.set(r, k, eig.eigenvectors[(r, src)]);
            }
        }
        v
    });
    Ok(SymmetricEigen { values, vectors })
}

/// Eigen-decomposition of the symmetric tridiagonal matrix with diagonal
/// `diag` and off-diagonal `off` (`off[i]` couples `i` and `i + 1`).
pub fn tridiagonal_eigen(diag: &[f64], off: &[f64], want_vectors: bool) -> Result<SymmetricEigen> {
    let n = diag.len();
    if n == 0 {
        return Ok(empty(want_vectors));
    }
    assert_eq!(off.len() + 1, n, "off-diagonal must have n - 1 entries");
    let mut m = DenseMatrix::zeros(n);
    for (i, &d) in diag.iter().enumerate() {
        m.set(i, i, d);
    }
    for (i, &e) in off.iter().enumerate() {
        m.set_sym(i, i + 1, e);
    }
    symmetric_eigen(&m, want_vectors)
}
