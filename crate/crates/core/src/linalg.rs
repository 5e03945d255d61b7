//! Cholesky factorizations of kernel Gram matrices.

use nalgebra::{Cholesky, DMatrix, Dyn, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Diagonal jitter escalation, relative to the mean diagonal of the matrix.
///
/// Tries `start`, `start * factor`, ... up to and including `max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JitterPolicy {
    pub start: f64,
    pub factor: f64,
    pub max: f64,
}

impl Default for JitterPolicy {
    fn default() -> Self {
        Self { start: 1e-10, factor: 10.0, max: 1e-4 }
    }
}

impl JitterPolicy {
    /// Relative jitter levels in the order they are tried.
    pub fn levels(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut level = self.start;
        // Allow for rounding in the repeated multiplication.
        while level <= self.max * (1.0 + 1e-9) {
            out.push(level);
            level *= self.factor;
        }
        out
    }
}

/// A Cholesky factor together with the absolute jitter that was added.
pub struct JitteredCholesky {
    pub factor: Cholesky<f64, Dyn>,
    pub jitter: f64,
}

pub fn mean_diagonal(mat: &DMatrix<f64>) -> f64 {
    if mat.nrows() == 0 {
        return 0.0;
    }
    mat.trace() / mat.nrows() as f64
}

/// Smallest eigenvalue of the symmetric part of `mat`.
pub fn min_eigenvalue(mat: &DMatrix<f64>) -> f64 {
    let sym = (mat + mat.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Factor `mat + jitter * I`, escalating the jitter per `policy`.
pub fn jittered_cholesky(mat: &DMatrix<f64>, policy: &JitterPolicy) -> Result<JitteredCholesky> {
    let n = mat.nrows();
    if n == 0 || n != mat.ncols() {
        return Err(Error::InvalidMatrix(format!("expected a non-empty square matrix, got {}x{}", n, mat.ncols())));
    }
    let scale = mean_diagonal(mat);
    if scale > 0.0 && scale.is_finite() {
        for level in policy.levels() {
            let jitter = level * scale;
            let mut shifted = mat.clone();
            for i in 0..n {
                shifted[(i, i)] += jitter;
            }
            if let Some(factor) = Cholesky::new(shifted) {
                return Ok(JitteredCholesky { factor, jitter });
            }
        }
    }
    Err(Error::NotPsd { min_eigenvalue: min_eigenvalue(mat) })
}

/// Diagonally pivoted Cholesky factor `L` (n × r) with `L Lᵀ ≈ mat`.
///
/// Elimination stops once every remaining Schur-complement diagonal is at or
/// below `tol`, so a rank-deficient matrix yields a factor with exactly its
/// numerical rank and no added noise. A remaining diagonal below `-neg_tol`
/// means the matrix is indefinite.
pub fn pivoted_cholesky(mat: &DMatrix<f64>, tol: f64, neg_tol: f64) -> Result<DMatrix<f64>> {
    let n = mat.nrows();
    if n != mat.ncols() {
        return Err(Error::InvalidMatrix(format!("expected a square matrix, got {}x{}", n, mat.ncols())));
    }
    let mut residual: Vec<f64> = (0..n).map(|i| mat[(i, i)]).collect();
    let mut used = vec![false; n];
    let mut columns: Vec<Vec<f64>> = Vec::new();

    for _ in 0..n {
        let Some(p) = (0..n).filter(|&i| !used[i]).max_by(|&i, &j| residual[i].total_cmp(&residual[j])) else {
            break;
        };
        if residual[p] <= tol {
            break;
        }
        let pivot = residual[p].sqrt();
        let mut col = vec![0.0; n];
        col[p] = pivot;
        for i in 0..n {
            if used[i] || i == p {
                continue;
            }
            let mut s = mat[(i, p)];
            for c in &columns {
                s -= c[i] * c[p];
            }
            col[i] = s / pivot;
            residual[i] -= col[i] * col[i];
        }
        used[p] = true;
        residual[p] = 0.0;
        columns.push(col);
    }

    let worst = (0..n).filter(|&i| !used[i]).map(|i| residual[i]).fold(f64::INFINITY, f64::min);
    if worst < -neg_tol {
        return Err(Error::NotPsd { min_eigenvalue: min_eigenvalue(mat) });
    }

    let r = columns.len();
    Ok(DMatrix::from_fn(n, r, |i, j| columns[j][i]))
}
