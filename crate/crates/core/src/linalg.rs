//! Root-free symmetric factorization and the few dense helpers built on it.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Pivots at or below this value are treated as a failed positive-definiteness check.
pub const PIVOT_TOL: f64 = 1e-12;

/// `A = L D L'` with `L` unit lower triangular.
#[derive(Debug, Clone)]
pub struct Ldl {
    pub lower: DMatrix<f64>,
    pub diag: DVector<f64>,
}

impl Ldl {
    pub fn log_det(&self) -> f64 {
        self.diag.iter().map(|d| d.ln()).sum()
    }
}

/// Factors a symmetric matrix without square roots. Only the lower triangle is read.
pub fn ldl(a: &DMatrix<f64>) -> Result<Ldl> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::usage(format!(
            "expected a square matrix, got {}x{}",
            n,
            a.ncols()
        )));
    }
    let mut lower = DMatrix::<f64>::identity(n, n);
    let mut diag = DVector::<f64>::zeros(n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= lower[(j, k)] * lower[(j, k)] * diag[k];
        }
        if !(d > PIVOT_TOL) {
            return Err(Error::NotPositiveDefinite { index: j, pivot: d });
        }
        diag[j] = d;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= lower[(i, k)] * lower[(j, k)] * diag[k];
            }
            lower[(i, j)] = s / d;
        }
    }
    Ok(Ldl { lower, diag })
}

/// Log-determinant of a symmetric positive definite matrix.
pub fn log_det_spd(a: &DMatrix<f64>) -> Result<f64> {
    Ok(ldl(a)?.log_det())
}

/// Rows and columns of `a` picked by `idx`, in that order.
pub fn submatrix(a: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |r, c| a[(idx[r], idx[c])])
}

pub fn is_symmetric(a: &DMatrix<f64>, tol: f64) -> bool {
    if a.nrows() != a.ncols() {
        return false;
    }
    let n = a.nrows();
    (0..n).all(|i| (0..i).all(|j| (a[(i, j)] - a[(j, i)]).abs() <= tol * (1.0 + a[(i, j)].abs())))
}

/// Checks symmetry and positive definiteness together.
pub fn check_spd(a: &DMatrix<f64>, what: &str) -> Result<()> {
    if !is_symmetric(a, 1e-12) {
        return Err(Error::usage(format!("{what} is not symmetric")));
    }
    ldl(a).map(|_| ())
}
