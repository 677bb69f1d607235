//! Dense symmetric eigensolvers. Large problems go through faer, which is
//! several times faster than nalgebra's implicit QR at the sizes used here.

use faer::{Mat, Side};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, thiserror::Error)]
#[error("symmetric eigensolver did not converge (n = {0})")]
pub struct EigenError(pub usize);

/// Eigenvalues (ascending) and column eigenvectors of a real symmetric matrix.
/// Only the lower triangle is read.
pub fn sym_eigen(a: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>), EigenError> {
    let n = a.nrows();
    if n == 0 {
        return Ok((DVector::zeros(0), DMatrix::zeros(0, 0)));
    }
    let m = Mat::<f64>::from_fn(n, n, |i, j| a[(i, j)]);
    let e = m.self_adjoint_eigen(Side::Lower).map_err(|_| EigenError(n))?;
    let s = e.S();
    let u = e.U();
    let vals = DVector::from_fn(n, |i, _| s[i]);
    let vecs = DMatrix::from_fn(n, n, |i, j| u[(i, j)]);
    Ok((vals, vecs))
}

/// Eigenvalues only, ascending.
pub fn sym_eigenvalues(a: &DMatrix<f64>) -> Result<Vec<f64>, EigenError> {
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let m = Mat::<f64>::from_fn(n, n, |i, j| a[(i, j)]);
    m.self_adjoint_eigenvalues(Side::Lower).map_err(|_| EigenError(n))
}
