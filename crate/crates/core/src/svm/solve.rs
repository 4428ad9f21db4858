use faer::linalg::solvers::Solve;
use faer::{Mat, MatRef, Side};
use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Solves `(K + ridge·I) A = Y` for every column of `Y` with one Cholesky
/// factorization.
pub(crate) fn solve_regularized(k: MatRef<'_, f64>, y: MatRef<'_, f64>, ridge: f64) -> Result<Mat<f64>> {
    let n = k.nrows();
    let mut a = k.to_owned();
    for i in 0..n {
        a[(i, i)] += ridge;
    }
    let llt = a
        .as_ref()
        .llt(Side::Lower)
        .map_err(|e| Error::Solver(format!("cholesky of K + {ridge:e} I failed: {e:?}")))?;
    Ok(llt.solve(y))
}

/// Coefficients of the kernel expansion minimizing
/// `λ ‖f‖²_H + (1/n) Σ (yᵢ - f(xᵢ))²`, i.e. the solution of
/// `(K + nλI) α = y`.
pub fn solve_ls_svm(k: &DMatrix<f64>, y: &[f64], lambda: f64, n: usize) -> Result<Vec<f64>> {
    if k.nrows() != k.ncols() || k.nrows() != y.len() || n != y.len() {
        return Err(Error::DimensionMismatch {
            expected: k.nrows(),
            got: y.len(),
        });
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be > 0, got {lambda}")));
    }
    let kf = Mat::<f64>::from_fn(n, n, |i, j| k[(i, j)]);
    let yf = Mat::<f64>::from_fn(n, 1, |i, _| y[i]);
    let alpha = solve_regularized(kf.as_ref(), yf.as_ref(), n as f64 * lambda)?;
    Ok((0..n).map(|i| alpha[(i, 0)]).collect())
}

/// The regularized empirical risk `λ αᵀKα + (1/n) ‖Kα - y‖²` of the
/// expansion with coefficients `alpha`.
pub fn ls_svm_objective(k: &DMatrix<f64>, alpha: &[f64], y: &[f64], lambda: f64) -> f64 {
    let a = nalgebra::DVector::from_column_slice(alpha);
    let ka = k * &a;
    let n = y.len() as f64;
    let fit: f64 = ka.iter().zip(y).map(|(f, t)| (t - f) * (t - f)).sum();
    lambda * a.dot(&ka) + fit / n
}
