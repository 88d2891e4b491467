//! Small dense linear-algebra helpers shared across modules.

use nalgebra::{DMatrix, DVector};

use crate::scalar::Scalar;

/// Largest absolute entry, as `f64`.
pub fn max_abs<T: Scalar>(m: &DMatrix<T>) -> f64 {
    m.iter().map(|v| v.abs().as_f64()).fold(0.0, f64::max)
}

/// `max_{ij} |a_ij - b_ij|`.
pub fn max_abs_diff<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (*x - *y).abs().as_f64()).fold(0.0, f64::max)
}

/// (smallest, largest) eigenvalue of a symmetric matrix.
pub fn symmetric_eigen_range<T: Scalar>(m: &DMatrix<T>) -> (f64, f64) {
    if m.nrows() == 0 {
        return (0.0, 0.0);
    }
    let sym = m.map(|v| v.as_f64());
    let sym = (&sym + sym.transpose()) * 0.5;
    let ev = sym.symmetric_eigenvalues();
    (ev.min(), ev.max())
}

/// Max absolute column sum.
pub fn norm_1<T: Scalar>(m: &DMatrix<T>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs().as_f64()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Max absolute row sum.
pub fn norm_inf<T: Scalar>(m: &DMatrix<T>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs().as_f64()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn is_symmetric<T: Scalar>(m: &DMatrix<T>, tol: f64) -> bool {
    m.is_square() && max_abs_diff(m, &m.transpose()) <= tol
}

/// Minimum-norm least squares via SVD. Returns the solution and whether the
/// design was numerically rank deficient.
pub fn lstsq_min_norm(x: &DMatrix<f64>, y: &DVector<f64>) -> (DVector<f64>, bool) {
    if x.ncols() == 0 {
        return (DVector::zeros(0), false);
    }
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = f64::EPSILON * x.nrows().max(x.ncols()) as f64 * smax;
    let rank = svd.singular_values.iter().filter(|&&s| s > eps).count();
    let sol = svd.solve(y, eps).unwrap_or_else(|_| DVector::zeros(x.ncols()));
    (sol, rank < x.ncols())
}
