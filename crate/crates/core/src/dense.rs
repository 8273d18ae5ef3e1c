//! Dense kernels delegated to faer: symmetric eigendecomposition, Cholesky
//! certification and large matrix products.

use faer::{Mat, MatRef, Side};
use ndarray::{Array1, Array2, ArrayView2};

/// Products whose `m·k·n` is below this stay on ndarray's own kernel.
const FAER_PRODUCT_THRESHOLD: usize = 1 << 18;

fn to_faer(a: ArrayView2<'_, f64>) -> Mat<f64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

fn from_faer(m: MatRef<'_, f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Ascending eigenvalues and eigenvectors (as columns) of a symmetric matrix,
/// read from its lower triangle. `None` if the solver fails.
pub(crate) fn self_adjoint_eigen(a: ArrayView2<'_, f64>) -> Option<(Array1<f64>, Array2<f64>)> {
    let n = a.nrows();
    if n == 0 {
        return Some((Array1::zeros(0), Array2::zeros((0, 0))));
    }
    let eig = to_faer(a).self_adjoint_eigen(Side::Lower).ok()?;
    let s = eig.S().column_vector();
    let values = Array1::from_shape_fn(n, |i| s[i]);
    Some((values, from_faer(eig.U())))
}

/// True when the symmetric matrix has a Cholesky factorization.
pub(crate) fn cholesky_succeeds(a: ArrayView2<'_, f64>) -> bool {
    a.nrows() == 0 || to_faer(a).llt(Side::Lower).is_ok()
}

/// `a · b`.
pub(crate) fn matmul(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Array2<f64> {
    if a.nrows() * a.ncols() * b.ncols() < FAER_PRODUCT_THRESHOLD {
        return a.dot(&b);
    }
    let p = to_faer(a) * to_faer(b);
    from_faer(p.as_ref())
}
