//! Implicitly orthogonal spectral objective.
//!
//! `J(Y) = Tr(R⁻¹ YᵀLY R⁻ᵀ)` with `R = chol(YᵀY)`, which equals the quotient
//! `Tr((YᵀY)⁻¹ YᵀLY)` and therefore only depends on the column span of `Y`.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::spd::{sym_eig, SpdMatrix};

/// Number of ×10 jitter escalations tried after a failed Gram factorization.
const JITTER_ESCALATIONS: usize = 3;

/// Lower Cholesky factor of a small dense SPD matrix, or `None` if a pivot
/// is not strictly positive.
pub fn cholesky_lower(a: &Array2<f64>) -> Option<Array2<f64>> {
    let n = a.nrows();
    let mut r = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut diag = a[[j, j]];
        for k in 0..j {
            diag -= r[[j, k]] * r[[j, k]];
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return None;
        }
        let d = diag.sqrt();
        r[[j, j]] = d;
        for i in (j + 1)..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= r[[i, k]] * r[[j, k]];
            }
            r[[i, j]] = s / d;
        }
    }
    Some(r)
}

/// Inverse of a lower-triangular matrix with nonzero diagonal.
pub fn invert_lower(r: &Array2<f64>) -> Array2<f64> {
    let n = r.nrows();
    let mut inv = Array2::<f64>::zeros((n, n));
    for col in 0..n {
        inv[[col, col]] = 1.0 / r[[col, col]];
        for i in (col + 1)..n {
            let mut s = 0.0;
            for k in col..i {
                s -= r[[i, k]] * inv[[k, col]];
            }
            inv[[i, col]] = s / r[[i, i]];
        }
    }
    inv
}

/// `Y R⁻ᵀ` for lower-triangular `R`, by forward substitution on each row.
pub fn right_solve_lower_transpose(y: &Array2<f64>, r: &Array2<f64>) -> Array2<f64> {
    let k = r.nrows();
    let mut out = y.clone();
    for mut row in out.outer_iter_mut() {
        for j in 0..k {
            let mut s = row[j];
            for l in 0..j {
                s -= r[[j, l]] * row[l];
            }
            row[j] = s / r[[j, j]];
        }
    }
    out
}

/// Cholesky factor of the Gram matrix `YᵀY`, escalating a diagonal jitter
/// `(rel × tr/K)·I` by ×10 when the plain factorization fails.
pub fn gram_cholesky(y: ArrayView2<'_, f64>, jitter: f64) -> Result<Array2<f64>> {
    let gram = y.t().dot(&y);
    if let Some(r) = cholesky_lower(&gram) {
        return Ok(r);
    }
    let k = gram.nrows().max(1) as f64;
    let base = jitter * gram.diag().sum() / k;
    let mut amount = base;
    for _ in 0..JITTER_ESCALATIONS {
        if amount > 0.0 {
            let mut shifted = gram.clone();
            shifted.diag_mut().mapv_inplace(|d| d + amount);
            if let Some(r) = cholesky_lower(&shifted) {
                log::debug!("Gram matrix factored with jitter {amount:e}");
                return Ok(r);
            }
        }
        amount *= 10.0;
    }
    let smallest = sym_eig(gram.view())
        .map(|e| e.values[0])
        .unwrap_or(f64::NAN);
    Err(Error::RankDeficient {
        smallest_gram_eigenvalue: smallest,
    })
}

fn check_shapes(y: ArrayView2<'_, f64>, l: &SpdMatrix) -> Result<()> {
    if y.nrows() != l.dim() {
        return Err(Error::invalid(format!(
            "embedding has {} rows but the Laplacian is {}x{}",
            y.nrows(),
            l.dim(),
            l.dim()
        )));
    }
    if y.ncols() == 0 || y.ncols() > y.nrows() {
        return Err(Error::invalid(format!(
            "embedding must satisfy 1 <= K <= N, got N={}, K={}",
            y.nrows(),
            y.ncols()
        )));
    }
    Ok(())
}

/// Objective value and the Cholesky factor `R` of `YᵀY`.
pub fn loss(y: ArrayView2<'_, f64>, l: &SpdMatrix, jitter: f64) -> Result<(f64, Array2<f64>)> {
    check_shapes(y, l)?;
    let r = gram_cholesky(y, jitter)?;
    let ly = l.as_array().dot(&y);
    Ok((trace_objective(y, &ly, &r), r))
}

fn trace_objective(y: ArrayView2<'_, f64>, ly: &Array2<f64>, r: &Array2<f64>) -> f64 {
    let inner = y.t().dot(ly);
    let r_inv = invert_lower(r);
    let c = r_inv.dot(&inner).dot(&r_inv.t());
    c.diag().sum()
}

/// `∂J/∂Y = 2(L Y D̄ − Y D̄ YᵀLY D̄)` with `D̄ = R⁻ᵀR⁻¹`.
pub fn loss_jacobian(y: ArrayView2<'_, f64>, l: &SpdMatrix, r: &Array2<f64>) -> Result<Array2<f64>> {
    check_shapes(y, l)?;
    if r.dim() != (y.ncols(), y.ncols()) {
        return Err(Error::invalid(format!(
            "Cholesky factor is {:?}, expected {}x{}",
            r.dim(),
            y.ncols(),
            y.ncols()
        )));
    }
    let ly = l.as_array().dot(&y);
    Ok(jacobian_from_parts(y, &ly, r))
}

fn jacobian_from_parts(y: ArrayView2<'_, f64>, ly: &Array2<f64>, r: &Array2<f64>) -> Array2<f64> {
    let r_inv = invert_lower(r);
    let d_bar = r_inv.t().dot(&r_inv);
    let ly_d = ly.dot(&d_bar);
    let inner = y.t().dot(ly);
    let correction = y.dot(&d_bar.dot(&inner).dot(&d_bar));
    (ly_d - correction) * 2.0
}

/// Objective and Jacobian from a single `L·Y` product.
pub(crate) struct Evaluation {
    pub value: f64,
    pub jacobian: Array2<f64>,
}

pub(crate) fn evaluate(y: ArrayView2<'_, f64>, l: &SpdMatrix, jitter: f64) -> Result<Evaluation> {
    check_shapes(y, l)?;
    let factor = gram_cholesky(y, jitter)?;
    let ly = l.as_array().dot(&y);
    Ok(Evaluation {
        value: trace_objective(y, &ly, &factor),
        jacobian: jacobian_from_parts(y, &ly, &factor),
    })
}
