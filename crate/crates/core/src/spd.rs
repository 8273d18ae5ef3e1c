//! Symmetric-matrix calculus on the manifold of symmetric positive-definite
//! (SPD) matrices.
//!
//! Every matrix function here goes through one full symmetric
//! eigendecomposition `A = V diag(λ) Vᵀ`; `f(A) = V diag(f(λ)) Vᵀ`.
//! Inputs are symmetrized as `(A + Aᵀ)/2` before any decomposition.

use std::sync::OnceLock;

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::dense;

/// Largest eigenvalue accepted by [`spd_exp`]; `exp(709.78)` overflows f64.
const EXP_MAX_EIGENVALUE: f64 = 700.0;

/// Eigendecomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEig {
    /// Eigenvalues in ascending order.
    pub values: Array1<f64>,
    /// Orthonormal eigenvectors stored as columns, matching `values`.
    pub vectors: Array2<f64>,
}

impl SymEig {
    /// Builds `V diag(f(λ)) Vᵀ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> Array2<f64> {
        let scaled_values = self.values.mapv(f);
        let mut scaled = self.vectors.clone();
        for (mut col, &s) in scaled.axis_iter_mut(Axis(1)).zip(scaled_values.iter()) {
            col *= s;
        }
        let mut out = dense::matmul(scaled.view(), self.vectors.t());
        symmetrize_in_place(&mut out);
        out
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Eigendecomposition of a symmetric matrix with ascending eigenvalues.
pub fn sym_eig(a: ArrayView2<'_, f64>) -> Result<SymEig> {
    check_square(a, "sym_eig")?;
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure {
            context: "sym_eig",
            diagnostics: format!("{}; matrix has non-finite entries", diagnostics(a)),
        });
    }
    let sym = symmetrized(a);
    let (values, vectors) =
        dense::self_adjoint_eigen(sym.view()).ok_or_else(|| Error::NumericalFailure {
            context: "sym_eig",
            diagnostics: format!("eigensolver did not converge; {}", diagnostics(sym.view())),
        })?;
    Ok(SymEig { values, vectors })
}

/// A symmetric positive-definite matrix.
///
/// Construction symmetrizes the input and certifies definiteness. The
/// eigendecomposition is computed lazily and cached.
#[derive(Debug)]
pub struct SpdMatrix {
    matrix: Array2<f64>,
    eig: OnceLock<SymEig>,
}

impl Clone for SpdMatrix {
    fn clone(&self) -> Self {
        let eig = OnceLock::new();
        if let Some(e) = self.eig.get() {
            let _ = eig.set(e.clone());
        }
        SpdMatrix {
            matrix: self.matrix.clone(),
            eig,
        }
    }
}

impl PartialEq for SpdMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix
    }
}

impl SpdMatrix {
    /// Symmetrizes `a` and certifies that it is positive definite.
    pub fn new(a: Array2<f64>) -> Result<Self> {
        check_square(a.view(), "SpdMatrix::new")?;
        if a.nrows() == 0 {
            return Err(Error::invalid("SPD matrix must have positive dimension"));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("SPD matrix has non-finite entries"));
        }
        let mut matrix = a;
        symmetrize_in_place(&mut matrix);
        if !strictly_diagonally_dominant(matrix.view())
            && !dense::cholesky_succeeds(matrix.view())
        {
            return Err(Error::invalid(format!(
                "matrix is not positive definite ({})",
                diagnostics(matrix.view())
            )));
        }
        Ok(SpdMatrix {
            matrix,
            eig: OnceLock::new(),
        })
    }

    /// Builds the matrix `V diag(λ) Vᵀ` from a decomposition with positive λ.
    pub(crate) fn from_eig(eig: SymEig) -> Result<Self> {
        if eig.values.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::NumericalFailure {
                context: "SpdMatrix::from_eig",
                diagnostics: format!(
                    "eigenvalues outside (0, inf): min {:e}, max {:e}",
                    min_of(&eig.values),
                    max_of(&eig.values)
                ),
            });
        }
        let matrix = eig.reconstruct_with(|v| v);
        let cell = OnceLock::new();
        let _ = cell.set(eig);
        Ok(SpdMatrix { matrix, eig: cell })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.matrix.view()
    }

    pub fn into_array(self) -> Array2<f64> {
        self.matrix
    }

    /// Cached eigendecomposition.
    pub fn eig(&self) -> Result<&SymEig> {
        if let Some(e) = self.eig.get() {
            return Ok(e);
        }
        let e = sym_eig(self.matrix.view())?;
        if e.values[0] <= 0.0 {
            return Err(Error::NumericalFailure {
                context: "SpdMatrix::eig",
                diagnostics: format!(
                    "certified SPD matrix has eigenvalue {:e} after decomposition",
                    e.values[0]
                ),
            });
        }
        Ok(self.eig.get_or_init(|| e))
    }

    /// Principal square root.
    pub fn sqrt(&self) -> Result<Array2<f64>> {
        Ok(self.eig()?.reconstruct_with(f64::sqrt))
    }

    /// Inverse principal square root, from the same decomposition.
    pub fn inv_sqrt(&self) -> Result<Array2<f64>> {
        Ok(self.eig()?.reconstruct_with(|v| 1.0 / v.sqrt()))
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eig()?.values[0])
    }
}

/// Principal matrix logarithm `V diag(ln λ) Vᵀ`.
pub fn spd_log(a: &SpdMatrix) -> Result<Array2<f64>> {
    Ok(a.eig()?.reconstruct_with(f64::ln))
}

/// Matrix exponential of a symmetric matrix, `V diag(exp λ) Vᵀ`.
pub fn spd_exp(s: ArrayView2<'_, f64>) -> Result<SpdMatrix> {
    let eig = sym_eig(s)?;
    let max = max_of(&eig.values);
    let min = min_of(&eig.values);
    if max > EXP_MAX_EIGENVALUE || min < -EXP_MAX_EIGENVALUE {
        return Err(Error::NumericalFailure {
            context: "spd_exp",
            diagnostics: format!(
                "eigenvalue range [{min:e}, {max:e}] exceeds +/-{EXP_MAX_EIGENVALUE}; exp would overflow"
            ),
        });
    }
    SpdMatrix::from_eig(SymEig {
        values: eig.values.mapv(f64::exp),
        vectors: eig.vectors,
    })
}

/// Squared affine-invariant Riemannian distance `‖Log(A^{-1/2} B A^{-1/2})‖_F²`.
pub fn riemann_dist(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::invalid(format!(
            "riemann_dist dimension mismatch: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    let a_inv_sqrt = a.inv_sqrt()?;
    let whitened = congruence(&a_inv_sqrt, b.as_array());
    let eig = sym_eig(whitened.view())?;
    if eig.values[0] <= 0.0 {
        return Err(Error::NumericalFailure {
            context: "riemann_dist",
            diagnostics: format!(
                "whitened matrix lost definiteness (min eigenvalue {:e})",
                eig.values[0]
            ),
        });
    }
    Ok(eig.values.iter().map(|v| v.ln().powi(2)).sum())
}

/// `S M S` for symmetric `S`, symmetrized.
pub fn congruence(s: &Array2<f64>, m: &Array2<f64>) -> Array2<f64> {
    let mut out = dense::matmul(dense::matmul(s.view(), m.view()).view(), s.view());
    symmetrize_in_place(&mut out);
    out
}

pub fn frobenius_norm(a: ArrayView2<'_, f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `‖a − b‖_F / ‖b‖_F`, or the absolute error when `b` is zero.
pub fn relative_frobenius_error(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> f64 {
    let diff = frobenius_norm((&a - &b).view());
    let scale = frobenius_norm(b);
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

pub fn symmetrized(a: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut out = a.to_owned();
    symmetrize_in_place(&mut out);
    out
}

pub(crate) fn symmetrize_in_place(a: &mut Array2<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let m = 0.5 * (a[[i, j]] + a[[j, i]]);
            a[[i, j]] = m;
            a[[j, i]] = m;
        }
    }
}

/// Positive diagonal strictly dominating each row: positive definite by Gershgorin.
fn strictly_diagonally_dominant(a: ArrayView2<'_, f64>) -> bool {
    a.outer_iter().enumerate().all(|(i, row)| {
        let diag = row[i];
        let off: f64 = row
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, v)| v.abs())
            .sum();
        diag > 0.0 && diag > off
    })
}

fn check_square(a: ArrayView2<'_, f64>, op: &str) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::invalid(format!(
            "{op}: expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(())
}

fn diagnostics(a: ArrayView2<'_, f64>) -> String {
    let n = a.nrows();
    let diag = a.diag();
    let non_finite = a.iter().filter(|v| !v.is_finite()).count();
    let max_abs = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    format!(
        "n={n}, frobenius={:e}, max|a_ij|={max_abs:e}, diag range [{:e}, {:e}], non-finite={non_finite}",
        frobenius_norm(a),
        diag.iter().copied().fold(f64::INFINITY, f64::min),
        diag.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    )
}

fn min_of(v: &Array1<f64>) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

fn max_of(v: &Array1<f64>) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn reconstruct(e: &SymEig) -> Array2<f64> {
        e.reconstruct_with(|v| v)
    }

    #[test]
    fn eig_of_identity() {
        let e = sym_eig(Array2::<f64>::eye(3).view()).unwrap();
        for &v in e.values.iter() {
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-14);
        }
        let vtv = e.vectors.t().dot(&e.vectors);
        assert!(relative_frobenius_error(vtv.view(), Array2::eye(3).view()) < 1e-12);
    }

    #[test]
    fn eig_of_diagonal_is_sorted_axis_permutation() {
        let a = Array2::from_diag(&array![3.0, 1.0, 2.0]);
        let e = sym_eig(a.view()).unwrap();
        assert_eq!(e.values.to_vec(), vec![1.0, 2.0, 3.0]);
        // eigenvector for 1.0 is ±e_1, etc.
        for (col, axis) in [(0usize, 1usize), (1, 2), (2, 0)] {
            assert_abs_diff_eq!(e.vectors[[axis, col]].abs(), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn eig_two_by_two_matches_characteristic_polynomial() {
        // λ² − 4λ + 3 = 0 → λ ∈ {1, 3}
        let a = array![[2.0, 1.0], [1.0, 2.0]];
        let e = sym_eig(a.view()).unwrap();
        assert_abs_diff_eq!(e.values[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.values[1], 3.0, epsilon = 1e-14);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // Columns are (1,-1)/√2 and (1,1)/√2 up to sign.
        assert_abs_diff_eq!((e.vectors[[0, 0]] * e.vectors[[1, 0]]), -0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(e.vectors[[0, 1]].abs(), s, epsilon = 1e-14);
        assert_abs_diff_eq!(e.vectors[[1, 1]].abs(), s, epsilon = 1e-14);
        assert!(relative_frobenius_error(reconstruct(&e).view(), a.view()) < 1e-14);
    }

    #[test]
    fn eig_rejects_non_square_and_non_finite() {
        let a = Array2::<f64>::zeros((2, 3));
        assert!(matches!(sym_eig(a.view()), Err(Error::InvalidArgument(_))));
        let b = array![[1.0, f64::NAN], [f64::NAN, 1.0]];
        assert!(matches!(
            sym_eig(b.view()),
            Err(Error::NumericalFailure { .. })
        ));
    }

    #[test]
    fn log_of_identity_is_zero() {
        let id = SpdMatrix::new(Array2::eye(4)).unwrap();
        let l = spd_log(&id).unwrap();
        assert!(l.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn log_of_diagonal_is_elementwise() {
        let e = std::f64::consts::E;
        let a = SpdMatrix::new(Array2::from_diag(&array![e, e * e])).unwrap();
        let l = spd_log(&a).unwrap();
        assert!(relative_frobenius_error(l.view(), Array2::from_diag(&array![1.0, 2.0]).view()) < 1e-14);
    }

    #[test]
    fn log_two_by_two() {
        let a = SpdMatrix::new(array![[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let l = spd_log(&a).unwrap();
        let h = 3f64.ln() / 2.0;
        let expected = array![[h, h], [h, h]];
        assert!(relative_frobenius_error(l.view(), expected.view()) < 1e-13);
    }

    #[test]
    fn exp_cases() {
        let z = spd_exp(Array2::<f64>::zeros((3, 3)).view()).unwrap();
        assert!(relative_frobenius_error(z.view(), Array2::eye(3).view()) < 1e-15);

        let e = std::f64::consts::E;
        let d = spd_exp(Array2::from_diag(&array![1.0, 2.0]).view()).unwrap();
        assert!(relative_frobenius_error(d.view(), Array2::from_diag(&array![e, e * e]).view()) < 1e-14);

        let a = array![[2.0, 1.0], [1.0, 2.0]];
        let back = spd_exp(spd_log(&SpdMatrix::new(a.clone()).unwrap()).unwrap().view()).unwrap();
        assert!(relative_frobenius_error(back.view(), a.view()) < 1e-13);
    }

    #[test]
    fn exp_overflow_is_numerical_failure() {
        let s = Array2::from_diag(&array![800.0, 0.0]);
        assert!(matches!(
            spd_exp(s.view()),
            Err(Error::NumericalFailure { .. })
        ));
    }

    #[test]
    fn riemann_dist_closed_forms() {
        let four_ln_sq = 4f64.ln().powi(2);
        let a = SpdMatrix::new(array![[2.0]]).unwrap();
        let b = SpdMatrix::new(array![[8.0]]).unwrap();
        assert_abs_diff_eq!(riemann_dist(&a, &b).unwrap(), four_ln_sq, epsilon = 1e-12);
        assert_abs_diff_eq!(four_ln_sq, 1.921812, epsilon = 1e-6);

        let c = SpdMatrix::new(Array2::from_diag(&array![1.0, 4.0])).unwrap();
        let d = SpdMatrix::new(Array2::eye(2)).unwrap();
        assert_abs_diff_eq!(riemann_dist(&c, &d).unwrap(), four_ln_sq, epsilon = 1e-12);
        assert_abs_diff_eq!(riemann_dist(&c, &c).unwrap(), 0.0, epsilon = 1e-24);
    }

    #[test]
    fn riemann_dist_dimension_mismatch() {
        let a = SpdMatrix::new(Array2::eye(2)).unwrap();
        let b = SpdMatrix::new(Array2::eye(3)).unwrap();
        assert!(matches!(riemann_dist(&a, &b), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn construction_rejects_indefinite() {
        let a = array![[1.0, 2.0], [2.0, 1.0]];
        assert!(matches!(SpdMatrix::new(a), Err(Error::InvalidArgument(_))));
        assert!(SpdMatrix::new(Array2::zeros((2, 2))).is_err());
    }

    #[test]
    fn construction_symmetrizes() {
        let a = array![[2.0, 1.0 + 1e-9], [1.0 - 1e-9, 2.0]];
        let s = SpdMatrix::new(a).unwrap();
        assert_eq!(s.as_array()[[0, 1]], s.as_array()[[1, 0]]);
    }

    #[test]
    fn sqrt_and_inv_sqrt_are_consistent() {
        let a = SpdMatrix::new(array![[4.0, 1.0], [1.0, 3.0]]).unwrap();
        let r = a.sqrt().unwrap();
        let ri = a.inv_sqrt().unwrap();
        assert!(relative_frobenius_error(r.dot(&r).view(), a.view()) < 1e-14);
        assert!(relative_frobenius_error(r.dot(&ri).view(), Array2::eye(2).view()) < 1e-14);
    }
}
