//! Thin wrappers around the dense linear-algebra backend.
//!
//! Everything downstream works with `faer` matrices of `Complex64`
//! entries; this module pins the conventions (eigenvalues ascending,
//! singular values ascending) and keeps backend calls in one place.

use crate::error::CoreError;
use crate::Complex;
use faer::linalg::solvers::Solve;
use faer::{Mat, MatRef, Side};

/// Hermitian eigendecomposition, eigenvalues ascending, eigenvectors in
/// the matching columns.
pub fn eigh(mat: MatRef<'_, Complex>) -> Result<(Vec<f64>, Mat<Complex>), CoreError> {
    let evd = mat
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| CoreError::EigenFailed(format!("{e:?}")))?;
    let s = evd.S().column_vector().to_owned();
    let n = mat.nrows();
    let evals: Vec<f64> = (0..n).map(|i| s[i].re).collect();
    debug_assert!(evals.windows(2).all(|w| w[0] <= w[1]));
    Ok((evals, evd.U().to_owned()))
}

/// Singular values in ascending order.
pub fn singular_values(mat: MatRef<'_, Complex>) -> Result<Vec<f64>, CoreError> {
    let mut sv = mat
        .singular_values()
        .map_err(|e| CoreError::EigenFailed(format!("svd: {e:?}")))?;
    sv.reverse();
    Ok(sv)
}

/// Largest singular value.
pub fn operator_norm(mat: MatRef<'_, Complex>) -> Result<f64, CoreError> {
    let sv = mat
        .singular_values()
        .map_err(|e| CoreError::EigenFailed(format!("svd: {e:?}")))?;
    Ok(sv.first().copied().unwrap_or(0.0))
}

/// Schatten-p norm `(Σ σ_i^p)^{1/p}`; `p = 1` is the trace norm.
pub fn schatten_norm(mat: MatRef<'_, Complex>, p: f64) -> Result<f64, CoreError> {
    if p < 1.0 {
        return Err(CoreError::Precondition(format!(
            "Schatten norm needs p >= 1, got {p}"
        )));
    }
    let sv = singular_values(mat)?;
    Ok(sv.iter().map(|s| s.powf(p)).sum::<f64>().powf(1.0 / p))
}

pub fn trace(mat: MatRef<'_, Complex>) -> Complex {
    (0..mat.nrows().min(mat.ncols()))
        .map(|i| mat[(i, i)])
        .sum()
}

/// Entrywise complex conjugate as an owned matrix.
pub fn conjugate(mat: MatRef<'_, Complex>) -> Mat<Complex> {
    Mat::from_fn(mat.nrows(), mat.ncols(), |i, j| mat[(i, j)].conj())
}

/// Left-multiplication by a diagonal matrix: `diag(ph) · M`.
pub fn scale_rows(mat: MatRef<'_, Complex>, ph: &[Complex]) -> Mat<Complex> {
    assert_eq!(ph.len(), mat.nrows());
    Mat::from_fn(mat.nrows(), mat.ncols(), |i, j| ph[i] * mat[(i, j)])
}

/// Right-multiplication by a diagonal matrix: `M · diag(ph)`.
pub fn scale_cols(mat: MatRef<'_, Complex>, ph: &[Complex]) -> Mat<Complex> {
    assert_eq!(ph.len(), mat.ncols());
    Mat::from_fn(mat.nrows(), mat.ncols(), |i, j| ph[j] * mat[(i, j)])
}

/// Zeroes the rows of `M` where `mask` is false: `diag(mask) · M`.
pub fn mask_rows(mat: MatRef<'_, Complex>, mask: &[bool]) -> Mat<Complex> {
    assert_eq!(mask.len(), mat.nrows());
    Mat::from_fn(mat.nrows(), mat.ncols(), |i, j| {
        if mask[i] {
            mat[(i, j)]
        } else {
            Complex::new(0.0, 0.0)
        }
    })
}

/// `diag(mask) · M · diag(mask)`.
pub fn mask_both(mat: MatRef<'_, Complex>, mask: &[bool]) -> Mat<Complex> {
    assert_eq!(mask.len(), mat.nrows());
    Mat::from_fn(mat.nrows(), mat.ncols(), |i, j| {
        if mask[i] && mask[j] {
            mat[(i, j)]
        } else {
            Complex::new(0.0, 0.0)
        }
    })
}

/// Solves `A X = B` by partial-pivot LU.
pub fn solve(a: MatRef<'_, Complex>, b: MatRef<'_, Complex>) -> Mat<Complex> {
    a.partial_piv_lu().solve(b)
}

/// Symmetrizes numerical drift: `(M + M*) / 2`.
pub fn hermitize(mat: MatRef<'_, Complex>) -> Mat<Complex> {
    Mat::from_fn(mat.nrows(), mat.ncols(), |i, j| {
        (mat[(i, j)] + mat[(j, i)].conj()) * Complex::new(0.5, 0.0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn diag(vals: &[f64]) -> Mat<Complex> {
        Mat::from_fn(vals.len(), vals.len(), |i, j| {
            if i == j {
                Complex::new(vals[i], 0.0)
            } else {
                Complex::new(0.0, 0.0)
            }
        })
    }

    #[test]
    fn eigh_of_diagonal_is_sorted() {
        let m = diag(&[3.0, 1.0, 2.0]);
        let (evals, vecs) = eigh(m.as_ref()).unwrap();
        assert_abs_diff_eq!(evals[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(evals[2], 3.0, epsilon = 1e-14);
        // columns orthonormal
        let gram = vecs.adjoint() * &vecs;
        let eye = Mat::<Complex>::identity(3, 3);
        assert!((&gram - &eye).norm_max() < 1e-12);
    }

    #[test]
    fn singular_values_ascending_and_schatten() {
        let m = diag(&[3.0, 4.0]);
        let sv = singular_values(m.as_ref()).unwrap();
        assert_abs_diff_eq!(sv[0], 3.0, epsilon = 1e-13);
        assert_abs_diff_eq!(sv[1], 4.0, epsilon = 1e-13);
        assert_abs_diff_eq!(schatten_norm(m.as_ref(), 1.0).unwrap(), 7.0, epsilon = 1e-12);
        assert_abs_diff_eq!(schatten_norm(m.as_ref(), 2.0).unwrap(), 5.0, epsilon = 1e-12);
        assert!(schatten_norm(m.as_ref(), 0.5).is_err());
    }

    #[test]
    fn masking_and_scaling_act_diagonally() {
        let m = Mat::from_fn(2, 2, |i, j| Complex::new((i * 2 + j) as f64 + 1.0, 0.0));
        let ph = [Complex::new(0.0, 1.0), Complex::new(1.0, 0.0)];
        let lr = scale_rows(m.as_ref(), &ph);
        assert_eq!(lr[(0, 1)], Complex::new(0.0, 2.0));
        let rc = scale_cols(m.as_ref(), &ph);
        assert_eq!(rc[(1, 0)], Complex::new(0.0, 3.0));
        let masked = mask_both(m.as_ref(), &[true, false]);
        assert_eq!(masked[(0, 0)].re, 1.0);
        assert_eq!(masked[(1, 1)].re, 0.0);
        assert_eq!(masked[(0, 1)].re, 0.0);
    }
}
