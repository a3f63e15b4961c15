//! Thin wrappers around the dense eigenvalue and linear-solve routines used
//! by the rest of the crate.
//!
//! General (non-symmetric) spectra come from a shifted-QR iteration on the
//! Hessenberg form; symmetric spectra from tridiagonalization followed by
//! the implicit QL iteration. Both are bounded by an explicit iteration
//! budget so a non-converging matrix surfaces as an error instead of a
//! hang.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::{real, Scalar};

/// Iteration budget per eigenvalue for the QR/QL iterations.
const ITER_PER_EIGENVALUE: usize = 500;

/// Magnitude of a complex number over the generic scalar.
pub fn cnorm<T: Scalar>(z: Complex<T>) -> T {
    (z.re * z.re + z.im * z.im).sqrt()
}

/// Eigenvalues of a general real square matrix, in unspecified order.
///
/// The QR iteration can cycle on matrices whose spectrum is symmetric
/// around the origin (companion matrices of `s^n + c` are the classic
/// case). A diagonal shift breaks the symmetry without changing the
/// eigenvalues beyond a translation, so non-convergence is retried under
/// a ladder of shifts before giving up.
pub fn eigenvalues<T: Scalar>(m: &DMatrix<T>) -> Result<Vec<Complex<T>>> {
    assert_eq!(m.nrows(), m.ncols(), "matrix must be square");
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let scale = m.iter().fold(T::one(), |a, &v| a.max(v.abs()));
    for shift_factor in [0.0, 0.325, -0.7183] {
        let sigma = real::<T>(shift_factor) * scale;
        let mut shifted = m.clone();
        for k in 0..m.nrows() {
            shifted[(k, k)] -= sigma;
        }
        if let Some(schur) = nalgebra::linalg::Schur::try_new(
            shifted,
            T::default_epsilon(),
            ITER_PER_EIGENVALUE * m.nrows(),
        ) {
            return Ok(schur
                .complex_eigenvalues()
                .iter()
                .map(|e| e + Complex::new(sigma, T::zero()))
                .collect());
        }
    }
    Err(Error::EigenConvergence)
}

/// Eigenvalues of a symmetric real matrix, sorted ascending.
///
/// Only the lower triangle is referenced by the reduction, so slightly
/// asymmetric input (from accumulated rounding) is tolerated.
pub fn symmetric_eigenvalues<T: Scalar>(m: &DMatrix<T>) -> Result<Vec<T>> {
    assert_eq!(m.nrows(), m.ncols(), "matrix must be square");
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let eigen = nalgebra::linalg::SymmetricEigen::try_new(
        m.clone(),
        T::default_epsilon(),
        ITER_PER_EIGENVALUE * m.nrows(),
    )
    .ok_or(Error::EigenConvergence)?;
    let mut vals: Vec<T> = eigen.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).expect("eigenvalues are ordered"));
    Ok(vals)
}

/// Maximum real part over a set of eigenvalues.
pub fn max_real_part<T: Scalar>(eigenvalues: &[Complex<T>]) -> T {
    eigenvalues
        .iter()
        .map(|e| e.re)
        .fold(real(f64::NEG_INFINITY), |a, b| a.max(b))
}

/// Solves the complex linear system `a x = b` by LU with partial pivoting.
///
/// Returns `None` when the factorization meets an exactly zero pivot or the
/// solution fails to reproduce `b` within [`crate::tol::EVAL_POLE`]
/// relative residual, i.e. when `a` is singular to working precision.
pub fn solve_complex<T: Scalar>(
    a: &DMatrix<Complex<T>>,
    b: &DVector<Complex<T>>,
) -> Option<DVector<Complex<T>>> {
    let x = a.clone().lu().solve(b)?;
    let residual = (a * &x - b).norm();
    let scale = b.norm().max(T::one());
    if residual > real::<T>(crate::tol::EVAL_POLE) * scale {
        return None;
    }
    Some(x)
}

/// Rank of a real matrix via its singular values, with cutoff
/// `tol * max(1, largest singular value)`.
pub fn rank<T: Scalar>(m: &DMatrix<T>, tol: T) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let svd = m.clone().svd(false, false);
    let largest = svd.singular_values.max();
    let cutoff = tol * largest.max(T::one());
    svd.singular_values.iter().filter(|s| **s > cutoff).count()
}
