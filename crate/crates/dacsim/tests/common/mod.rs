#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

/// Matrix exponential by scaling-and-squaring on a Taylor series.
/// Accurate to near machine precision for the modest matrices used in
/// these tests; independent of the library under test.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let dim = a.nrows();
    assert_eq!(dim, a.ncols());
    let bound = a.iter().map(|x| x.abs()).fold(0.0, f64::max) * dim as f64;
    let s = if bound > 0.5 { (bound / 0.5).log2().ceil() as i32 } else { 0 };
    let m = a / 2f64.powi(s);
    let mut term = DMatrix::<f64>::identity(dim, dim);
    let mut sum = DMatrix::<f64>::identity(dim, dim);
    for k in 1..400 {
        term = &term * &m / k as f64;
        sum += &term;
        if term.norm() < 1e-18 * sum.norm() {
            break;
        }
    }
    let mut r = sum;
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// Recovers the `(A, B)` of an exactly linear map
/// `rhs(y, u) = A y + B u` by probing with basis vectors.
pub fn probe_linear(
    dim_y: usize,
    dim_u: usize,
    rhs: impl Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64>,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let zero_y = DVector::zeros(dim_y);
    let zero_u = DVector::zeros(dim_u);
    let mut a = DMatrix::zeros(dim_y, dim_y);
    for k in 0..dim_y {
        let mut e = zero_y.clone();
        e[k] = 1.0;
        a.set_column(k, &rhs(&e, &zero_u));
    }
    let mut b = DMatrix::zeros(dim_y, dim_u);
    for k in 0..dim_u {
        let mut e = zero_u.clone();
        e[k] = 1.0;
        b.set_column(k, &rhs(&zero_y, &e));
    }
    (a, b)
}
