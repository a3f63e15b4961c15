//! Scalar linear time-invariant system tools: transfer functions,
//! state-space realizations, pole placement, and stability tests.

mod poly;

pub use poly::{Polynomial, MAX_DEGREE};

use nalgebra::{Complex, DMatrix, DVector, RowDVector};

use crate::error::{Error, Result};
use crate::{linalg, real, tol, Scalar};

/// A proper rational transfer function `num(s) / den(s)`.
///
/// Construction normalizes the denominator to monic form and rejects
/// improper or non-coprime fractions, so every held value is in canonical
/// form.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferFunction<T: Scalar> {
    num: Polynomial<T>,
    den: Polynomial<T>,
}

impl<T: Scalar> TransferFunction<T> {
    pub fn new(num: Polynomial<T>, den: Polynomial<T>) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        let num_deg = num.degree();
        let den_deg = den.degree().expect("nonzero denominator");
        if let Some(nd) = num_deg {
            if nd > den_deg {
                return Err(Error::Improper { num: nd, den: den_deg });
            }
        }
        let lead = den.leading();
        let num = num.scaled(T::one() / lead);
        let den = den.scaled(T::one() / lead);
        // Common factors are rejected rather than cancelled: a shared root
        // indicates an inconsistent design upstream.
        if num.degree().is_some_and(|d| d >= 1) && den_deg >= 1 {
            let nr = num.roots()?;
            let dr = den.roots()?;
            let threshold = real::<T>(tol::COPRIME);
            for a in &nr {
                for b in &dr {
                    if linalg::cnorm(a - b) < threshold {
                        return Err(Error::CommonRoot {
                            re: a.re.to_f64().unwrap_or(f64::NAN),
                            im: a.im.to_f64().unwrap_or(f64::NAN),
                        });
                    }
                }
            }
        }
        Ok(Self { num, den })
    }

    pub fn num(&self) -> &Polynomial<T> {
        &self.num
    }

    pub fn den(&self) -> &Polynomial<T> {
        &self.den
    }

    /// Numerator degree strictly below denominator degree.
    pub fn strictly_proper(&self) -> bool {
        match (self.num.degree(), self.den.degree()) {
            (None, _) => true,
            (Some(n), Some(d)) => n < d,
            (Some(_), None) => false,
        }
    }

    /// Direct rational evaluation `num(s)/den(s)`.
    pub fn eval(&self, s: Complex<T>) -> Complex<T> {
        self.num.eval_complex(s) / self.den.eval_complex(s)
    }
}

/// Single-input single-output state-space system
/// `dx = A x + B u`, `y = C x + D u`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateSpace<T: Scalar> {
    pub a: DMatrix<T>,
    pub b: DVector<T>,
    pub c: RowDVector<T>,
    pub d: T,
}

impl<T: Scalar> StateSpace<T> {
    /// State dimension.
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// Controllable canonical realization of a proper transfer function.
    ///
    /// With monic denominator `s^m + a_{m-1} s^{m-1} + ... + a_0`, the first
    /// row of `A` is `(-a_{m-1}, ..., -a_0)` over an identity subdiagonal,
    /// `B` is the first unit vector, `C` carries the strictly-proper
    /// numerator coefficients `(b_{m-1}, ..., b_0)`, and `D` is the
    /// feedthrough of an equal-degree numerator.
    pub fn realize(tf: &TransferFunction<T>) -> Self {
        let m = tf.den.degree().expect("canonical denominator is nonzero");
        let d = if tf.num.degree() == Some(m) { tf.num.coeff(m) } else { T::zero() };
        let strict = &tf.num - &tf.den.scaled(d);
        let mut a = DMatrix::zeros(m, m);
        for k in 0..m {
            a[(0, k)] = -tf.den.coeff(m - 1 - k);
        }
        for k in 1..m {
            a[(k, k - 1)] = T::one();
        }
        let mut b = DVector::zeros(m);
        if m > 0 {
            b[0] = T::one();
        }
        let mut c = RowDVector::zeros(m);
        for k in 0..m {
            c[k] = strict.coeff(m - 1 - k);
        }
        Self { a, b, c, d }
    }

    /// Frequency response `C (sI - A)^{-1} B + D`.
    ///
    /// Errors when `s` coincides with an eigenvalue of `A` to working
    /// precision.
    pub fn eval(&self, s: Complex<T>) -> Result<Complex<T>> {
        let m = self.dim();
        if m == 0 {
            return Ok(Complex::new(self.d, T::zero()));
        }
        let mut si_a = DMatrix::from_fn(m, m, |r, c| Complex::new(-self.a[(r, c)], T::zero()));
        for k in 0..m {
            si_a[(k, k)] += s;
        }
        let b = DVector::from_fn(m, |r, _| Complex::new(self.b[r], T::zero()));
        let x = linalg::solve_complex(&si_a, &b).ok_or(Error::EvalAtPole {
            re: s.re.to_f64().unwrap_or(f64::NAN),
            im: s.im.to_f64().unwrap_or(f64::NAN),
        })?;
        let mut y = Complex::new(self.d, T::zero());
        for k in 0..m {
            y += Complex::new(self.c[k], T::zero()) * x[k];
        }
        Ok(y)
    }
}

/// Evaluates a polynomial at a square matrix by Horner's scheme.
fn eval_matrix<T: Scalar>(p: &Polynomial<T>, a: &DMatrix<T>) -> DMatrix<T> {
    let m = a.nrows();
    let deg = match p.degree() {
        None => return DMatrix::zeros(m, m),
        Some(d) => d,
    };
    let mut out = DMatrix::identity(m, m) * p.coeff(deg);
    for k in (0..deg).rev() {
        out = &out * a;
        for i in 0..m {
            out[(i, i)] += p.coeff(k);
        }
    }
    out
}

/// Output-injection gain `K` such that `eig(A - K C)` equals the requested
/// pole set, computed by Ackermann's formula on the dual pair `(A', C')`.
///
/// The pole set must be closed under conjugation and strictly stable, and
/// the pair `(A, C)` must be observable; each violation is an error. The
/// achieved eigenvalues are verified against the request to
/// [`tol::PLACEMENT`] before the gain is returned.
pub fn place_observer_gain<T: Scalar>(
    a: &DMatrix<T>,
    c: &RowDVector<T>,
    poles: &[Complex<T>],
) -> Result<DVector<T>> {
    let m = a.nrows();
    assert_eq!(a.ncols(), m, "A must be square");
    assert_eq!(c.len(), m, "C must match A");
    if poles.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "{} poles requested for a {}-state system",
            poles.len(),
            m
        )));
    }
    let margin = real::<T>(tol::HURWITZ_MARGIN);
    if poles.iter().any(|p| p.re >= -margin) {
        return Err(Error::PolesNotStable);
    }
    // from_roots rejects sets that are not closed under conjugation.
    let desired = Polynomial::from_roots(poles)?;

    let mut obs = DMatrix::zeros(m, m);
    let mut row = c.clone();
    for k in 0..m {
        obs.set_row(k, &row);
        row = &row * a;
    }
    if linalg::rank(&obs, real(tol::RANK)) < m {
        return Err(Error::NotObservable);
    }
    let mut e_last = DVector::zeros(m);
    e_last[m - 1] = T::one();
    let w = obs.clone().lu().solve(&e_last).ok_or(Error::NotObservable)?;
    let k_gain = eval_matrix(&desired, a) * w;

    let achieved = linalg::eigenvalues(&(a - &k_gain * c))?;
    let deviation = match_deviation(&achieved, poles);
    if deviation > real(tol::PLACEMENT) {
        return Err(Error::PlacementVerification(deviation.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(k_gain)
}

/// Greedy bipartite match distance between two spectra of equal length.
fn match_deviation<T: Scalar>(got: &[Complex<T>], want: &[Complex<T>]) -> T {
    let mut remaining: Vec<Complex<T>> = want.to_vec();
    let mut worst = T::zero();
    for g in got {
        let (idx, dist) = remaining
            .iter()
            .enumerate()
            .map(|(i, w)| (i, linalg::cnorm(g - w)))
            .min_by(|a, b| a.1.partial_cmp(&b.1).expect("finite distances"))
            .expect("equal spectrum lengths");
        worst = worst.max(dist);
        remaining.swap_remove(idx);
    }
    worst
}

/// Tests whether every eigenvalue of `m` has real part below
/// `-HURWITZ_MARGIN`; also returns the largest real part found.
pub fn is_hurwitz<T: Scalar>(m: &DMatrix<T>) -> Result<(bool, T)> {
    if m.nrows() == 0 {
        return Ok((true, real(f64::NEG_INFINITY)));
    }
    let eigs = linalg::eigenvalues(m)?;
    let max_re = linalg::max_real_part(&eigs);
    Ok((max_re < -real::<T>(tol::HURWITZ_MARGIN), max_re))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn poly(coeffs: &[f64]) -> Polynomial<f64> {
        Polynomial::new(coeffs.to_vec())
    }

    /// h(s) = (3s + 6.75) / (s^2 + 3s + 9)
    fn bench_h() -> TransferFunction<f64> {
        TransferFunction::new(poly(&[6.75, 3.0]), poly(&[9.0, 3.0, 1.0])).unwrap()
    }

    /// g(s) = 1.5s / (s^2 + 2.25)
    fn bench_g() -> TransferFunction<f64> {
        TransferFunction::new(poly(&[0.0, 1.5]), poly(&[2.25, 0.0, 1.0])).unwrap()
    }

    #[test]
    fn transfer_function_normalizes_to_monic_denominator() {
        let tf = TransferFunction::new(poly(&[2.0]), poly(&[4.0, 2.0])).unwrap();
        assert_eq!(tf.den().coeffs(), &[2.0, 1.0]);
        assert_eq!(tf.num().coeffs(), &[1.0]);
    }

    #[test]
    fn transfer_function_rejects_bad_input() {
        assert_eq!(
            TransferFunction::new(poly(&[1.0]), Polynomial::zero()).unwrap_err(),
            Error::ZeroDenominator
        );
        assert!(matches!(
            TransferFunction::new(poly(&[0.0, 0.0, 1.0]), poly(&[1.0, 1.0])).unwrap_err(),
            Error::Improper { num: 2, den: 1 }
        ));
        // (s + 1) / (s^2 + 3s + 2) shares the root at -1.
        assert!(matches!(
            TransferFunction::new(poly(&[1.0, 1.0]), poly(&[2.0, 3.0, 1.0])).unwrap_err(),
            Error::CommonRoot { .. }
        ));
    }

    #[test]
    fn realization_of_strictly_proper_benchmark() {
        let ss = StateSpace::realize(&bench_h());
        assert_eq!(ss.a, DMatrix::from_row_slice(2, 2, &[-3.0, -9.0, 1.0, 0.0]));
        assert_eq!(ss.b, DVector::from_vec(vec![1.0, 0.0]));
        assert_eq!(ss.c, RowDVector::from_vec(vec![3.0, 6.75]));
        assert_eq!(ss.d, 0.0);

        let ss = StateSpace::realize(&bench_g());
        assert_eq!(ss.a, DMatrix::from_row_slice(2, 2, &[0.0, -2.25, 1.0, 0.0]));
        assert_eq!(ss.c, RowDVector::from_vec(vec![1.5, 0.0]));
        assert_eq!(ss.d, 0.0);
    }

    #[test]
    fn realization_of_integrator_and_biproper_fraction() {
        let integ = TransferFunction::new(poly(&[1.0]), poly(&[0.0, 1.0])).unwrap();
        let ss = StateSpace::realize(&integ);
        assert_eq!(ss.a, DMatrix::from_row_slice(1, 1, &[0.0]));
        assert_eq!(ss.c, RowDVector::from_vec(vec![1.0]));

        // (s + 2) / (s + 1) = 1 + 1/(s + 1)
        let bp = TransferFunction::new(poly(&[2.0, 1.0]), poly(&[1.0, 1.0])).unwrap();
        let ss = StateSpace::realize(&bp);
        assert_eq!(ss.d, 1.0);
        assert_eq!(ss.c, RowDVector::from_vec(vec![1.0]));
    }

    #[test]
    fn state_space_evaluation_matches_rational_form() {
        let integ = TransferFunction::new(poly(&[1.0]), poly(&[0.0, 1.0])).unwrap();
        let ss = StateSpace::realize(&integ);
        let y = ss.eval(Complex::new(2.0, 0.0)).unwrap();
        assert_relative_eq!(y.re, 0.5, max_relative = 1e-12);

        let h = StateSpace::realize(&bench_h());
        let y = h.eval(Complex::new(0.0, 0.0)).unwrap();
        assert_relative_eq!(y.re, 0.75, max_relative = 1e-12);

        let g = StateSpace::realize(&bench_g());
        let y = g.eval(Complex::new(1.0, 0.0)).unwrap();
        assert_relative_eq!(y.re, 1.5 / 3.25, max_relative = 1e-12);

        assert!(matches!(
            ss.eval(Complex::new(0.0, 0.0)).unwrap_err(),
            Error::EvalAtPole { .. }
        ));
    }

    #[test]
    fn observer_gain_for_scalar_system() {
        let a = DMatrix::from_row_slice(1, 1, &[-1.0]);
        let c = RowDVector::from_vec(vec![1.0]);
        let k = place_observer_gain(&a, &c, &[Complex::new(-5.0, 0.0)]).unwrap();
        assert_relative_eq!(k[0], 4.0, max_relative = 1e-9);
    }

    #[test]
    fn observer_gain_for_double_integrator() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let c = RowDVector::from_vec(vec![1.0, 0.0]);
        let poles = [Complex::new(-1.0, 0.0), Complex::new(-1.0, 0.0)];
        let k = place_observer_gain(&a, &c, &poles).unwrap();
        assert_relative_eq!(k[0], 2.0, max_relative = 1e-9);
        assert_relative_eq!(k[1], 1.0, max_relative = 1e-9);
    }

    #[test]
    fn observer_gain_rejects_unobservable_pair() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        let c = RowDVector::from_vec(vec![1.0, 0.0]);
        let poles = [Complex::new(-1.0, 0.0), Complex::new(-2.0, 0.0)];
        assert_eq!(place_observer_gain(&a, &c, &poles).unwrap_err(), Error::NotObservable);
    }

    #[test]
    fn observer_gain_rejects_bad_pole_sets() {
        let a = DMatrix::from_row_slice(1, 1, &[0.0]);
        let c = RowDVector::from_vec(vec![1.0]);
        assert_eq!(
            place_observer_gain(&a, &c, &[Complex::new(1.0, 0.0)]).unwrap_err(),
            Error::PolesNotStable
        );
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let c = RowDVector::from_vec(vec![1.0, 0.0]);
        let poles = [Complex::new(-1.0, 1.0), Complex::new(-2.0, 0.0)];
        assert_eq!(
            place_observer_gain(&a, &c, &poles).unwrap_err(),
            Error::PolesNotConjugateClosed
        );
    }

    #[test]
    fn hurwitz_test_reports_margin() {
        let stable = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -2.0]);
        let (ok, margin) = is_hurwitz(&stable).unwrap();
        assert!(ok);
        assert_relative_eq!(margin, -1.0, max_relative = 1e-9);

        // Oscillator: eigenvalues on the imaginary axis are not Hurwitz.
        let marginal = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -2.25, 0.0]);
        let (ok, margin) = is_hurwitz(&marginal).unwrap();
        assert!(!ok);
        assert_relative_eq!(margin, 0.0, epsilon = 1e-9);
    }
}
