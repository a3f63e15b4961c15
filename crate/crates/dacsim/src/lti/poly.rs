//! Dense univariate polynomials with real coefficients.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};
use crate::{linalg, real, tol, Scalar};

/// Largest polynomial degree accepted by the root finder.
pub const MAX_DEGREE: usize = 32;

/// A polynomial stored as ascending power coefficients:
/// `coeffs[k]` multiplies `s^k`.
///
/// The representation is kept normalized: trailing coefficients with
/// magnitude at or below [`tol::COEFF_TRIM`] are removed, and the zero
/// polynomial is canonically the empty coefficient list.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial<T: Scalar> {
    coeffs: Vec<T>,
}

impl<T: Scalar> Polynomial<T> {
    /// Builds a polynomial from ascending coefficients, normalizing the
    /// leading end.
    pub fn new(mut coeffs: Vec<T>) -> Self {
        let trim = real::<T>(tol::COEFF_TRIM);
        while let Some(last) = coeffs.last() {
            if last.abs() <= trim {
                coeffs.pop();
            } else {
                break;
            }
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: T) -> Self {
        Self::new(vec![c])
    }

    /// The monomial `s^k`.
    pub fn monomial(k: usize) -> Self {
        let mut coeffs = vec![T::zero(); k + 1];
        coeffs[k] = T::one();
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    /// Coefficient of `s^k`, zero beyond the stored length.
    pub fn coeff(&self, k: usize) -> T {
        self.coeffs.get(k).copied().unwrap_or_else(T::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree of the polynomial; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Leading coefficient; zero for the zero polynomial.
    pub fn leading(&self) -> T {
        self.coeffs.last().copied().unwrap_or_else(T::zero)
    }

    pub fn max_coeff_magnitude(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |a, c| a.max(c.abs()))
    }

    /// Horner evaluation at a real point.
    pub fn eval(&self, s: T) -> T {
        self.coeffs.iter().rev().fold(T::zero(), |acc, &c| acc * s + c)
    }

    /// Horner evaluation at a complex point.
    pub fn eval_complex(&self, s: Complex<T>) -> Complex<T> {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex::new(T::zero(), T::zero()), |acc, &c| acc * s + Complex::new(c, T::zero()))
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * factor).collect())
    }

    /// Same polynomial scaled to leading coefficient one.
    ///
    /// Returns an error for the zero polynomial.
    pub fn monic(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::ZeroPolynomialDivision);
        }
        Ok(self.scaled(T::one() / self.leading()))
    }

    /// Long division: returns `(quotient, remainder)` with
    /// `self = quotient * divisor + remainder` and
    /// `deg(remainder) < deg(divisor)`.
    pub fn divmod(&self, divisor: &Self) -> Result<(Self, Self)> {
        if divisor.is_zero() {
            return Err(Error::ZeroPolynomialDivision);
        }
        let dd = divisor.coeffs.len() - 1;
        let lead = divisor.coeffs[dd];
        let mut rem = self.coeffs.clone();
        let mut quot = vec![T::zero(); self.coeffs.len().saturating_sub(dd)];
        while rem.len() > dd {
            let shift = rem.len() - 1 - dd;
            let factor = rem[rem.len() - 1] / lead;
            quot[shift] = factor;
            for k in 0..dd {
                rem[shift + k] -= factor * divisor.coeffs[k];
            }
            // The leading term cancels by construction.
            rem.pop();
        }
        Ok((Self::new(quot), Self::new(rem)))
    }

    /// Whether `divisor` divides `self` with a remainder that is negligible
    /// relative to the dividend's coefficient scale. Returns the quotient
    /// when it does.
    pub fn divided_by(&self, divisor: &Self) -> Result<Option<Self>> {
        let (q, r) = self.divmod(divisor)?;
        let bound = real::<T>(tol::REMAINDER_ZERO) * (T::one() + self.max_coeff_magnitude());
        if r.max_coeff_magnitude() <= bound {
            Ok(Some(q))
        } else {
            Ok(None)
        }
    }

    /// All complex roots via the companion-matrix eigenvalue iteration.
    ///
    /// Errors for zero/constant polynomials and for degrees above
    /// [`MAX_DEGREE`]. Each returned root `r` satisfies
    /// `|p(r)| <= ROOT_RESIDUAL * max|coeff| * max(1, |r|)^deg`.
    pub fn roots(&self) -> Result<Vec<Complex<T>>> {
        let deg = match self.degree() {
            None | Some(0) => return Err(Error::NoRoots),
            Some(d) => d,
        };
        if deg > MAX_DEGREE {
            return Err(Error::DegreeTooLarge(deg));
        }
        let monic = self.monic()?;
        // Exact roots at the origin factor out first; this also keeps the
        // companion matrix away from the nilpotent case (such as s^3),
        // where the eigenvalue iteration cannot converge.
        let at_origin = monic.coeffs.iter().take_while(|&&c| c == T::zero()).count();
        let mut roots = vec![Complex::new(T::zero(), T::zero()); at_origin];
        let deg = deg - at_origin;
        if deg > 0 {
            // Top companion form: first row carries the negated
            // coefficients, the subdiagonal is all ones.
            let mut companion = DMatrix::<T>::zeros(deg, deg);
            for k in 0..deg {
                companion[(0, k)] = -monic.coeffs[at_origin + deg - 1 - k];
            }
            for k in 1..deg {
                companion[(k, k - 1)] = T::one();
            }
            roots.extend(linalg::eigenvalues(&companion)?);
        }
        Ok(roots)
    }

    /// Builds the monic real polynomial with the given roots.
    ///
    /// The root set must be closed under conjugation (real coefficients);
    /// otherwise an error is returned.
    pub fn from_roots(roots: &[Complex<T>]) -> Result<Self> {
        let mut coeffs = vec![Complex::new(T::one(), T::zero())];
        for r in roots {
            let mut next = vec![Complex::new(T::zero(), T::zero()); coeffs.len() + 1];
            for (k, &c) in coeffs.iter().enumerate() {
                next[k + 1] += c;
                next[k] -= c * r;
            }
            coeffs = next;
        }
        let scale = roots
            .iter()
            .fold(T::one(), |a, r| a.max(linalg::cnorm(*r)))
            .powi(roots.len() as i32);
        let imag_bound = real::<T>(1e-9) * scale;
        let mut out = Vec::with_capacity(coeffs.len());
        for c in &coeffs {
            if c.im.abs() > imag_bound {
                return Err(Error::PolesNotConjugateClosed);
            }
            out.push(c.re);
        }
        Ok(Self::new(out))
    }
}

impl<T: Scalar> Add for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn add(self, rhs: &Polynomial<T>) -> Polynomial<T> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let coeffs = (0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect();
        Polynomial::new(coeffs)
    }
}

impl<T: Scalar> Sub for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn sub(self, rhs: &Polynomial<T>) -> Polynomial<T> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let coeffs = (0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect();
        Polynomial::new(coeffs)
    }
}

impl<T: Scalar> Neg for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn neg(self) -> Polynomial<T> {
        self.scaled(-T::one())
    }
}

impl<T: Scalar> Mul for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn mul(self, rhs: &Polynomial<T>) -> Polynomial<T> {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut coeffs = vec![T::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Polynomial::new(coeffs)
    }
}

impl<T: Scalar> fmt::Display for Polynomial<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, &c) in self.coeffs.iter().enumerate().rev() {
            if c == T::zero() {
                continue;
            }
            if first {
                if c < T::zero() {
                    write!(f, "-")?;
                }
                first = false;
            } else if c < T::zero() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mag = c.abs();
            match k {
                0 => write!(f, "{}", mag)?,
                _ => {
                    if mag != T::one() {
                        write!(f, "{}", mag)?;
                    }
                    if k == 1 {
                        write!(f, "s")?;
                    } else {
                        write!(f, "s^{}", k)?;
                    }
                }
            }
        }
        if first {
            // All stored coefficients were exactly zero after trimming.
            write!(f, "0")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn poly(coeffs: &[f64]) -> Polynomial<f64> {
        Polynomial::new(coeffs.to_vec())
    }

    #[test]
    fn normalization_trims_leading_noise() {
        let p = poly(&[1.0, 2.0, 1e-13]);
        assert_eq!(p.degree(), Some(1));
        assert_eq!(p.coeffs(), &[1.0, 2.0]);
        assert!(poly(&[0.0, 0.0]).is_zero());
        assert_eq!(poly(&[]).degree(), None);
    }

    #[test]
    fn product_of_monic_quadratics() {
        // (s^2 + 2.25)(s^2 + 3s + 9) = s^4 + 3s^3 + 11.25s^2 + 6.75s + 20.25
        let a = poly(&[2.25, 0.0, 1.0]);
        let b = poly(&[9.0, 3.0, 1.0]);
        let p = &a * &b;
        assert_eq!(p.coeffs(), &[20.25, 6.75, 11.25, 3.0, 1.0]);
    }

    #[test]
    fn product_with_linear_factors() {
        // (s + 1)(s + 2) = s^2 + 3s + 2
        let p = &poly(&[1.0, 1.0]) * &poly(&[2.0, 1.0]);
        assert_eq!(p.coeffs(), &[2.0, 3.0, 1.0]);
        // Multiplying by one leaves the polynomial unchanged.
        let q = poly(&[4.0, -2.0, 7.0]);
        assert_eq!(&q * &Polynomial::constant(1.0), q);
        assert!((&q * &Polynomial::zero()).is_zero());
    }

    #[test]
    fn division_with_zero_remainder() {
        // (s^2 + 3s + 2) / (s + 1) = s + 2
        let (q, r) = poly(&[2.0, 3.0, 1.0]).divmod(&poly(&[1.0, 1.0])).unwrap();
        assert_eq!(q.coeffs(), &[2.0, 1.0]);
        assert!(r.is_zero());

        let (q, r) = poly(&[1.0, 0.0, 1.0]).divmod(&poly(&[1.0, 0.0, 1.0])).unwrap();
        assert_eq!(q.coeffs(), &[1.0]);
        assert!(r.is_zero());
    }

    #[test]
    fn division_with_remainder() {
        // (s^3 + 1) / (s^2 + 2.25) = s with remainder -2.25s + 1
        let (q, r) = poly(&[1.0, 0.0, 0.0, 1.0]).divmod(&poly(&[2.25, 0.0, 1.0])).unwrap();
        assert_eq!(q.coeffs(), &[0.0, 1.0]);
        assert_eq!(r.coeffs(), &[1.0, -2.25]);
    }

    #[test]
    fn division_by_zero_polynomial_errors() {
        assert_eq!(
            poly(&[1.0, 1.0]).divmod(&Polynomial::zero()).unwrap_err(),
            Error::ZeroPolynomialDivision
        );
    }

    #[test]
    fn divided_by_reports_divisibility() {
        let d = poly(&[2.25, 0.0, 1.0]);
        let p = &poly(&[1.0, 1.0]) * &d;
        let q = p.divided_by(&d).unwrap().expect("divisible");
        assert_eq!(q.coeffs(), &[1.0, 1.0]);
        assert!(poly(&[1.0, 0.0, 0.0, 1.0]).divided_by(&d).unwrap().is_none());
    }

    #[test]
    fn roots_of_internal_model_polynomial() {
        // s^2 + 2.25 has roots +-1.5i.
        let roots = poly(&[2.25, 0.0, 1.0]).roots().unwrap();
        assert_eq!(roots.len(), 2);
        for r in &roots {
            assert_relative_eq!(r.re, 0.0, epsilon = 1e-9);
            assert_relative_eq!(r.im.abs(), 1.5, max_relative = 1e-9);
        }
    }

    #[test]
    fn roots_of_linear_and_complex_quadratic() {
        let roots = poly(&[-1.0, 1.0]).roots().unwrap();
        assert_eq!(roots.len(), 1);
        assert_relative_eq!(roots[0].re, 1.0, max_relative = 1e-12);

        // s^2 + 3s + 9: roots -1.5 +- (3*sqrt(3)/2) i
        let roots = poly(&[9.0, 3.0, 1.0]).roots().unwrap();
        let expected_im = 3.0 * 3.0_f64.sqrt() / 2.0;
        for r in &roots {
            assert_relative_eq!(r.re, -1.5, max_relative = 1e-9);
            assert_relative_eq!(r.im.abs(), expected_im, max_relative = 1e-9);
        }
    }

    #[test]
    fn roots_at_the_origin_are_exact() {
        // s^3 alone defeats the eigenvalue iteration (nilpotent
        // companion matrix); the origin roots must factor out first.
        let roots = poly(&[0.0, 0.0, 0.0, 1.0]).roots().unwrap();
        assert_eq!(roots.len(), 3);
        for r in &roots {
            assert_eq!(r.re, 0.0);
            assert_eq!(r.im, 0.0);
        }

        // s^2 (s + 2): two exact origin roots plus -2.
        let roots = poly(&[0.0, 0.0, 2.0, 1.0]).roots().unwrap();
        assert_eq!(roots.len(), 3);
        assert_eq!(roots[0].re, 0.0);
        assert_eq!(roots[1].re, 0.0);
        assert_relative_eq!(roots[2].re, -2.0, max_relative = 1e-12);
        assert_relative_eq!(roots[2].im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn roots_reject_degenerate_polynomials() {
        assert_eq!(Polynomial::<f64>::zero().roots().unwrap_err(), Error::NoRoots);
        assert_eq!(poly(&[3.0]).roots().unwrap_err(), Error::NoRoots);
        let mut coeffs = vec![0.0; 34];
        coeffs[33] = 1.0;
        coeffs[0] = 1.0;
        assert_eq!(Polynomial::new(coeffs).roots().unwrap_err(), Error::DegreeTooLarge(33));
    }

    #[test]
    fn from_roots_round_trip() {
        let roots = vec![
            Complex::new(-1.5, 2.0),
            Complex::new(-1.5, -2.0),
            Complex::new(-3.0, 0.0),
        ];
        let p = Polynomial::from_roots(&roots).unwrap();
        assert_eq!(p.degree(), Some(3));
        assert_relative_eq!(p.leading(), 1.0, max_relative = 1e-12);
        for r in &roots {
            assert!(p.eval_complex(*r).norm() < 1e-9);
        }
        let unbalanced = [Complex::new(-1.0, 1.0)];
        assert_eq!(
            Polynomial::<f64>::from_roots(&unbalanced).unwrap_err(),
            Error::PolesNotConjugateClosed
        );
    }

    #[test]
    fn evaluation_matches_horner_expansion() {
        let p = poly(&[20.25, 6.75, 11.25, 3.0, 1.0]);
        assert_relative_eq!(p.eval(2.0), 118.75, max_relative = 1e-12);
        let v = p.eval_complex(Complex::new(0.0, 1.5));
        // (s^2+2.25)(s^2+3s+9) vanishes at s = 1.5i only in its first factor.
        let direct = (Complex::new(0.0, 1.5) * Complex::new(0.0, 1.5) + Complex::new(2.25, 0.0))
            * (Complex::new(0.0, 1.5) * Complex::new(0.0, 1.5)
                + Complex::new(0.0, 4.5)
                + Complex::new(9.0, 0.0));
        assert!((v - direct).norm() < 1e-12);
    }

    #[test]
    fn display_is_readable() {
        assert_eq!(poly(&[9.0, 3.0, 1.0]).to_string(), "s^2 + 3s + 9");
        assert_eq!(poly(&[0.0, -1.5]).to_string(), "-1.5s");
        assert_eq!(Polynomial::<f64>::zero().to_string(), "0");
    }
}
