//! Link-fault detection, isolation and estimation.
//!
//! Communication between two agents can be corrupted by an additive fault
//! on the link. Every transmission carries a pair of values produced by
//! one internal block of the sender (`h` for ISAC, `g` for RAC): the
//! block's output and the signal driving it, both corrupted by the same
//! fault. The receiver treats the fault as an extra integrator state of
//! the sender's block and reconstructs it with an unknown-input observer
//! that is insensitive to the fault's unknown rate of change.

use nalgebra::{Complex, DMatrix, DVector, RowDVector};

use crate::consensus::{EstimatorDesign, EstimatorKind};
use crate::error::{Error, Result};
use crate::lti::Polynomial;
use crate::{linalg, lti, real, tol, Scalar};

/// Minimum magnitude of `C * E` for the observer algebra to be usable.
const CE_THRESHOLD: f64 = 1e-9;

/// Fault-augmented model of the transmitted block of one sender.
///
/// With the block realized as `(A_s, B_s, C_s)` (strictly proper), state
/// `x = [x_s; f]`, received drive `u` and received measurement `y`:
///
/// ```text
/// dx = A x + B u + E df,   y = C x
/// A  = [A_s  B_s]   B = [-B_s]   E = [0]   C = [C_s  1]
///      [ 0    0 ]       [  0 ]       [1]
/// ```
///
/// The corrupted drive is `u = u_s + f` seen through `B_s(u - f)`, which
/// is what places `B_s` in the last column of `A` and `-B_s` in `B`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedSystem<T: Scalar> {
    pub a: DMatrix<T>,
    pub b: DVector<T>,
    pub e: DVector<T>,
    pub c: RowDVector<T>,
}

impl<T: Scalar> ExtendedSystem<T> {
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }
}

/// Builds the fault-augmented model monitored on every link of a design.
pub fn build_extended<T: Scalar>(design: &EstimatorDesign<T>) -> ExtendedSystem<T> {
    let sub = match design.kind {
        EstimatorKind::Isac => &design.h,
        EstimatorKind::Rac => &design.g,
    };
    debug_assert!(sub.d == T::zero(), "monitored block must be strictly proper");
    let m = sub.dim();
    let n = m + 1;
    let mut a = DMatrix::zeros(n, n);
    a.view_mut((0, 0), (m, m)).copy_from(&sub.a);
    a.view_mut((0, m), (m, 1)).copy_from(&sub.b);
    let mut b = DVector::zeros(n);
    b.rows_mut(0, m).copy_from(&(-&sub.b));
    let mut e = DVector::zeros(n);
    e[m] = T::one();
    let mut c = RowDVector::zeros(n);
    c.columns_mut(0, m).copy_from(&sub.c);
    c[m] = T::one();
    ExtendedSystem { a, b, e, c }
}

/// Whether an unknown-input observer exists for an extended system, and
/// why (not).
#[derive(Clone, Debug, PartialEq)]
pub struct ExistenceReport<T: Scalar> {
    /// The scalar `C * E`; must be nonzero to decouple the unknown input.
    pub ce: T,
    pub ce_nonzero: bool,
    /// Invariant zeros of `(A, E, C)`, sorted by `(re, im)`. They are
    /// fixed modes of every decoupled observer.
    pub invariant_zeros: Vec<Complex<T>>,
    pub zeros_stable: bool,
    pub exists: bool,
}

/// Checks the two existence conditions for an unknown-input observer:
/// `C E` nonzero and all invariant zeros of `(A, E, C)` strictly stable.
pub fn uio_existence_check<T: Scalar>(sys: &ExtendedSystem<T>) -> Result<ExistenceReport<T>> {
    let ce = (&sys.c * &sys.e)[0];
    let ce_nonzero = ce.abs() > real(CE_THRESHOLD);
    let mut invariant_zeros = invariant_zeros(sys)?;
    invariant_zeros.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
    let margin = real::<T>(tol::HURWITZ_MARGIN);
    let zeros_stable = invariant_zeros.iter().all(|z| z.re < -margin);
    Ok(ExistenceReport {
        ce,
        ce_nonzero,
        invariant_zeros,
        zeros_stable,
        exists: ce_nonzero && zeros_stable,
    })
}

/// Invariant zeros of `(A, E, C)` as roots of the bordered-pencil
/// determinant `det [sI - A, -E; C, 0]`, recovered by interpolation.
fn invariant_zeros<T: Scalar>(sys: &ExtendedSystem<T>) -> Result<Vec<Complex<T>>> {
    let n = sys.dim();
    // The bordered determinant has degree at most n - 1, so n samples
    // pin it down. Chebyshev nodes on [-2, 2] keep the fit conditioned.
    let npts = n;
    let pts: Vec<T> = (0..npts)
        .map(|k| {
            let theta = std::f64::consts::PI * (2 * k + 1) as f64 / (2 * npts) as f64;
            real::<T>(2.0 * theta.cos())
        })
        .collect();

    let mut dets = DVector::zeros(npts);
    for (k, &s) in pts.iter().enumerate() {
        let mut p = DMatrix::zeros(n + 1, n + 1);
        let mut si_a = -sys.a.clone();
        for i in 0..n {
            si_a[(i, i)] += s;
        }
        p.view_mut((0, 0), (n, n)).copy_from(&si_a);
        p.view_mut((0, n), (n, 1)).copy_from(&(-&sys.e));
        p.view_mut((n, 0), (1, n)).copy_from(&sys.c);
        dets[k] = p.determinant();
    }

    let scale = dets.iter().fold(T::zero(), |acc, d| acc.max(d.abs()));
    if scale == T::zero() {
        return Err(Error::UioNotExistent(
            "output pencil is singular at every frequency".into(),
        ));
    }
    let rhs = dets / scale;

    let vander = DMatrix::from_fn(npts, npts, |k, j| {
        let mut p = T::one();
        for _ in 0..j {
            p *= pts[k];
        }
        p
    });
    let coeffs = vander
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("singular interpolation system".into()))?;
    let poly = Polynomial::new(coeffs.as_slice().to_vec());
    match poly.degree() {
        None | Some(0) => Ok(Vec::new()),
        _ => poly.roots(),
    }
}

/// How to choose the free observer gain.
#[derive(Clone, Debug, PartialEq)]
pub enum ObserverGainSpec<T: Scalar> {
    /// Use this gain verbatim; the resulting dynamics must be Hurwitz.
    K1(DVector<T>),
    /// Place the single assignable observer mode at the first entry
    /// (which must be strictly negative). The remaining modes of a
    /// decoupled observer are pinned to the invariant zeros regardless
    /// of the gain, so any further entries are ignored.
    Poles(Vec<T>),
}

/// Convention pole list for a design at frequency `omega`, scaled from
/// the defaults used at `omega = 1.5`.
pub fn default_observer_poles<T: Scalar>(omega: T) -> Vec<T> {
    let s = omega / real(1.5);
    vec![
        real::<T>(-2.0) * s,
        real::<T>(-2.5) * s,
        real::<T>(-3.0) * s,
    ]
}

/// Matrices of a designed unknown-input observer:
///
/// ```text
/// dz   = F z + (T B) u + K y
/// xhat = z + H y
/// fhat = last component of xhat
/// ```
///
/// The estimation error obeys `de = F e` independent of both the fault
/// and the drive.
#[derive(Clone, Debug, PartialEq)]
pub struct ObserverMatrices<T: Scalar> {
    pub h: DVector<T>,
    pub t: DMatrix<T>,
    pub f: DMatrix<T>,
    pub tb: DVector<T>,
    pub k1: DVector<T>,
    pub k2: DVector<T>,
    pub k: DVector<T>,
    pub f_eigenvalues: Vec<Complex<T>>,
}

/// Designs an unknown-input observer for an extended system.
///
/// `H = E / (C E)`, `T = I - H C`, `F = T A - K1 C`, `K = K1 + F H`.
/// Fails if no observer exists, if the requested gain leaves `F`
/// non-Hurwitz, or if the decoupling residual `(H C - I) E` is not
/// negligible.
pub fn uio_design<T: Scalar>(
    sys: &ExtendedSystem<T>,
    spec: &ObserverGainSpec<T>,
) -> Result<ObserverMatrices<T>> {
    let existence = uio_existence_check(sys)?;
    if !existence.ce_nonzero {
        return Err(Error::UioNotExistent(format!(
            "C*E = {} is too close to zero",
            existence.ce.to_f64().unwrap_or(f64::NAN)
        )));
    }
    if !existence.zeros_stable {
        return Err(Error::UioNotExistent(
            "the monitored channel has unstable invariant zeros".into(),
        ));
    }

    let n = sys.dim();
    let h = &sys.e / existence.ce;
    let t = DMatrix::identity(n, n) - &h * &sys.c;

    let k1 = match spec {
        ObserverGainSpec::K1(v) => {
            if v.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "gain length {} does not match extended dimension {}",
                    v.len(),
                    n
                )));
            }
            v.clone()
        }
        ObserverGainSpec::Poles(poles) => {
            let lambda = *poles.first().ok_or(Error::PolesNotStable)?;
            if lambda >= -real::<T>(tol::HURWITZ_MARGIN) {
                return Err(Error::PolesNotStable);
            }
            // C H = 1, so K1 = -lambda H makes C a left eigenvector of F
            // with eigenvalue lambda.
            &h * -lambda
        }
    };

    let f = &t * &sys.a - &k1 * &sys.c;
    let (hurwitz, max_re) = lti::is_hurwitz(&f)?;
    if !hurwitz {
        return Err(Error::NotHurwitz(max_re.to_f64().unwrap_or(f64::NAN)));
    }

    let residual = ((&h * &sys.c - DMatrix::identity(n, n)) * &sys.e).amax();
    if residual > real(tol::DESIGN_RESIDUAL) {
        return Err(Error::Numerical(format!(
            "unknown-input decoupling residual {} exceeds tolerance",
            residual.to_f64().unwrap_or(f64::NAN)
        )));
    }

    let k2 = &f * &h;
    let k = &k1 + &k2;
    let tb = &t * &sys.b;
    let f_eigenvalues = linalg::eigenvalues(&f)?;

    Ok(ObserverMatrices {
        h,
        t,
        f,
        tb,
        k1,
        k2,
        k,
        f_eigenvalues,
    })
}

/// Instantaneous observer update: state derivative, reconstructed
/// extended state, and fault estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct ObserverOutput<T: Scalar> {
    pub dz: DVector<T>,
    pub xhat: DVector<T>,
    pub fhat: T,
}

/// Evaluates one observer against the pair received on its link:
/// `measured` is the corrupted block output, `drive` the corrupted
/// (sign-adjusted) block input.
pub fn observer_derivative<T: Scalar>(
    obs: &ObserverMatrices<T>,
    z: &DVector<T>,
    measured: T,
    drive: T,
) -> ObserverOutput<T> {
    let xhat = z + &obs.h * measured;
    let dz = &obs.f * z + &obs.tb * drive + &obs.k * measured;
    let fhat = xhat[xhat.len() - 1];
    ObserverOutput { dz, xhat, fhat }
}

/// Additive fault waveform, evaluated once the fault is active.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FaultWaveform<T: Scalar> {
    /// `amplitude * cos(frequency * t)` at absolute time `t`.
    Cosine { amplitude: T, frequency: T },
    /// `amplitude * sin(frequency * t)` at absolute time `t`.
    Sine { amplitude: T, frequency: T },
    /// Constant `level`.
    Constant { level: T },
    /// `slope * (t - onset)`, growing from zero at onset.
    Ramp { slope: T },
}

/// An additive fault on the directed link `from -> to`, inactive until
/// (and including) `onset`. With `symmetric` the reverse direction is
/// corrupted identically.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FaultModel<T: Scalar> {
    pub from: usize,
    pub to: usize,
    pub onset: T,
    pub waveform: FaultWaveform<T>,
    pub symmetric: bool,
}

impl<T: Scalar> FaultModel<T> {
    /// Fault value at time `t`; zero for `t <= onset`.
    pub fn value(&self, t: T) -> T {
        if t <= self.onset {
            T::zero()
        } else {
            self.waveform_value(t)
        }
    }

    /// The raw waveform at absolute time `t`, ignoring onset gating (the
    /// ramp still measures from its onset). Integrators use this together
    /// with their own step-aligned activation so a step never straddles
    /// the onset discontinuity.
    pub fn waveform_value(&self, t: T) -> T {
        match self.waveform {
            FaultWaveform::Cosine { amplitude, frequency } => amplitude * (frequency * t).cos(),
            FaultWaveform::Sine { amplitude, frequency } => amplitude * (frequency * t).sin(),
            FaultWaveform::Constant { level } => level,
            FaultWaveform::Ramp { slope } => slope * (t - self.onset),
        }
    }

    /// Whether this fault corrupts the directed link `from -> to`.
    pub fn affects(&self, from: usize, to: usize) -> bool {
        (self.from, self.to) == (from, to) || (self.symmetric && (self.to, self.from) == (from, to))
    }
}

/// Applies a fault to a transmitted value at time `t`.
pub fn corrupt<T: Scalar>(value: T, fault: &FaultModel<T>, t: T) -> T {
    value + fault.value(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn isac() -> ExtendedSystem<f64> {
        build_extended(&EstimatorDesign::benchmark(EstimatorKind::Isac, 1.5).unwrap())
    }

    fn rac() -> ExtendedSystem<f64> {
        build_extended(&EstimatorDesign::benchmark(EstimatorKind::Rac, 1.5).unwrap())
    }

    fn benchmark_gain() -> DVector<f64> {
        DVector::from_vec(vec![5.3993, 12.1485, 1.7998])
    }

    fn assert_spectrum(actual: &[Complex<f64>], expected: &[(f64, f64)], tol: f64) {
        assert_eq!(actual.len(), expected.len());
        let mut used = vec![false; expected.len()];
        for a in actual {
            let hit = expected.iter().enumerate().find(|(i, (re, im))| {
                !used[*i] && (a.re - re).abs() < tol && (a.im - im).abs() < tol
            });
            let (i, _) = hit.unwrap_or_else(|| panic!("unmatched eigenvalue {a}"));
            used[i] = true;
        }
    }

    #[test]
    fn extended_matrices_match_hand_derivation() {
        let sys = isac();
        let a = DMatrix::from_row_slice(
            3,
            3,
            &[-3.0, -9.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        );
        assert_eq!(sys.a, a);
        assert_eq!(sys.b.as_slice(), &[-1.0, 0.0, 0.0]);
        assert_eq!(sys.e.as_slice(), &[0.0, 0.0, 1.0]);
        assert_eq!(sys.c.as_slice(), &[3.0, 6.75, 1.0]);

        let sys = rac();
        let a = DMatrix::from_row_slice(
            3,
            3,
            &[0.0, -2.25, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        );
        assert_eq!(sys.a, a);
        assert_eq!(sys.c.as_slice(), &[1.5, 0.0, 1.0]);
    }

    #[test]
    fn extended_transfer_is_block_transfer_plus_one_over_s() {
        // From the fault rate to the measurement: (h(s) + 1) / s.
        let sys = isac();
        let s = 2.0;
        let x = (DMatrix::identity(3, 3) * s - &sys.a).lu().solve(&sys.e).unwrap();
        let y = (&sys.c * x)[0];
        let h2 = (3.0 * s + 6.75) / (s * s + 3.0 * s + 9.0);
        assert_relative_eq!(y, (h2 + 1.0) / s, max_relative = 1e-12);

        let sys = rac();
        let s = 1.0;
        let x = (DMatrix::identity(3, 3) * s - &sys.a).lu().solve(&sys.e).unwrap();
        let y = (&sys.c * x)[0];
        assert_relative_eq!(y, (1.5 / 3.25 + 1.0) / 1.0, max_relative = 1e-12);
    }

    #[test]
    fn existence_check_freezes_invariant_zeros() {
        let report = uio_existence_check(&isac()).unwrap();
        assert_eq!(report.ce, 1.0);
        assert!(report.ce_nonzero);
        let im = 6.75f64.sqrt();
        assert_spectrum(&report.invariant_zeros, &[(-3.0, -im), (-3.0, im)], 1e-8);
        assert!(report.zeros_stable);
        assert!(report.exists);
        // Sorted by (re, im): negative imaginary part first.
        assert!(report.invariant_zeros[0].im < 0.0);

        let report = uio_existence_check(&rac()).unwrap();
        let im = 1.6875f64.sqrt();
        assert_spectrum(&report.invariant_zeros, &[(-0.75, -im), (-0.75, im)], 1e-8);
        assert!(report.exists);
    }

    #[test]
    fn existence_fails_on_unstable_invariant_zeros() {
        // h = -3s / (s^2 + s + 1): h + 1 has the double root s = 1.
        let h = crate::lti::TransferFunction::new(
            Polynomial::new(vec![0.0, -3.0]),
            Polynomial::new(vec![1.0, 1.0, 1.0]),
        )
        .unwrap();
        let g = EstimatorDesign::benchmark(EstimatorKind::Isac, 1.5).unwrap().g_tf().clone();
        let d = Polynomial::new(vec![2.25, 0.0, 1.0]);
        let design = EstimatorDesign::new(EstimatorKind::Isac, h, g, d).unwrap();
        let sys = build_extended(&design);

        let report = uio_existence_check(&sys).unwrap();
        assert_spectrum(&report.invariant_zeros, &[(1.0, 0.0), (1.0, 0.0)], 1e-6);
        assert!(!report.zeros_stable);
        assert!(!report.exists);
        assert!(matches!(
            uio_design(&sys, &ObserverGainSpec::Poles(vec![-2.0])).unwrap_err(),
            Error::UioNotExistent(_)
        ));
    }

    #[test]
    fn design_with_explicit_gain_matches_hand_derivation() {
        let sys = isac();
        let obs = uio_design(&sys, &ObserverGainSpec::K1(benchmark_gain())).unwrap();

        assert_eq!(obs.h.as_slice(), &[0.0, 0.0, 1.0]);
        assert_eq!(obs.t.row(2).transpose().as_slice(), &[-3.0, -6.75, 0.0]);
        assert_eq!(obs.tb.as_slice(), &[-1.0, 0.0, 3.0]);

        let mode = -(3.0 * 5.3993 + 6.75 * 12.1485 + 1.7998);
        let im = 6.75f64.sqrt();
        assert_spectrum(&obs.f_eigenvalues, &[(mode, 0.0), (-3.0, -im), (-3.0, im)], 1e-6);

        for (a, b) in obs.k2.iter().zip([-4.3993, -12.1485, -4.7998]) {
            assert_relative_eq!(*a, b, epsilon = 1e-12);
        }
        for (a, b) in obs.k.iter().zip([1.0, 0.0, -3.0]) {
            assert_relative_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn design_from_poles_places_the_assignable_mode() {
        let sys = rac();
        let poles = default_observer_poles(1.5);
        assert_eq!(poles, vec![-2.0, -2.5, -3.0]);
        let obs = uio_design(&sys, &ObserverGainSpec::Poles(poles)).unwrap();
        assert_eq!(obs.k1.as_slice(), &[0.0, 0.0, 2.0]);
        let im = 1.6875f64.sqrt();
        assert_spectrum(
            &obs.f_eigenvalues,
            &[(-2.0, 0.0), (-0.75, -im), (-0.75, im)],
            1e-8,
        );
    }

    #[test]
    fn design_rejects_bad_gain_requests() {
        let sys = isac();
        assert!(matches!(
            uio_design(&sys, &ObserverGainSpec::Poles(vec![])).unwrap_err(),
            Error::PolesNotStable
        ));
        assert!(matches!(
            uio_design(&sys, &ObserverGainSpec::Poles(vec![0.5])).unwrap_err(),
            Error::PolesNotStable
        ));
        assert!(matches!(
            uio_design(&sys, &ObserverGainSpec::K1(DVector::from_vec(vec![1.0]))).unwrap_err(),
            Error::DimensionMismatch(_)
        ));
        // A gain pushing the assignable mode to +1 leaves F non-Hurwitz.
        let k1 = DVector::from_vec(vec![0.0, 0.0, -1.0]);
        assert!(matches!(
            uio_design(&sys, &ObserverGainSpec::K1(k1)).unwrap_err(),
            Error::NotHurwitz(_)
        ));
    }

    #[test]
    fn observer_derivative_is_linear_in_its_inputs() {
        let obs = uio_design(&isac(), &ObserverGainSpec::K1(benchmark_gain())).unwrap();
        let z = DVector::from_vec(vec![0.2, -0.4, 0.6]);

        let rest = observer_derivative(&obs, &DVector::zeros(3), 0.0, 0.0);
        assert_eq!(rest.dz.as_slice(), &[0.0, 0.0, 0.0]);
        assert_eq!(rest.fhat, 0.0);

        let out = observer_derivative(&obs, &z, 2.0, -1.0);
        let expected_dz = &obs.f * &z + &obs.tb * -1.0 + &obs.k * 2.0;
        assert_eq!(out.dz, expected_dz);
        assert_eq!(out.xhat.as_slice(), &[0.2, -0.4, 0.6 + 2.0]);
        assert_relative_eq!(out.fhat, 2.6);
    }

    #[test]
    fn fault_is_inactive_through_its_onset() {
        let fault = FaultModel {
            from: 1,
            to: 2,
            onset: 25.0,
            waveform: FaultWaveform::Cosine { amplitude: 1.0, frequency: 0.75 },
            symmetric: true,
        };
        assert_eq!(fault.value(0.0), 0.0);
        assert_eq!(fault.value(25.0), 0.0);
        let t: f64 = 25.001;
        assert_relative_eq!(fault.value(t), (0.75 * t).cos());
        assert_relative_eq!(corrupt(2.0, &fault, t), 2.0 + (0.75 * t).cos());

        assert!(fault.affects(1, 2));
        assert!(fault.affects(2, 1));
        assert!(!fault.affects(1, 3));
        let oneway = FaultModel { symmetric: false, ..fault };
        assert!(oneway.affects(1, 2));
        assert!(!oneway.affects(2, 1));
    }

    #[test]
    fn ramp_and_constant_waveforms_follow_their_clocks() {
        let ramp = FaultModel {
            from: 1,
            to: 2,
            onset: 10.0,
            waveform: FaultWaveform::Ramp { slope: 2.0 },
            symmetric: false,
        };
        assert_eq!(ramp.value(9.0), 0.0);
        assert_relative_eq!(ramp.value(11.0), 2.0);

        let level = FaultModel {
            from: 1,
            to: 2,
            onset: 10.0,
            waveform: FaultWaveform::Constant { level: 5.0 },
            symmetric: false,
        };
        assert_eq!(level.value(10.0), 0.0);
        assert_eq!(level.value(10.5), 5.0);

        let sine = FaultModel {
            from: 1,
            to: 2,
            onset: 0.0,
            waveform: FaultWaveform::Sine { amplitude: 2.0, frequency: 3.0 },
            symmetric: false,
        };
        assert_relative_eq!(sine.value(0.5), 2.0 * 1.5f64.sin());
    }
}
