//! Dynamic average consensus estimators.
//!
//! Each agent runs two coupled scalar subsystems realized from transfer
//! functions `h(s)` and `g(s)`, together embedding an internal model
//! `d(s)` of the input generators. Two wirings of the same blocks give
//! estimators with complementary properties:
//!
//! * [`EstimatorKind::Isac`]: the coupling subsystem integrates neighbor
//!   disagreement, keeping all internal states bounded, but a wrong initial
//!   condition on that subsystem biases the estimate forever.
//! * [`EstimatorKind::Rac`]: the coupling subsystem integrates the local
//!   estimate itself. Initial conditions wash out of the estimate entirely
//!   (they cancel in differences over the network), at the cost of an
//!   internal state that can drift without bound.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::lti::{Polynomial, StateSpace, TransferFunction};
use crate::{real, tol, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimatorKind {
    Isac,
    Rac,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Waveform {
    Sin,
    Cos,
}

/// A sinusoidal reference input `amplitude * wave(frequency * t + phase)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReferenceSignal<T: Scalar> {
    pub amplitude: T,
    pub frequency: T,
    pub phase: T,
    pub waveform: Waveform,
}

impl<T: Scalar> ReferenceSignal<T> {
    pub fn eval(&self, t: T) -> T {
        let arg = self.frequency * t + self.phase;
        let w = match self.waveform {
            Waveform::Sin => arg.sin(),
            Waveform::Cos => arg.cos(),
        };
        self.amplitude * w
    }

    /// Denominator of the signal's Laplace transform, `s^2 + frequency^2`:
    /// the generator polynomial an internal model must absorb.
    pub fn generator_denominator(&self) -> Polynomial<T> {
        Polynomial::new(vec![self.frequency * self.frequency, T::zero(), T::one()])
    }
}

/// The bundled benchmark input family at frequency `omega`: node `i` holds
/// `i * sin(omega t + i pi/4)` for `i <= 5` and `i * cos(omega t + i pi/4)`
/// above.
pub fn staggered_sinusoids<T: Scalar>(n: usize, omega: T) -> Vec<ReferenceSignal<T>> {
    (1..=n)
        .map(|i| {
            let fi = real::<T>(i as f64);
            ReferenceSignal {
                amplitude: fi,
                frequency: omega,
                phase: fi * T::pi() / real(4.0),
                waveform: if i <= 5 { Waveform::Sin } else { Waveform::Cos },
            }
        })
        .collect()
}

/// Pointwise network average of a signal set; errors on an empty set.
pub fn average_signal<T: Scalar>(signals: &[ReferenceSignal<T>], t: T) -> Result<T> {
    if signals.is_empty() {
        return Err(Error::EmptySignalSet);
    }
    let sum: T = signals.iter().map(|s| s.eval(t)).sum();
    Ok(sum / real(signals.len() as f64))
}

/// Realized estimator blocks shared by every agent in a network.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorDesign<T: Scalar> {
    pub kind: EstimatorKind,
    /// Realization of `h(s)`: the estimator's forward path.
    pub h: StateSpace<T>,
    /// Realization of `g(s)`: the coupling path.
    pub g: StateSpace<T>,
    /// Internal model polynomial `d(s)` shared by the design.
    pub d: Polynomial<T>,
    h_tf: TransferFunction<T>,
    g_tf: TransferFunction<T>,
}

impl<T: Scalar> EstimatorDesign<T> {
    /// Realizes a design from its transfer functions.
    ///
    /// ISAC needs a strictly proper `h` (its forward path is driven by the
    /// coupling output), RAC a strictly proper `g` (otherwise the wiring
    /// has an algebraic loop); violations are rejected.
    pub fn new(
        kind: EstimatorKind,
        h_tf: TransferFunction<T>,
        g_tf: TransferFunction<T>,
        d: Polynomial<T>,
    ) -> Result<Self> {
        match kind {
            EstimatorKind::Isac => {
                if !h_tf.strictly_proper() {
                    return Err(Error::NotStrictlyProper("ISAC requires strictly proper h"));
                }
            }
            EstimatorKind::Rac => {
                if !g_tf.strictly_proper() {
                    return Err(Error::NotStrictlyProper("RAC requires strictly proper g"));
                }
            }
        }
        Ok(Self {
            kind,
            h: StateSpace::realize(&h_tf),
            g: StateSpace::realize(&g_tf),
            d,
            h_tf,
            g_tf,
        })
    }

    /// The bundled benchmark design at frequency `omega`:
    /// `h = (2w s + 3w^2)/(s^2 + 2w s + 4w^2)`, `g = 1.5 s/(s^2 + w^2)`,
    /// `d = s^2 + w^2`.
    pub fn benchmark(kind: EstimatorKind, omega: T) -> Result<Self> {
        let w2 = omega * omega;
        let h = TransferFunction::new(
            Polynomial::new(vec![real::<T>(3.0) * w2, real::<T>(2.0) * omega]),
            Polynomial::new(vec![real::<T>(4.0) * w2, real::<T>(2.0) * omega, T::one()]),
        )?;
        let g = TransferFunction::new(
            Polynomial::new(vec![T::zero(), real(1.5)]),
            Polynomial::new(vec![w2, T::zero(), T::one()]),
        )?;
        let d = Polynomial::new(vec![w2, T::zero(), T::one()]);
        Self::new(kind, h, g, d)
    }

    pub fn h_tf(&self) -> &TransferFunction<T> {
        &self.h_tf
    }

    pub fn g_tf(&self) -> &TransferFunction<T> {
        &self.g_tf
    }

    /// Internal-model frequency recovered from `d(s) = s^2 + omega^2`.
    pub fn omega(&self) -> T {
        self.d.coeff(0).max(T::zero()).sqrt()
    }

    /// State dimension of the subsystem a fault observer must reconstruct:
    /// the transmitting agent's `h` states for ISAC, `g` states for RAC.
    pub fn monitored_dim(&self) -> usize {
        match self.kind {
            EstimatorKind::Isac => self.h.dim(),
            EstimatorKind::Rac => self.g.dim(),
        }
    }
}

/// One agent's internal state: `x1` drives the `h` block, `x2` the `g`
/// block.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentState<T: Scalar> {
    pub x1: DVector<T>,
    pub x2: DVector<T>,
}

impl<T: Scalar> AgentState<T> {
    pub fn zero(design: &EstimatorDesign<T>) -> Self {
        Self {
            x1: DVector::zeros(design.h.dim()),
            x2: DVector::zeros(design.g.dim()),
        }
    }
}

/// State derivative and instantaneous outputs of one ISAC agent.
#[derive(Clone, Debug, PartialEq)]
pub struct IsacDerivative<T: Scalar> {
    pub dx1: DVector<T>,
    pub dx2: DVector<T>,
    /// Estimate of the network average.
    pub nu: T,
    /// Companion variable transmitted alongside `nu` for fault detection.
    pub mu: T,
}

/// State derivative and instantaneous outputs of one RAC agent.
#[derive(Clone, Debug, PartialEq)]
pub struct RacDerivative<T: Scalar> {
    pub dx1: DVector<T>,
    pub dx2: DVector<T>,
    /// Estimate of the network average.
    pub nu: T,
    /// Coupling variable exchanged with neighbors.
    pub eta: T,
}

/// ISAC agent dynamics:
///
/// ```text
/// nu_i = C1 x1,    mu_i = C2 x2 + D2 * S - phi_i
/// dx1  = A1 x1 - B1 mu_i
/// dx2  = A2 x2 + B2 * S
/// ```
///
/// where `S` sums `nu_self - nu_j` over the supplied neighbor values, plus
/// `nu_self - nu_recv + fhat` for each corrected link in `corrected`.
pub fn isac_derivative_corrected<T: Scalar>(
    design: &EstimatorDesign<T>,
    state: &AgentState<T>,
    phi: T,
    nu_self: T,
    neighbor_nus: &[T],
    corrected: &[(T, T)],
) -> IsacDerivative<T> {
    let mut coupling = T::zero();
    for &nu_j in neighbor_nus {
        coupling += nu_self - nu_j;
    }
    for &(nu_recv, fhat) in corrected {
        coupling += nu_self - nu_recv + fhat;
    }
    let nu = (&design.h.c * &state.x1)[0];
    let mu = (&design.g.c * &state.x2)[0] + design.g.d * coupling - phi;
    let dx1 = &design.h.a * &state.x1 - &design.h.b * mu;
    let dx2 = &design.g.a * &state.x2 + &design.g.b * coupling;
    IsacDerivative { dx1, dx2, nu, mu }
}

/// ISAC agent dynamics with every neighbor value taken at face value.
pub fn isac_derivative<T: Scalar>(
    design: &EstimatorDesign<T>,
    state: &AgentState<T>,
    phi: T,
    nu_self: T,
    neighbor_nus: &[T],
) -> IsacDerivative<T> {
    isac_derivative_corrected(design, state, phi, nu_self, neighbor_nus, &[])
}

/// RAC agent dynamics:
///
/// ```text
/// u    = phi_i - S
/// nu_i = C1 x1 + D1 u,    eta_i = C2 x2
/// dx1  = A1 x1 + B1 u
/// dx2  = A2 x2 + B2 nu_i
/// ```
///
/// with `S` as in [`isac_derivative_corrected`] but over the `eta`
/// exchange variables.
pub fn rac_derivative_corrected<T: Scalar>(
    design: &EstimatorDesign<T>,
    state: &AgentState<T>,
    phi: T,
    eta_self: T,
    neighbor_etas: &[T],
    corrected: &[(T, T)],
) -> RacDerivative<T> {
    let mut coupling = T::zero();
    for &eta_j in neighbor_etas {
        coupling += eta_self - eta_j;
    }
    for &(eta_recv, fhat) in corrected {
        coupling += eta_self - eta_recv + fhat;
    }
    let u = phi - coupling;
    let nu = (&design.h.c * &state.x1)[0] + design.h.d * u;
    let eta = (&design.g.c * &state.x2)[0];
    let dx1 = &design.h.a * &state.x1 + &design.h.b * u;
    let dx2 = &design.g.a * &state.x2 + &design.g.b * nu;
    RacDerivative { dx1, dx2, nu, eta }
}

/// RAC agent dynamics with every neighbor value taken at face value.
pub fn rac_derivative<T: Scalar>(
    design: &EstimatorDesign<T>,
    state: &AgentState<T>,
    phi: T,
    eta_self: T,
    neighbor_etas: &[T],
) -> RacDerivative<T> {
    rac_derivative_corrected(design, state, phi, eta_self, neighbor_etas, &[])
}

/// Outcome of checking one divisibility condition, with the quotient when
/// it holds.
#[derive(Clone, Debug, PartialEq)]
pub struct DivisibilityCheck<T: Scalar> {
    pub pass: bool,
    pub quotient: Option<Polynomial<T>>,
}

/// Stability outcome of the coupled polynomial at one Laplacian eigenvalue.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingRoot<T: Scalar> {
    pub lambda: T,
    /// Largest real part among the roots of `d_g d_h + lambda n_g n_h`.
    pub worst_real_part: T,
    pub pass: bool,
}

/// Report of the design feasibility conditions for exact average tracking.
///
/// `overall` is the conjunction of the premises and the four conditions:
/// (i) every declared input generator is absorbed by `d`, (ii) `n_h - d_h`
/// is divisible by `d` with `h` stable, (iii) the coupled polynomial is
/// strictly stable at every nonzero Laplacian eigenvalue, and (iv) `d_g`
/// is divisible by `d`.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignReport<T: Scalar> {
    /// Exactly one zero Laplacian eigenvalue (connected network).
    pub premise_connected: bool,
    /// `h` and `g` share no unstable root.
    pub premise_no_common_unstable: bool,
    /// Condition (i), per node.
    pub input_models: Vec<bool>,
    /// Condition (ii): `(n_h - d_h) / d` and stability of `h`.
    pub h_internal_model: DivisibilityCheck<T>,
    pub h_stable: bool,
    /// Condition (iii), per nonzero Laplacian eigenvalue.
    pub coupling: Vec<CouplingRoot<T>>,
    /// Condition (iv): `d_g / d`.
    pub g_internal_model: DivisibilityCheck<T>,
    pub overall: bool,
}

/// Checks the feasibility conditions for a design against declared input
/// generator denominators and a Laplacian spectrum (sorted ascending).
pub fn verify_design<T: Scalar>(
    h: &TransferFunction<T>,
    g: &TransferFunction<T>,
    d: &Polynomial<T>,
    input_denominators: &[Polynomial<T>],
    spectrum: &[T],
) -> Result<DesignReport<T>> {
    if d.is_zero() {
        return Err(Error::ZeroPolynomialDivision);
    }
    let margin = real::<T>(tol::HURWITZ_MARGIN);

    let zero_count = spectrum.iter().filter(|&&l| l.abs() <= margin).count();
    let premise_connected = zero_count == 1;

    // Roots are reused below; compute each set once.
    let h_poles = g_roots_or_empty(h.den());
    let g_poles = g_roots_or_empty(g.den());
    let premise_no_common_unstable = !h_poles.iter().any(|a| {
        a.re >= -margin
            && g_poles
                .iter()
                .any(|b| crate::linalg::cnorm(a - b) < real::<T>(tol::COPRIME))
    });

    let input_models = input_denominators
        .iter()
        .map(|den| Ok(den.divided_by(d)?.is_some()))
        .collect::<Result<Vec<bool>>>()?;

    let diff = &(h.num() - h.den());
    let h_quotient = diff.divided_by(d)?;
    let h_internal_model = DivisibilityCheck {
        pass: h_quotient.is_some(),
        quotient: h_quotient,
    };
    let h_stable = h_poles.iter().all(|p| p.re < -margin);

    let dgdh = h.den() * g.den();
    let ngnh = h.num() * g.num();
    let mut coupling = Vec::new();
    for &lambda in spectrum.iter().filter(|&&l| l.abs() > margin) {
        let closed = &dgdh + &ngnh.scaled(lambda);
        let worst = match closed.roots() {
            Ok(roots) if !roots.is_empty() => crate::linalg::max_real_part(&roots),
            _ => T::zero(),
        };
        coupling.push(CouplingRoot {
            lambda,
            worst_real_part: worst,
            pass: worst < -margin,
        });
    }

    let g_quotient = g.den().divided_by(d)?;
    let g_internal_model = DivisibilityCheck {
        pass: g_quotient.is_some(),
        quotient: g_quotient,
    };

    let overall = premise_connected
        && premise_no_common_unstable
        && input_models.iter().all(|&b| b)
        && h_internal_model.pass
        && h_stable
        && coupling.iter().all(|c| c.pass)
        && g_internal_model.pass;

    Ok(DesignReport {
        premise_connected,
        premise_no_common_unstable,
        input_models,
        h_internal_model,
        h_stable,
        coupling,
        g_internal_model,
        overall,
    })
}

fn g_roots_or_empty<T: Scalar>(p: &Polynomial<T>) -> Vec<nalgebra::Complex<T>> {
    p.roots().unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use approx::assert_relative_eq;

    fn poly(coeffs: &[f64]) -> Polynomial<f64> {
        Polynomial::new(coeffs.to_vec())
    }

    fn benchmark(kind: EstimatorKind) -> EstimatorDesign<f64> {
        EstimatorDesign::benchmark(kind, 1.5).unwrap()
    }

    #[test]
    fn benchmark_design_realizes_expected_blocks() {
        let d = benchmark(EstimatorKind::Isac);
        assert_eq!(d.h.c.as_slice(), &[3.0, 6.75]);
        assert_eq!(d.g.c.as_slice(), &[1.5, 0.0]);
        assert_eq!(d.d.coeffs(), &[2.25, 0.0, 1.0]);
        assert_relative_eq!(d.omega(), 1.5);
        assert_eq!(d.monitored_dim(), 2);
        assert_eq!(benchmark(EstimatorKind::Rac).monitored_dim(), 2);
    }

    #[test]
    fn estimator_kind_enforces_strict_properness() {
        // Biproper h is fine for RAC but not for ISAC.
        let h = TransferFunction::new(poly(&[2.0, 1.0]), poly(&[1.0, 1.0])).unwrap();
        let g = TransferFunction::new(poly(&[0.0, 1.5]), poly(&[2.25, 0.0, 1.0])).unwrap();
        let d = poly(&[2.25, 0.0, 1.0]);
        assert!(EstimatorDesign::new(EstimatorKind::Rac, h.clone(), g.clone(), d.clone()).is_ok());
        assert!(matches!(
            EstimatorDesign::new(EstimatorKind::Isac, h, g, d).unwrap_err(),
            Error::NotStrictlyProper(_)
        ));
    }

    #[test]
    fn staggered_signal_average_matches_direct_sum() {
        let signals = staggered_sinusoids::<f64>(9, 1.5);
        assert_eq!(signals.len(), 9);
        let direct: f64 = (1..=9)
            .map(|i| {
                let arg = i as f64 * std::f64::consts::FRAC_PI_4;
                if i <= 5 {
                    i as f64 * arg.sin()
                } else {
                    i as f64 * arg.cos()
                }
            })
            .sum::<f64>()
            / 9.0;
        let avg = average_signal(&signals, 0.0).unwrap();
        assert_relative_eq!(avg, direct, max_relative = 1e-12);

        assert_eq!(
            average_signal::<f64>(&[], 0.0).unwrap_err(),
            Error::EmptySignalSet
        );
    }

    #[test]
    fn isac_derivative_from_rest_matches_hand_calculation() {
        let design = benchmark(EstimatorKind::Isac);
        let state = AgentState::zero(&design);
        // phi = 1 at rest: mu = -1, dx1 = B1 = e1, dx2 = 0, nu = 0.
        let d = isac_derivative(&design, &state, 1.0, 0.0, &[0.0]);
        assert_eq!(d.nu, 0.0);
        assert_eq!(d.mu, -1.0);
        assert_eq!(d.dx1.as_slice(), &[1.0, 0.0]);
        assert_eq!(d.dx2.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn isac_derivative_couples_through_neighbor_disagreement() {
        let design = benchmark(EstimatorKind::Isac);
        let state = AgentState {
            x1: DVector::from_vec(vec![1.0, 0.0]),
            x2: DVector::from_vec(vec![0.0, 1.0]),
        };
        let nu_self = 3.0; // communicated value; equals C1 x1 in closed loop
        let d = isac_derivative(&design, &state, 0.5, nu_self, &[1.0, 2.0]);
        // coupling = (3-1) + (3-2) = 3; mu = C2 x2 + D2 coupling - phi with
        // C2 = [1.5, 0], D2 = 0, x2 = [0, 1].
        let coupling = 3.0;
        let mu = 1.5 * 0.0 + 0.0 * coupling - 0.5;
        assert_relative_eq!(d.mu, mu);
        assert_relative_eq!(d.nu, 3.0); // C1 x1 = 3*1 + 6.75*0
        // dx1 = A1 x1 - B1 mu
        assert_relative_eq!(d.dx1[0], -3.0 * 1.0 - mu);
        assert_relative_eq!(d.dx1[1], 1.0);
        // dx2 = A2 x2 + B2 * coupling
        assert_relative_eq!(d.dx2[0], -2.25 * 1.0 + coupling);
        assert_relative_eq!(d.dx2[1], 0.0);
    }

    #[test]
    fn rac_derivative_from_rest_matches_hand_calculation() {
        let design = benchmark(EstimatorKind::Rac);
        let state = AgentState::zero(&design);
        // phi = 1, no disagreement: u = 1, dx1 = B1, nu = eta = 0, dx2 = 0.
        let d = rac_derivative(&design, &state, 1.0, 0.0, &[0.0]);
        assert_eq!(d.nu, 0.0);
        assert_eq!(d.eta, 0.0);
        assert_eq!(d.dx1.as_slice(), &[1.0, 0.0]);
        assert_eq!(d.dx2.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn corrected_terms_cancel_a_perfectly_estimated_fault() {
        let design = benchmark(EstimatorKind::Isac);
        let state = AgentState {
            x1: DVector::from_vec(vec![0.3, -0.7]),
            x2: DVector::from_vec(vec![1.1, 0.2]),
        };
        let fault = 0.42;
        let clean = isac_derivative(&design, &state, 2.0, 1.0, &[0.6]);
        let corrected =
            isac_derivative_corrected(&design, &state, 2.0, 1.0, &[], &[(0.6 + fault, fault)]);
        assert_relative_eq!(corrected.mu, clean.mu, max_relative = 1e-14);
        for k in 0..2 {
            assert_relative_eq!(corrected.dx1[k], clean.dx1[k], max_relative = 1e-14);
            assert_relative_eq!(corrected.dx2[k], clean.dx2[k], max_relative = 1e-14);
        }
    }

    #[test]
    fn benchmark_design_passes_feasibility_on_benchmark_graph() {
        let design = benchmark(EstimatorKind::Isac);
        let lap = Graph::nine_node_benchmark().laplacian::<f64>().unwrap();
        let dens: Vec<_> = staggered_sinusoids::<f64>(9, 1.5)
            .iter()
            .map(|s| s.generator_denominator())
            .collect();
        let report =
            verify_design(design.h_tf(), design.g_tf(), &design.d, &dens, &lap.eigenvalues)
                .unwrap();
        assert!(report.premise_connected);
        assert!(report.premise_no_common_unstable);
        assert!(report.input_models.iter().all(|&b| b));
        assert!(report.h_internal_model.pass);
        // (n_h - d_h) = -(s^2 + 2.25): quotient is the constant -1.
        assert_eq!(
            report.h_internal_model.quotient.as_ref().unwrap().coeffs(),
            &[-1.0]
        );
        assert!(report.h_stable);
        assert_eq!(report.coupling.len(), 8);
        assert!(report.coupling.iter().all(|c| c.pass));
        assert!(report.g_internal_model.pass);
        assert_eq!(report.g_internal_model.quotient.as_ref().unwrap().coeffs(), &[1.0]);
        assert!(report.overall);
    }

    #[test]
    fn feasibility_fails_without_internal_model_in_g() {
        // g = 1/s has no internal model of s^2 + 2.25.
        let h = TransferFunction::new(poly(&[6.75, 3.0]), poly(&[9.0, 3.0, 1.0])).unwrap();
        let g = TransferFunction::new(poly(&[1.0]), poly(&[0.0, 1.0])).unwrap();
        let d = poly(&[2.25, 0.0, 1.0]);
        let dens = vec![d.clone(); 3];
        let lap = Graph::new(3, &[(1, 2), (2, 3)]).unwrap().laplacian::<f64>().unwrap();
        let report = verify_design(&h, &g, &d, &dens, &lap.eigenvalues).unwrap();
        assert!(!report.g_internal_model.pass);
        assert!(!report.overall);
    }

    #[test]
    fn feasibility_fails_when_h_lacks_internal_model() {
        // h = 1/(s+1): n_h - d_h = -s, not divisible by s^2 + 2.25.
        let h = TransferFunction::new(poly(&[1.0]), poly(&[1.0, 1.0])).unwrap();
        let g = TransferFunction::new(poly(&[0.0, 1.5]), poly(&[2.25, 0.0, 1.0])).unwrap();
        let d = poly(&[2.25, 0.0, 1.0]);
        let dens = vec![d.clone(); 3];
        let lap = Graph::new(3, &[(1, 2), (2, 3)]).unwrap().laplacian::<f64>().unwrap();
        let report = verify_design(&h, &g, &d, &dens, &lap.eigenvalues).unwrap();
        assert!(!report.h_internal_model.pass);
        assert!(!report.overall);
    }

    #[test]
    fn feasibility_reports_disconnected_network() {
        let design = benchmark(EstimatorKind::Rac);
        let lap = Graph::nine_node_benchmark()
            .remove_edge(3, 6)
            .unwrap()
            .laplacian::<f64>()
            .unwrap();
        let dens: Vec<_> = staggered_sinusoids::<f64>(9, 1.5)
            .iter()
            .map(|s| s.generator_denominator())
            .collect();
        let report =
            verify_design(design.h_tf(), design.g_tf(), &design.d, &dens, &lap.eigenvalues)
                .unwrap();
        assert!(!report.premise_connected);
        assert!(!report.overall);
    }
}
