//! Simulation library for dynamic average consensus networks with
//! communication-fault detection and accommodation.
//!
//! A network of `n` agents, each holding a time-varying scalar input
//! `phi_i(t)`, cooperates to track the network-wide average
//! `(1/n) * sum(phi_i(t))` using only neighbor-to-neighbor exchange of
//! estimator variables. Two estimator flavors are provided:
//!
//! * **ISAC** — internally stable average consensus. Every internal state
//!   stays bounded, but the estimate is only correct when the coupling
//!   subsystem starts from the right initial condition.
//! * **RAC** — robust average consensus. The estimate converges from any
//!   initial condition, at the price of an internal integrator state that
//!   may grow without bound.
//!
//! Both flavors embed an internal model `d(s)` of the input generators so
//! that sinusoidal inputs are tracked with zero steady-state error.
//!
//! On top of the estimators, [`fdi`] implements per-link unknown-input
//! observers that reconstruct an additive fault signal injected on a
//! communication link, independently of the (unknown) fault dynamics, and
//! [`sim`] wires everything into a fixed-step network simulation with fault
//! injection, topology events, and optional fault accommodation.
//!
//! The crate is generic over the floating-point scalar via [`Scalar`];
//! `f64` aliases for the main types are exported at the crate root.

pub mod consensus;
pub mod error;
pub mod fdi;
pub mod graph;
pub mod linalg;
pub mod lti;
pub mod sim;
pub mod tol;

pub use error::{Error, Result};

/// Floating-point scalar type for all estimator and observer math.
///
/// Implemented for `f32` and `f64`. Numeric literals are converted through
/// [`num_traits::FromPrimitive`]; tolerances in [`tol`] are calibrated for
/// `f64` and become conservative no-ops below `f32` resolution.
pub trait Scalar:
    nalgebra::RealField + num_traits::FromPrimitive + num_traits::ToPrimitive + Copy + std::iter::Sum
{
}

impl Scalar for f64 {}
impl Scalar for f32 {}

/// Converts an `f64` constant into the working scalar type.
pub(crate) fn real<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("constant not representable in scalar type")
}

pub type Polynomial64 = lti::Polynomial<f64>;
pub type TransferFunction64 = lti::TransferFunction<f64>;
pub type StateSpace64 = lti::StateSpace<f64>;
pub type Laplacian64 = graph::Laplacian<f64>;
pub type EstimatorDesign64 = consensus::EstimatorDesign<f64>;
pub type DesignReport64 = consensus::DesignReport<f64>;
pub type ExtendedSystem64 = fdi::ExtendedSystem<f64>;
pub type ObserverMatrices64 = fdi::ObserverMatrices<f64>;
pub type Scenario64 = sim::Scenario<f64>;
pub type TimeSeries64 = sim::TimeSeries<f64>;
pub type MetricsReport64 = sim::MetricsReport<f64>;
