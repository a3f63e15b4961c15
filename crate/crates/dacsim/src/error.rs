//! Crate-wide error type.
//!
//! Error payloads are kept as `f64`/`String` so the enum stays non-generic
//! regardless of the scalar type used by the caller.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("division by zero polynomial")]
    ZeroPolynomialDivision,

    #[error("no roots defined for a zero or constant polynomial")]
    NoRoots,

    #[error("polynomial degree {0} exceeds the supported maximum of 32")]
    DegreeTooLarge(usize),

    #[error("eigenvalue iteration failed to converge")]
    EigenConvergence,

    #[error("zero denominator polynomial")]
    ZeroDenominator,

    #[error("improper transfer function: numerator degree {num} exceeds denominator degree {den}")]
    Improper { num: usize, den: usize },

    #[error("numerator and denominator share a root near {re}{im:+}i")]
    CommonRoot { re: f64, im: f64 },

    #[error("transfer function must be strictly proper: {0}")]
    NotStrictlyProper(&'static str),

    #[error("evaluation at pole: s = {re}{im:+}i is an eigenvalue of A")]
    EvalAtPole { re: f64, im: f64 },

    #[error("pair not observable")]
    NotObservable,

    #[error("pole set is not closed under conjugation")]
    PolesNotConjugateClosed,

    #[error("pole set must lie strictly in the open left half-plane")]
    PolesNotStable,

    #[error("pole placement verification failed: eigenvalue deviation {0}")]
    PlacementVerification(f64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("node index {index} out of range 1..={n}")]
    NodeOutOfRange { index: usize, n: usize },

    #[error("self-loop at node {0}")]
    SelfLoop(usize),

    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),

    #[error("edge not present: ({0}, {1})")]
    EdgeNotPresent(usize, usize),

    #[error("empty signal set")]
    EmptySignalSet,

    #[error("unknown-input observer does not exist: {0}")]
    UioNotExistent(String),

    #[error("observer dynamics matrix is not Hurwitz: max eigenvalue real part {0}")]
    NotHurwitz(f64),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("divergence at t = {t}: state is no longer finite")]
    Divergence { t: f64 },

    #[error("no recorded samples in window [{a}, {b}]")]
    EmptyWindow { a: f64, b: f64 },

    #[error("step-size study needs at least three step sizes with a constant refinement ratio")]
    BadStepSizeList,

    #[error("numerical failure: {0}")]
    Numerical(String),
}
