//! Named numeric tolerances used across the crate.
//!
//! All values are calibrated for `f64` arithmetic on systems of the size
//! this crate targets (a handful of states per agent, tens of agents).
//! They are deliberately centralized so every module agrees on what
//! "negligible" means.

/// Trailing polynomial coefficients at or below this magnitude are trimmed
/// during normalization.
pub const COEFF_TRIM: f64 = 1e-12;

/// Relative tolerance for declaring a polynomial division remainder zero,
/// scaled by `1 + max |dividend coefficient|`.
pub const REMAINDER_ZERO: f64 = 1e-9;

/// Numerator/denominator roots closer than this are treated as a common
/// factor and rejected when constructing a transfer function.
pub const COPRIME: f64 = 1e-8;

/// Relative residual bound for accepting a computed polynomial root.
pub const ROOT_RESIDUAL: f64 = 1e-6;

/// Eigenvalues must have real part below `-HURWITZ_MARGIN` to count as
/// strictly stable; symmetrically, a Laplacian eigenvalue below this
/// magnitude counts as zero.
pub const HURWITZ_MARGIN: f64 = 1e-9;

/// Pole-placement results must reproduce the requested eigenvalues to this
/// absolute accuracy.
pub const PLACEMENT: f64 = 1e-6;

/// Observability-matrix rank decisions use this relative singular-value
/// cutoff.
pub const RANK: f64 = 1e-8;

/// Residual bound for the unknown-input observer design identities,
/// e.g. `(HC - I)E = 0`.
pub const DESIGN_RESIDUAL: f64 = 1e-12;

/// State-space evaluation treats `s` as a pole when the linear solve
/// residual exceeds this relative bound.
pub const EVAL_POLE: f64 = 1e-6;

/// Times are considered to lie on the integration grid when they match a
/// step boundary to this absolute tolerance.
pub const TIME_GRID: f64 = 1e-9;

/// States larger than this in magnitude are declared divergent.
pub const DIVERGENCE: f64 = 1e12;
