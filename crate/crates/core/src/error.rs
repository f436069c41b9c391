//! Crate-wide error type. Diagnostic payloads are carried as `f64` so the
//! error enum stays independent of the scalar parameter.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("invalid exponent configuration: {0}")]
    InvalidExponents(String),

    #[error("exponent hypothesis violated for pairs {pairs:?}: {detail}")]
    HypothesisViolation {
        pairs: Vec<(usize, usize)>,
        detail: String,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("multiplier symbol singular or non-finite at frequency ({0}, {1}, {2})")]
    SingularSymbol(f64, f64, f64),

    #[error("descriptor support exceeds the box: boundary magnitude {boundary:.3e} above tolerance {tol:.3e}")]
    Truncation { boundary: f64, tol: f64 },

    #[error("margin violation: {0}")]
    MarginViolation(String),

    #[error("region precondition failed: {0}")]
    Precondition(String),

    #[error("z = {z_re}+{z_im}i is within {dist:.3e} of the pole at {pole_re} (order {order}); use the residue operations")]
    PoleProximity {
        z_re: f64,
        z_im: f64,
        pole_re: f64,
        dist: f64,
        order: u8,
    },

    #[error("quadrature failed to meet tolerance: achieved {achieved:.3e}, target {target:.3e}")]
    QuadratureFailure { achieved: f64, target: f64 },

    #[error("residue ladder did not converge; extrapolants {ladder:?}")]
    ExtrapolationFailure { ladder: Vec<(f64, f64)> },

    #[error("decay certificate required: {0}")]
    MissingCertificate(String),

    #[error("eigenvalue condition violated: smallest singular value {sigma_min:.3e} below threshold {threshold:.3e}")]
    EigenvalueCondition { sigma_min: f64, threshold: f64 },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("Runge approximation failed: {0}")]
    Runge(String),

    #[error("oscillation wavenumber {lambda} exceeds the admissible limit {max_admissible:.3} on this grid")]
    NyquistExceeded { lambda: f64, max_admissible: f64 },

    #[error("snapshot format error: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<V> = std::result::Result<V, Error>;
