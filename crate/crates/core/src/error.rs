use thiserror::Error;

/// Errors raised while assembling or running a splitting method.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("{0}: arguments live in different spaces")]
    SpaceMismatch(&'static str),

    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid step schedule: {0}")]
    InvalidSchedule(String),

    #[error("gamma = {gamma} violates γ ∈ ]0,1/χ[ (χ = {chi}, so gamma must lie strictly between 0 and {bound})")]
    GammaOutOfRange { gamma: f64, chi: f64, bound: f64 },

    #[error("operator is not monotone: {0}")]
    NotMonotone(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("no closed-form resolvent: {0}")]
    NoClosedForm(String),

    #[error(
        "partial inverse inner iteration stalled after {iterations} steps (residual {residual:e}); \
         the strong monotonicity / cocoercivity certificate is degenerate"
    )]
    DegenerateCertificate { iterations: usize, residual: f64 },

    #[error("trace carries no iterate snapshots")]
    MissingIterates,

    #[error("invalid problem: {0}")]
    InvalidProblem(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}

/// Validates `gamma ∈ ]0, 1/chi[` (any positive gamma when `chi == 0`).
pub(crate) fn check_gamma(gamma: f64, chi: f64) -> Result<()> {
    let bound = if chi > 0.0 { 1.0 / chi } else { f64::INFINITY };
    if gamma.is_finite() && gamma > 0.0 && gamma < bound {
        Ok(())
    } else {
        Err(Error::GammaOutOfRange { gamma, chi, bound })
    }
}
