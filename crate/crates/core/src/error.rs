use thiserror::Error;

pub type Result<T> = std::result::Result<T, TrimerError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrimerError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite state encountered")]
    NonFinite,

    /// A denominator of the ghost trigonometric relations fell below the
    /// singularity threshold.
    #[error("singular ghost configuration: {which} denominator is {value:e}")]
    SingularConfiguration { which: &'static str, value: f64 },

    #[error(
        "Newton iteration did not converge after {iterations} iterations (residual {residual:e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },

    /// The ghost solver landed on a PT-symmetric (A = C) point.
    #[error("converged to a symmetric point (|A - C| = {asymmetry:e}), regular rather than ghost")]
    SymmetricCollapse { asymmetry: f64 },

    #[error("central amplitude vanishes; phases are undetermined")]
    PhaseUndetermined,

    #[error("phase relations inconsistent: sin^2 + cos^2 = {norm}")]
    InconsistentPhases { norm: f64 },

    #[error("no sign change of {what} on [{lo}, {hi}]")]
    NoBracket {
        what: &'static str,
        lo: f64,
        hi: f64,
    },

    #[error("integration step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("inconsistent bifurcation data: {0}")]
    Inconsistent(String),
}
