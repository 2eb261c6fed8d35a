use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("box mismatch: {0}")]
    BoxMismatch(String),

    #[error("degenerate pole: |denominator constant| = {modulus:e} is below {tol:e}")]
    DegeneratePole { modulus: f64, tol: f64 },

    #[error("sampling grid too small: axis {axis} has {grid} points for degree {degree}")]
    GridTooSmall { axis: usize, grid: usize, degree: usize },

    #[error("con-eigenvalue solver did not converge: residual {residual:e} exceeds {tol:e}")]
    ConvergenceFailure { residual: f64, tol: f64 },

    #[error("support mismatch: {0}")]
    SupportMismatch(String),

    #[error("interpolation data is infeasible: {0}")]
    Infeasible(String),

    #[error("feasibility undecided after {iterations} iterations (best residual {best_residual:e})")]
    IterationLimit { iterations: usize, best_residual: f64 },

    #[error("rank defect while orthonormalizing: {0}")]
    RankDefect(String),

    #[error("U22 entry of the unitary extension is {0:e}, expected zero")]
    U22NotZero(f64),

    #[error("resolvent is singular at the requested point")]
    SingularResolvent,

    #[error("unavailable: {0}")]
    Unavailable(String),

    #[error("degree bound violated: per-variable degree {degree} exceeds {bound}")]
    DegreeBoundViolated { degree: usize, bound: usize },

    #[error("point does not belong to K11 (slacks {slack1:e}, {slack2:e})")]
    NotMember { slack1: f64, slack2: f64 },

    #[error("domain violation: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
