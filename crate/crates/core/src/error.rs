use thiserror::Error;

/// Errors reported by the numerical machinery.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("Newton iteration did not converge (last residual {residual:.3e})")]
    NoConvergence { residual: f64 },

    #[error("Jacobian is singular at the current iterate")]
    SingularJacobian,

    #[error("step count exceeded ({0} steps)")]
    StepLimitExceeded(usize),

    #[error("step size underflow at t = {0}")]
    StepUnderflow(f64),

    #[error("eigenvalue iteration did not converge")]
    EigenNoConvergence,

    #[error("orbit is degenerate: {0}")]
    DegenerateOrbit(String),

    #[error("shooting converged to an equilibrium, not a periodic orbit")]
    ConvergedToEquilibrium,

    #[error("state is not an equilibrium (residual {residual:.3e})")]
    NotAnEquilibrium { residual: f64 },

    #[error("branch undefined: {0}")]
    BranchUndefined(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
