use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Exhaustive enumeration or dense storage would exceed the supported size.
    #[error("capacity exceeded: {what} = {requested} (limit {limit})")]
    Capacity {
        what: &'static str,
        requested: usize,
        limit: usize,
    },

    #[error("parse error at {context}: {message}")]
    Parse { context: String, message: String },

    #[error("indeterminate: {0}")]
    Indeterminate(String),

    #[error(
        "integration failed at t = {t:.6e} after {steps} steps (step size {step_size:.3e}): {reason}"
    )]
    Integration {
        t: f64,
        steps: usize,
        step_size: f64,
        reason: String,
    },

    #[error("mean-field refinement did not converge at A = {a}, B = {b}, Jz = {jz}; grid best m = {grid_best}")]
    MeanFieldNotConverged {
        a: f64,
        b: f64,
        jz: f64,
        grid_best: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
