use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    Dimension { expected: usize, found: usize },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("schedule singularity at t = {time}: {reason}")]
    ScheduleSingularity { time: f64, reason: String },

    #[error("norm drift {drift:.3e} exceeds tolerance at t = {time} with {steps} steps; increase the step count")]
    Accuracy { drift: f64, time: f64, steps: usize },

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("certification violated: true overlap {true_overlap} below bound {lower_bound} (margin {margin:.3e})")]
    CertificationViolation {
        true_overlap: f64,
        lower_bound: f64,
        margin: f64,
    },
}

impl Error {
    pub(crate) fn singular(time: f64, reason: impl Into<String>) -> Self {
        Error::ScheduleSingularity {
            time,
            reason: reason.into(),
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
