use thiserror::Error;

use crate::integrate::SimulationFailure;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input of the wrong shape or content, e.g. a state of the wrong dimension.
    #[error("rejected input: {0}")]
    InvalidInput(String),

    /// Out-of-range model, controller or integrator parameter.
    #[error("rejected parameter: {0}")]
    InvalidParameter(String),

    #[error("rejected configuration: {0}")]
    InvalidConfig(String),

    /// A computation produced NaN or infinity.
    #[error("numeric domain error{}: {what}", fmt_time(*.time))]
    NumericDomain { time: Option<f64>, what: String },

    #[error("step size underflow at t = {time}: step {step:e} fell below the minimum")]
    StepUnderflow { time: f64, step: f64 },

    #[error("simulation failed: {0}")]
    Simulation(Box<SimulationFailure>),

    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn fmt_time(time: Option<f64>) -> String {
    match time {
        Some(t) => format!(" at t = {t}"),
        None => String::new(),
    }
}

impl From<SimulationFailure> for Error {
    fn from(f: SimulationFailure) -> Self {
        Error::Simulation(Box::new(f))
    }
}

pub(crate) fn non_finite(what: impl Into<String>) -> Error {
    Error::NumericDomain {
        time: None,
        what: what.into(),
    }
}
