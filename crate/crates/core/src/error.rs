use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration for `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("singular or ill-conditioned system: {0}")]
    Singular(String),

    #[error("fixed-point iteration stagnated at iteration {iteration} (defect {defect:.3e})")]
    Stagnation {
        iteration: usize,
        defect: f64,
        history: Vec<f64>,
    },

    #[error("front temperature quenched below {floor:e} at iteration {iteration}")]
    Quench { iteration: usize, floor: f64 },

    #[error("inner solver failed at fixed-point iteration {iteration}: {source}")]
    Inner {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
