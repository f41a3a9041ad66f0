use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates its contract. `field` is a dotted path.
    #[error("invalid configuration at `{field}`: {message}")]
    Config { field: String, message: String },

    /// An operation was applied out of order (e.g. stepping past the horizon).
    #[error("sequencing error: {0}")]
    Sequencing(String),

    #[error("average benefit is undefined before the first tick")]
    UndefinedAverage,

    /// Adaptive quadrature ran out of subdivisions; `estimate` is the best value found.
    #[error("quadrature did not converge: {message} (best estimate {estimate}, error bound {error_bound})")]
    Numerical {
        message: String,
        estimate: f64,
        error_bound: f64,
    },

    /// The conditional inter-arrival law is degenerate because the opponent's
    /// next move has certainly already happened.
    #[error("opponent move certainly passed: F0({age}) = {cdf}")]
    CertainMovePassed { age: f64, cdf: f64 },

    /// Moving costs at least as much as the opponent's mean inter-move time,
    /// so never moving is optimal.
    #[error("dropping out is optimal: move cost {cost} >= opponent mean move time {mean}")]
    DropoutOptimal { cost: f64, mean: f64 },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    /// A failure inside one run of a multi-run experiment.
    #[error("run {run} (seed {seed}) failed: {source}")]
    Run {
        run: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Config { .. }
            | Error::Parse { .. }
            | Error::Json(_)
            | Error::DropoutOptimal { .. } => true,
            Error::Run { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
