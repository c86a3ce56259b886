use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Non-finite or out-of-domain argument to a pointwise function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter set that violates the model's standing assumptions.
    #[error("invalid parameters: {0}")]
    Parameter(String),

    /// Misuse of an API, e.g. a 2D grid handed to a 1D routine.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("simulation blew up at t = {t:.6} in cell {cell} ({field})")]
    BlowUp { t: f64, cell: usize, field: &'static str },

    #[error("Newton failed to converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("branch switching failed: {0}")]
    Switching(String),

    /// `line` is `None` for problems not tied to a line of the file, such as
    /// command-line overrides.
    #[error("config error{}: {msg}", at_line(line))]
    Config { line: Option<usize>, msg: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serialize(String),
}

impl Error {
    /// Process exit code for the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_) | Error::Usage(_) | Error::Config { .. } => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

fn at_line(line: &Option<usize>) -> String {
    line.map(|l| format!(" at line {l}")).unwrap_or_default()
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
