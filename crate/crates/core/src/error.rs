use thiserror::Error;

/// Errors raised by the library.
///
/// Variants fall into two groups: input problems (parse, validation, design,
/// parameter, domain, I/O) and numerical failures (convergence, separation,
/// singularity, degeneracy, non-finite state). [`Error::is_numeric`] tells
/// them apart; the CLI maps the groups to distinct exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at row {row}: {msg}")]
    Parse { row: usize, msg: String },

    #[error("validation error at row {row}: {msg}")]
    Validation { row: usize, msg: String },

    #[error("design error: {0}")]
    Design(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no convergence after {iterations} iterations")]
    Convergence { iterations: usize, last: Vec<f64> },

    #[error("complete or quasi-complete separation: {0}")]
    Separation(String),

    #[error("numeric error{}: {msg}", .index.map(|t| format!(" at t={t}")).unwrap_or_default())]
    Numeric { index: Option<usize>, msg: String },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Convergence { .. }
                | Error::Separation(_)
                | Error::Numeric { .. }
                | Error::Singular(_)
                | Error::Degenerate(_)
        )
    }

    pub(crate) fn numeric(index: Option<usize>, msg: impl Into<String>) -> Self {
        Error::Numeric { index, msg: msg.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
