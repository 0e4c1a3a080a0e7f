use thiserror::Error;

#[derive(Debug, Error)]
pub enum HsbmError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("budget exceeded for {what}: needs {needed}, limit is {limit}")]
    BudgetExceeded {
        what: &'static str,
        needed: u128,
        limit: u128,
    },

    #[error("eigen-solver did not converge (residual {residual:.3e})")]
    Convergence { residual: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl HsbmError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        HsbmError::InvalidArgument(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        HsbmError::Parse {
            line,
            message: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, HsbmError>;
