use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid index: {0}")]
    InvalidIndex(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        let line = err.position().map(|p| p.line()).unwrap_or(0);
        match err.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::Parse {
                line,
                message: format!("{other:?}"),
            },
        }
    }
}

pub(crate) fn require_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "{name} must be positive and finite, got {value}"
        )))
    }
}
