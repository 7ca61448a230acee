use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes shared across the engine.
///
/// Configuration-file problems carry their own location info in
/// [`ConfigError`]; everything else names the offending quantity directly.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    #[error("realization index {index} out of range (n_realizations = {n})")]
    RealizationOutOfRange { index: u64, n: u64 },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("fit failed: {0}")]
    Fit(String),
}

impl Error {
    pub fn invalid_parameter(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

/// Error raised while parsing or validating a bench configuration document.
///
/// `line` is 1-based; `path` is the `[section].key` the problem belongs to,
/// or just `[section]` for section-level trouble.
#[derive(Debug, Error)]
#[error("config error at {location}: {message}", location = self.location())]
pub struct ConfigError {
    pub line: Option<usize>,
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(line: Option<usize>, path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            line,
            path: path.into(),
            message: message.into(),
        }
    }

    fn location(&self) -> String {
        match self.line {
            Some(n) => format!("line {}: {}", n, self.path),
            None => self.path.clone(),
        }
    }
}
