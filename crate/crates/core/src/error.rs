use std::fmt;

/// Errors produced by state construction, detection and scenario handling.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the physically meaningful range.
    #[error("domain error: {0}")]
    Domain(String),

    /// A carrier-dependent quantity was requested on a (near-)dark mode.
    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    /// A scenario field failed validation.
    #[error("invalid `{field}`: {message}")]
    Validation { field: String, message: String },

    /// A scenario document could not be parsed.
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl fmt::Display) -> Self {
        Error::Domain(msg.to_string())
    }

    pub(crate) fn degenerate(msg: impl fmt::Display) -> Self {
        Error::Degenerate(msg.to_string())
    }

    pub(crate) fn validation(field: impl Into<String>, msg: impl fmt::Display) -> Self {
        Error::Validation { field: field.into(), message: msg.to_string() }
    }

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Validation { .. } | Error::Parse { .. } => 2,
            Error::Degenerate(_) => 3,
            Error::Io(_) => 1,
        }
    }

    /// Prefixes the message with context while keeping the variant.
    pub fn context(self, ctx: &str) -> Self {
        match self {
            Error::Domain(m) => Error::Domain(format!("{ctx}: {m}")),
            Error::Degenerate(m) => Error::Degenerate(format!("{ctx}: {m}")),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
