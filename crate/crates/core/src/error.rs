use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class; maps one-to-one onto CLI exit codes and FFI status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numeric,
    Io,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Config => 2,
            ErrorClass::Data => 3,
            ErrorClass::Numeric => 4,
            ErrorClass::Io => 5,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("index {index} out of range for {len} classes")]
    Index { index: usize, len: usize },

    #[error("invalid numeric input: {0}")]
    NumericInput(String),

    #[error("degenerate weight row {row}: norm {norm:e} is below 1e-12")]
    DegenerateWeight { row: usize, norm: f64 },

    #[error("degenerate embedding: pre-normalization norm {0:e} is below 1e-12")]
    DegenerateEmbedding(f64),

    #[error("degenerate anchors: the two anchor points coincide")]
    DegenerateAnchor,

    #[error("degenerate covariance: minor eigenvalue {0:e} is below 1e-12")]
    DegenerateCovariance(f64),

    #[error("empty batch")]
    EmptyBatch,

    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("capacity exceeded: requested {requested}, only {available} available ({what})")]
    Capacity {
        what: &'static str,
        requested: usize,
        available: usize,
    },

    #[error("operating point {metric} <= {target} is unattainable; closest achievable value is {closest}")]
    Unattainable {
        metric: &'static str,
        target: f64,
        closest: f64,
    },

    #[error("malformed {what} at byte offset {offset}: {message}")]
    Format {
        what: &'static str,
        offset: u64,
        message: String,
    },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) => ErrorClass::Config,
            Error::Index { .. }
            | Error::EmptyBatch
            | Error::Protocol(_)
            | Error::Capacity { .. }
            | Error::Unattainable { .. }
            | Error::Format { .. }
            | Error::Parse { .. } => ErrorClass::Data,
            Error::NumericInput(_)
            | Error::DegenerateWeight { .. }
            | Error::DegenerateEmbedding(_)
            | Error::DegenerateAnchor
            | Error::DegenerateCovariance(_) => ErrorClass::Numeric,
            Error::Io { .. } => ErrorClass::Io,
            Error::Context { source, .. } => source.class(),
        }
    }

    /// Wraps the error with a short description of what was being attempted.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.to_string(),
        }
    }

    /// The innermost error, skipping context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }
}
