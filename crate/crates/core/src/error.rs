use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A size computation overflowed the integer width used to hold it.
    #[error("range error: {what} overflows {width}")]
    Range { what: String, width: &'static str },

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    /// A requested table or enumeration exceeds a fixed budget.
    #[error("size limit exceeded: {what} needs {needed}, limit is {limit}; {hint}")]
    SizeLimit {
        what: String,
        needed: f64,
        limit: f64,
        hint: &'static str,
    },

    #[error("index error: {what} needs index {needed} but the series stops at {available}")]
    Index {
        what: &'static str,
        needed: usize,
        available: usize,
    },

    #[error("dimension gate: {quantity} requires d > {required}, got d = {d} (pass the gate override to explore)")]
    DimensionGate {
        quantity: String,
        d: usize,
        required: usize,
    },

    #[error("invalid bracket [{lo}, {hi}]: {reason}")]
    Bracket { lo: f64, hi: f64, reason: String },

    #[error("survival indicators are not monotone in p for trial {trial}")]
    NonMonotone { trial: u64 },

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: String, reason: String },

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid_argument(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name: name.into(),
            reason: reason.into(),
        }
    }
}
