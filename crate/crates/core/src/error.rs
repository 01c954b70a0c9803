use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its physical domain.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Configuration file could not be read or understood.
    #[error("config error: {0}")]
    Config(String),

    /// Fock truncation would discard more probability than allowed.
    #[error("truncation leakage {leakage:.3e} exceeds bound {bound:.1e} (cutoff {cutoff})")]
    Truncation {
        leakage: f64,
        bound: f64,
        cutoff: u8,
    },

    /// The state does not contain a mode an operation needs.
    #[error("missing mode: {0}")]
    MissingMode(String),

    #[error("interferometer delay {delay:.6e} s does not match bin separation {separation:.6e} s")]
    DelayMismatch { delay: f64, separation: f64 },

    /// A statistic is undefined for the given counts.
    #[error("undefined statistic: {0}")]
    Undefined(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter { .. } | Error::Config(_) | Error::DelayMismatch { .. } => 2,
            Error::Truncation { .. } | Error::MissingMode(_) => 3,
            Error::Undefined(_) | Error::Fit(_) | Error::Parse { .. } => 4,
            Error::Io(_) => 1,
        }
    }
}
