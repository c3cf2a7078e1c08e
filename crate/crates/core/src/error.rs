use thiserror::Error;

/// Errors raised by the simulator and its analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid or inconsistent input (maps to exit code 2 in the CLI).
    #[error("invalid input: {0}")]
    Invalid(String),

    /// The single-excitation bound of the weak-pulse expansion is violated.
    #[error("perturbative bound violated: {context} (value {p:.6})")]
    PerturbativeBound { p: f64, context: String },

    /// The configuration space is too large for exact propagation.
    #[error("state space too large: {count} configurations exceeds bound {bound}")]
    StateSpace { count: u128, bound: usize },

    /// A cached rate matrix was built for different physics.
    #[error("cache fingerprint mismatch: expected {expected:016x}, found {found:016x}")]
    FingerprintMismatch { expected: u64, found: u64 },

    /// A cache file failed its integrity check.
    #[error("corrupt cache file: {0}")]
    Corrupt(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// True for errors that signal leaving the validity regime of the model.
    pub fn is_physics(&self) -> bool {
        matches!(self, Error::PerturbativeBound { .. } | Error::StateSpace { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
