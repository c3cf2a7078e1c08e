use std::fmt;

/// Command failure, classified by exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    /// Invalid configuration or input (exit 2).
    Config(String),
    /// The run left the validity regime of the model (exit 3).
    Physics(String),
    /// Filesystem or cache failure (exit 4).
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Physics(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    pub fn class(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Physics(_) => "physics",
            CliError::Io(_) => "io",
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Physics(m) | CliError::Io(m) => m,
        }
    }
}

/// Always a single line: `error[class]: message`.
impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg: String = self.message().split_whitespace().collect::<Vec<_>>().join(" ");
        write!(f, "error[{}]: {}", self.class(), msg)
    }
}

impl std::error::Error for CliError {}

impl From<lasercond::Error> for CliError {
    fn from(e: lasercond::Error) -> Self {
        use lasercond::Error as E;
        let msg = e.to_string();
        match e {
            E::Invalid(_) => CliError::Config(msg),
            E::PerturbativeBound { .. } | E::StateSpace { .. } => CliError::Physics(msg),
            E::FingerprintMismatch { .. } | E::Corrupt(_) | E::Io(_) => CliError::Io(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
