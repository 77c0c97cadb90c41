use std::fmt;
use std::process::ExitCode;

/// Failure classes, each with its own exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config values or flag combinations.
    Usage(String),
    /// Missing, unreadable, malformed or mismatched files and unwritable
    /// outputs.
    Io(String),
    /// The pipeline or tuner failed on valid input.
    Compute(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Compute(_) => 4,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (kind, msg) = match self {
            CliError::Usage(m) => ("usage error", m),
            CliError::Io(m) => ("I/O error", m),
            CliError::Compute(m) => ("computation error", m),
        };
        write!(f, "{kind}: {msg}")
    }
}

impl From<fisrg::Error> for CliError {
    fn from(e: fisrg::Error) -> Self {
        use fisrg::Error::*;
        let msg = e.to_string();
        match e.root() {
            Io { .. }
            | MalformedHeader(_)
            | UnsupportedDatatype(_)
            | UnsupportedFormat(_)
            | Decode(_)
            | DimensionMismatch { .. } => CliError::Io(msg),
            _ => CliError::Compute(msg),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}
