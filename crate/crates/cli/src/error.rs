use std::fmt;
use std::path::Path;

/// A failure that ends the process with a specific exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or input content (exit 1).
    Validation(String),
    /// Unreadable or unwritable files (exit 2).
    Io(String),
    /// Training or fitting produced non-finite numbers (exit 3).
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }

    pub fn io(path: &Path, err: impl fmt::Display) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }

    pub fn missing(flag: &str) -> Self {
        CliError::Validation(format!("missing required flag --{flag}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Io(m) | CliError::Numeric(m) => f.write_str(m),
        }
    }
}

impl From<plrank::Error> for CliError {
    fn from(err: plrank::Error) -> Self {
        match err {
            plrank::Error::Io(e) => CliError::Io(e.to_string()),
            e @ plrank::Error::NonFiniteLoss { .. } => CliError::Numeric(e.to_string()),
            e => CliError::Validation(e.to_string()),
        }
    }
}

/// Attaches a file name to errors raised while reading or parsing it.
pub fn in_file(path: &Path) -> impl FnOnce(plrank::Error) -> CliError + '_ {
    move |err| match CliError::from(err) {
        CliError::Validation(m) => CliError::Validation(format!("{}: {m}", path.display())),
        CliError::Io(m) => CliError::Io(format!("{}: {m}", path.display())),
        other => other,
    }
}
