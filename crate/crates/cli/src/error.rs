use std::fmt;
use std::path::PathBuf;

/// Failure of a CLI run, mapped to an exit code and a stable identifier.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(medgtest::Error),
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    Csv(String),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Core(e) => e.code(),
            CliError::Io { .. } => "io-error",
            CliError::Csv(_) => "csv-error",
        }
    }

    /// 2 for usage, 3 for bad input or domain errors, 4 for numerical failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) if e.is_numeric() => 4,
            _ => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Csv(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
        }
    }
}

impl From<medgtest::Error> for CliError {
    fn from(e: medgtest::Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn io_error(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}
