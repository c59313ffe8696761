use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Errors surfaced by the command line. Each maps to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// Malformed input; `line` is 1-based (NDJSON/TSV line or binary record).
    #[error("{}: {message}", location(.path, *.line))]
    Schema {
        path: PathBuf,
        line: Option<usize>,
        message: String,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Core(#[from] entconf::Error),
    #[error("oracle check failed: {0}")]
    OracleMismatch(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn schema(path: &Path, line: Option<usize>, message: impl Into<String>) -> Self {
        CliError::Schema { path: path.to_path_buf(), line, message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::OracleMismatch(_) => 1,
            CliError::Schema { .. } | CliError::Config(_) | CliError::Core(_) => 2,
        }
    }
}

fn location(path: &Path, line: Option<usize>) -> String {
    let mut s = path.display().to_string();
    if let Some(line) = line {
        let _ = write!(s, ":{line}");
    }
    s
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
