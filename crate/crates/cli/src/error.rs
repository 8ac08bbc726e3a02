use fracdiff_core::ErrorKind;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed configuration text, with line and column.
    #[error("config parse error: {0}")]
    Parse(String),

    /// All schema violations of an otherwise well-formed configuration.
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error(transparent)]
    Core(#[from] fracdiff_core::Error),

    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 = validation, 3 = convergence, 4 = numeric, 5 = output I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Config(_) => 2,
            CliError::Core(e) => match e.kind() {
                ErrorKind::Validation => 2,
                ErrorKind::Convergence => 3,
                ErrorKind::Numeric => 4,
            },
            CliError::Io { .. } => 5,
        }
    }
}
