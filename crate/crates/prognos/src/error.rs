use std::path::{Path, PathBuf};

/// Failure of a CLI run, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Pipeline(prognos_core::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    /// 2 for anything wrong with the inputs, 3 when the computation fails.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Pipeline(_) => 3,
            _ => 2,
        }
    }
}

impl From<prognos_core::Error> for CliError {
    fn from(e: prognos_core::Error) -> Self {
        match e {
            prognos_core::Error::InvalidConfig(m) | prognos_core::Error::BadSpec(m) => CliError::Config(m),
            other => CliError::Pipeline(other),
        }
    }
}
