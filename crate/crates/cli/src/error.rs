use std::io;
use std::path::{Path, PathBuf};

use perifix_core::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}{message}", file.as_ref().map(|p| format!("{}: ", p.display())).unwrap_or_default())]
    Model {
        file: Option<PathBuf>,
        message: String,
    },
    #[error("check failed: {0}")]
    CheckFailed(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{}: {source}{}", path.display(), written_note(written))]
    Io {
        path: PathBuf,
        source: io::Error,
        written: Vec<PathBuf>,
    },
}

fn written_note(written: &[PathBuf]) -> String {
    if written.is_empty() {
        return String::new();
    }
    let list: Vec<String> = written.iter().map(|p| p.display().to_string()).collect();
    format!(" (files written before the failure: {})", list.join(", "))
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Model { .. } => 2,
            CliError::CheckFailed(_) => 3,
            CliError::Numerical(_) | CliError::Io { .. } => 4,
        }
    }

    pub fn model(message: String) -> Self {
        CliError::Model {
            file: None,
            message,
        }
    }

    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
            written: Vec::new(),
        }
    }

    /// Attaches the model file to validation errors.
    pub fn in_file(self, path: &Path) -> Self {
        match self {
            CliError::Model { message, .. } => CliError::Model {
                file: Some(path.to_path_buf()),
                message,
            },
            other => other,
        }
    }

    /// Every failure while building a model is a validation failure.
    pub fn into_model(self) -> Self {
        match self {
            CliError::Usage(message) | CliError::Numerical(message) => CliError::model(message),
            other => other,
        }
    }

    pub fn with_written(self, files: &[PathBuf]) -> Self {
        match self {
            CliError::Io { path, source, .. } => CliError::Io {
                path,
                source,
                written: files.to_vec(),
            },
            other => other,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else if matches!(e, Error::Precondition(_) | Error::Dimension { .. }) {
            CliError::Usage(e.to_string())
        } else {
            CliError::model(e.to_string())
        }
    }
}
