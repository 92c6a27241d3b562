use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    /// Rejected configuration; exit status 2.
    #[error("configuration error: {0}")]
    Config(String),
    /// Numerical or runtime failure; exit status 1.
    #[error(transparent)]
    Numerical(#[from] dnls::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl LabError {
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

impl From<dnls::error::ConfigError> for LabError {
    fn from(e: dnls::error::ConfigError) -> Self {
        LabError::Config(e.to_string())
    }
}

pub type LabResult<T> = std::result::Result<T, LabError>;
