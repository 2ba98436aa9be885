use std::path::PathBuf;

/// Failures surfaced by the file formats, the repository and the CLI.
#[derive(Debug, thiserror::Error)]
pub enum QvError {
    #[error(transparent)]
    Core(#[from] qverify_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed file at {location}: {detail}")]
    Malformed { location: String, detail: String },
    #[error("digest mismatch: file says {stated}, content hashes to {computed}")]
    DigestMismatch { stated: String, computed: String },
    #[error("unsupported format version {found} (supported: {supported})")]
    UnsupportedVersion { found: u64, supported: u64 },
    #[error("unknown dataset id {0}")]
    UnknownDataset(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Usage(String),
}

pub type QvResult<T> = Result<T, QvError>;

impl QvError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        QvError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn malformed(location: impl Into<String>, detail: impl Into<String>) -> Self {
        QvError::Malformed {
            location: location.into(),
            detail: detail.into(),
        }
    }

    /// Short machine-readable category.
    pub fn category(&self) -> &'static str {
        match self {
            QvError::Core(_) => "computation",
            QvError::Io { .. } => "io",
            QvError::Malformed { .. } => "malformed",
            QvError::DigestMismatch { .. } => "digest",
            QvError::UnsupportedVersion { .. } => "version",
            QvError::UnknownDataset(_) => "unknown-id",
            QvError::Config(_) => "config",
            QvError::Usage(_) => "usage",
        }
    }

    /// Process exit code; see the table in the README.
    pub fn exit_code(&self) -> i32 {
        match self {
            QvError::Usage(_) | QvError::Config(_) => 2,
            QvError::Malformed { .. }
            | QvError::DigestMismatch { .. }
            | QvError::UnsupportedVersion { .. }
            | QvError::UnknownDataset(_) => 3,
            QvError::Core(_) => 4,
            QvError::Io { .. } => 5,
        }
    }
}
