//! Error taxonomy mapped onto process exit codes:
//! 1 validation, 2 missing prerequisite, 3 external-service failure.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("missing artifact: {artifact} (run `scievo {run_first}` first)")]
    MissingArtifact { artifact: String, run_first: String },
    #[error("external service failure: {0}")]
    External(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::MissingArtifact { .. } => 2,
            CliError::External(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Validation(format!("io error: {e}"))
    }
}

impl From<scievo_core::corpus::CorpusError> for CliError {
    fn from(e: scievo_core::corpus::CorpusError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<scievo_core::keywords::KeywordError> for CliError {
    fn from(e: scievo_core::keywords::KeywordError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<scievo_core::snapshot::SnapshotError> for CliError {
    fn from(e: scievo_core::snapshot::SnapshotError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<scievo_core::embedding::EmbeddingError> for CliError {
    fn from(e: scievo_core::embedding::EmbeddingError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<scievo_core::analytics::AnalyticsError> for CliError {
    fn from(e: scievo_core::analytics::AnalyticsError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<scievo_harvest::HarvestError> for CliError {
    fn from(e: scievo_harvest::HarvestError) -> Self {
        use scievo_harvest::HarvestError as H;
        match e {
            H::EmptyBatch | H::BatchTooLarge { .. } | H::CursorMismatch { .. } => {
                CliError::Validation(e.to_string())
            }
            other => CliError::External(other.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Validation(format!("json error: {e}"))
    }
}
