use std::path::PathBuf;

use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read `{path}`: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: line {line}: {message}")]
    Csv { path: PathBuf, line: u64, message: String },
    #[error("{path}: line {line}, column `{column}`: missing value")]
    IncompleteData { path: PathBuf, line: u64, column: String },
    #[error("{path}: line {line}, column `{column}`: {message}")]
    Parse { path: PathBuf, line: u64, column: String, message: String },
    #[error("schema: {0}")]
    Schema(String),
    #[error("{path}: invalid JSON: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] bnscore_core::Error),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "io",
            CliError::Csv { .. } => "csv",
            CliError::IncompleteData { .. } => "incomplete-data",
            CliError::Parse { .. } => "parse",
            CliError::Schema(_) => "schema",
            CliError::Json { .. } => "json",
            CliError::Config(_) => "config",
            CliError::Model(e) => e.kind(),
        }
    }

    /// `{"error": {"kind": ..., "message": ...}}`
    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Body<'a> {
            kind: &'a str,
            message: String,
        }
        serde_json::json!({ "error": Body { kind: self.kind(), message: self.to_string() } })
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
