use std::path::PathBuf;

use serde::Serialize;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: line {line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },

    #[error("{path}: {message}")]
    Schema { path: PathBuf, message: String },

    #[error("no provider in state {state} qualifies for the network")]
    EmptyNetwork { state: String },

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] ccm_core::Error),
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    line: Option<u64>,
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Parse { .. } => "parse",
            CliError::Schema { .. } => "schema",
            CliError::EmptyNetwork { .. } => "empty_network",
            CliError::Io { .. } => "io",
            CliError::Config(_) => "config",
            CliError::Core(e) => e.kind(),
        }
    }

    /// Process exit status: 2 for usage errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    /// One-line JSON object `{"error": {kind, message, line?}}`.
    pub fn to_json(&self) -> String {
        let line = match self {
            CliError::Parse { line, .. } => Some(*line),
            _ => None,
        };
        let body = ErrorBody { kind: self.kind(), message: self.to_string(), line };
        serde_json::json!({ "error": body }).to_string()
    }
}
