use serde::Serialize;
use std::fmt;

use gazenav_core::Error as CoreError;

/// A failure reported to the caller as `{"error": {"kind", "message"}}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(kind: &'static str, message: impl Into<String>) -> Self {
        Self { kind, message: message.into() }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new("usage", message)
    }

    /// Process exit status: 2 for bad invocations, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        if self.kind == "usage" {
            2
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let kind = match &e {
            CoreError::InvalidScenario(_) => "invalid_scenario",
            CoreError::InvalidScript(_) => "invalid_script",
            CoreError::InvalidParams(_) => "invalid_params",
            CoreError::Classify(_) => "classify",
            CoreError::ModelFile(_) => "model_file",
            CoreError::MissingModel(_) => "missing_model",
            CoreError::MalformedLog(_) => "malformed_log",
            CoreError::Io { .. } => "io",
            CoreError::Json { .. } => "json",
        };
        Self::new(kind, e.to_string())
    }
}

impl From<gazenav_core::classify::ClassifyError> for CliError {
    fn from(e: gazenav_core::classify::ClassifyError) -> Self {
        CoreError::from(e).into()
    }
}

impl From<gazenav_core::classify::ModelFileError> for CliError {
    fn from(e: gazenav_core::classify::ModelFileError) -> Self {
        CoreError::from(e).into()
    }
}

pub type CliResult<T> = Result<T, CliError>;
