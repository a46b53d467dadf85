use serde::Serialize;

/// Failure printed as one JSON object on stderr.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliError {
    #[serde(rename = "error")]
    pub kind: String,
    pub message: String,
    #[serde(skip)]
    pub exit_code: i32,
}

impl CliError {
    pub fn new(kind: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            kind: kind.into(),
            message: message.into(),
            exit_code: 1,
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self {
            exit_code: 2,
            ..Self::new("Config", message)
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable error")
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

impl From<gardentrack_core::Error> for CliError {
    fn from(e: gardentrack_core::Error) -> Self {
        let code = match &e {
            gardentrack_core::Error::Config(_) | gardentrack_core::Error::Geodesy(_) => 2,
            _ => 1,
        };
        Self {
            exit_code: code,
            ..Self::new(e.kind(), e.to_string())
        }
    }
}

impl From<gardentrack_service::ServiceError> for CliError {
    fn from(e: gardentrack_service::ServiceError) -> Self {
        let code = if e.kind() == "Config" { 2 } else { 1 };
        Self {
            exit_code: code,
            ..Self::new(e.kind(), e.to_string())
        }
    }
}
