//! JSON bodies exchanged by the HTTP service and its client.

use serde::{Deserialize, Serialize};

use crate::graph::Iri;
use crate::orchestrator::{FieldError, FormSchema, SessionError, SessionState};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    pub status: u16,
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub details: Option<Vec<FieldError>>,
}

/// The published error codes.
pub mod codes {
    pub const BAD_REQUEST: &str = "BAD_REQUEST";
    pub const NOT_FOUND: &str = "NOT_FOUND";
    pub const UNKNOWN_CLASS: &str = "UNKNOWN_CLASS";
    pub const NOT_A_PRODUCT: &str = "NOT_A_PRODUCT";
    pub const SESSION_NOT_FOUND: &str = "SESSION_NOT_FOUND";
    pub const SESSION_EXISTS: &str = "SESSION_EXISTS";
    pub const CONFLICT: &str = "CONFLICT";
    pub const STALE_FORM: &str = "STALE_FORM";
    pub const SESSION_COMPLETE: &str = "SESSION_COMPLETE";
    pub const VALIDATION_FAILED: &str = "VALIDATION_FAILED";
    pub const CYCLIC_DEFINITION: &str = "CYCLIC_DEFINITION";
    pub const MALFORMED_AXIOM: &str = "MALFORMED_AXIOM";
    pub const ONTOLOGY_MISMATCH: &str = "ONTOLOGY_MISMATCH";
    pub const INTERNAL: &str = "INTERNAL";
}

impl ApiError {
    pub fn new(status: u16, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code: code.to_string(),
            message: message.into(),
            details: None,
        }
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} ({}): {}", self.code, self.status, self.message)?;
        for d in self.details.iter().flatten() {
            write!(f, "\n  {}: {}", d.field, d.message)?;
        }
        Ok(())
    }
}

impl From<SessionError> for ApiError {
    fn from(err: SessionError) -> Self {
        let (status, code) = match &err {
            SessionError::UnknownClass(_) => (404, codes::UNKNOWN_CLASS),
            SessionError::NotAProduct(_) => (422, codes::NOT_A_PRODUCT),
            SessionError::SessionComplete => (409, codes::SESSION_COMPLETE),
            SessionError::StaleForm { .. } => (409, codes::STALE_FORM),
            SessionError::ValidationFailed(_) => (422, codes::VALIDATION_FAILED),
            SessionError::CyclicDefinition(_) => (422, codes::CYCLIC_DEFINITION),
            SessionError::Axiom(_) => (422, codes::MALFORMED_AXIOM),
            SessionError::OntologyMismatch { .. } => (409, codes::ONTOLOGY_MISMATCH),
            SessionError::InvalidSessionId(_) | SessionError::ScriptMismatch { .. } => {
                (400, codes::BAD_REQUEST)
            }
            SessionError::CorruptSession(_) => (500, codes::INTERNAL),
        };
        let mut api = ApiError::new(status, code, err.to_string());
        if let SessionError::ValidationFailed(details) = err {
            api.details = Some(details);
        }
        api
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub product: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
    pub revision: u64,
    pub form: FormSchema,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgressCounts {
    pub answered: usize,
    pub pending: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionStatus {
    pub session_id: String,
    pub product: Iri,
    pub state: SessionState,
    pub revision: u64,
    pub progress: ProgressCounts,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubmitAnswer {
    pub revision: u64,
    pub form_id: String,
    #[serde(default)]
    pub values: serde_json::Map<String, serde_json::Value>,
}

/// The next form, or the completion notice once the frontier is empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NextStep {
    Form(FormSchema),
    Done { state: SessionState },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Submitted {
    pub revision: u64,
    pub state: SessionState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub form: Option<FormSchema>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Ttl,
    Html,
}

impl ExportFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            ExportFormat::Ttl => "ttl",
            ExportFormat::Html => "html",
        }
    }
}
