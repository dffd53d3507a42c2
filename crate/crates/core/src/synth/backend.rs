use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::http::HttpBackend;
use super::mock::MockBackend;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("backend unavailable after {attempts} attempt(s): {last_error}")]
    Unavailable { attempts: u32, last_error: String },
    #[error("environment variable {0} holding the API key is not set")]
    AuthMissing(String),
    #[error("unexpected backend response: {0}")]
    BadResponse(String),
    #[error("invalid backend spec: {0}")]
    InvalidSpec(String),
    #[error("response cache error: {0}")]
    Cache(String),
}

/// One text-completion call.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompletionRequest {
    pub prompt: String,
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
    /// Seeds deterministic backends.
    pub seed: u64,
    /// Distinguishes repeated sends of the same prompt (cache key component).
    pub nonce: u64,
}

pub trait TextBackend: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<String, BackendError>;

    fn name(&self) -> &str;

    fn max_concurrent(&self) -> usize {
        1
    }

    /// Requests that actually went over the network (cache hits excluded).
    fn network_calls(&self) -> usize {
        0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Mock,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendSpec {
    pub kind: BackendKind,
    pub endpoint_url: String,
    pub model_name: String,
    pub auth_env_var: String,
    pub max_concurrent: usize,
    pub retry_limit: u32,
    /// First backoff delay; doubles after each failed attempt.
    pub retry_base_ms: u64,
    pub request_timeout_secs: u64,
    pub use_cache: bool,
}

impl Default for BackendSpec {
    fn default() -> Self {
        BackendSpec {
            kind: BackendKind::Mock,
            endpoint_url: "https://api.openai.com/v1/chat/completions".to_string(),
            model_name: "gpt-4o-mini".to_string(),
            auth_env_var: "OPENAI_API_KEY".to_string(),
            max_concurrent: 4,
            retry_limit: 3,
            retry_base_ms: 500,
            request_timeout_secs: 60,
            use_cache: true,
        }
    }
}

impl BackendSpec {
    pub fn mock() -> Self {
        BackendSpec::default()
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if self.max_concurrent == 0 {
            return Err(BackendError::InvalidSpec(
                "max_concurrent must be >= 1".into(),
            ));
        }
        if self.kind == BackendKind::Http {
            if self.endpoint_url.trim().is_empty() {
                return Err(BackendError::InvalidSpec("endpoint_url is empty".into()));
            }
            if self.model_name.trim().is_empty() {
                return Err(BackendError::InvalidSpec("model_name is empty".into()));
            }
        }
        Ok(())
    }
}

/// Builds the backend a spec describes. `cache_dir` is only used by HTTP backends.
pub fn backend_from_spec(
    spec: &BackendSpec,
    cache_dir: Option<&std::path::Path>,
) -> Result<Box<dyn TextBackend>, BackendError> {
    spec.validate()?;
    Ok(match spec.kind {
        BackendKind::Mock => Box::new(MockBackend::new()),
        BackendKind::Http => Box::new(HttpBackend::new(spec.clone(), cache_dir)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn http_spec_requires_url_and_model() {
        let mut s = BackendSpec {
            kind: BackendKind::Http,
            ..BackendSpec::default()
        };
        assert!(s.validate().is_ok());
        s.endpoint_url.clear();
        assert!(matches!(s.validate(), Err(BackendError::InvalidSpec(_))));
        let s = BackendSpec {
            kind: BackendKind::Http,
            model_name: " ".into(),
            ..BackendSpec::default()
        };
        assert!(s.validate().is_err());
        let s = BackendSpec {
            max_concurrent: 0,
            ..BackendSpec::default()
        };
        assert!(s.validate().is_err());
    }

    #[test]
    fn spec_defaults_fill_missing_json_fields() {
        let s: BackendSpec = serde_json::from_str(r#"{"kind":"http","model_name":"m"}"#).unwrap();
        assert_eq!(s.kind, BackendKind::Http);
        assert_eq!(s.model_name, "m");
        assert_eq!(s.retry_limit, 3);
    }
}
