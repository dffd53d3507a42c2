//! Chat-completions client with bounded retries and an on-disk response cache.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::backend::{BackendError, BackendSpec, CompletionRequest, TextBackend};

pub const CACHE_DIR_ENV: &str = "DPSYNTH_CACHE_DIR";
pub const DEFAULT_CACHE_DIR: &str = ".dpsynth-cache";

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

/// Wire body of every POST. Field order here is the serialized order.
#[derive(Serialize)]
pub(crate) struct ChatRequest<'a> {
    model: &'a str,
    messages: [ChatMessage<'a>; 1],
    temperature: f64,
    top_p: f64,
    max_tokens: u32,
    n: u32,
}

impl<'a> ChatRequest<'a> {
    pub(crate) fn new(model: &'a str, req: &'a CompletionRequest) -> Self {
        ChatRequest {
            model,
            messages: [ChatMessage {
                role: "user",
                content: &req.prompt,
            }],
            temperature: req.temperature,
            top_p: req.top_p,
            max_tokens: req.max_tokens,
            n: 1,
        }
    }
}

/// Content-addressed response store: one file per request key.
#[derive(Debug)]
pub struct ResponseCache {
    dir: PathBuf,
    write_lock: Mutex<()>,
}

impl ResponseCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ResponseCache {
            dir: dir.into(),
            write_lock: Mutex::new(()),
        }
    }

    /// `explicit`, else `$DPSYNTH_CACHE_DIR`, else `.dpsynth-cache`.
    pub fn resolve_dir(explicit: Option<&Path>) -> PathBuf {
        explicit
            .map(Path::to_path_buf)
            .or_else(|| std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE_DIR))
    }

    pub fn key(model: &str, req: &CompletionRequest) -> String {
        #[derive(Serialize)]
        struct Key<'a> {
            prompt: &'a str,
            model: &'a str,
            temperature: f64,
            top_p: f64,
            max_tokens: u32,
            nonce: u64,
        }
        let canonical = serde_json::to_vec(&Key {
            prompt: &req.prompt,
            model,
            temperature: req.temperature,
            top_p: req.top_p,
            max_tokens: req.max_tokens,
            nonce: req.nonce,
        })
        .expect("key serializes");
        hex::encode(Sha256::digest(&canonical))
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.txt"))
    }

    pub fn get(&self, key: &str) -> Option<String> {
        fs::read_to_string(self.path(key)).ok()
    }

    pub fn put(&self, key: &str, body: &str) -> Result<(), BackendError> {
        let _guard = self.write_lock.lock().unwrap_or_else(|e| e.into_inner());
        let err = |e: std::io::Error| BackendError::Cache(e.to_string());
        fs::create_dir_all(&self.dir).map_err(err)?;
        let tmp = self.dir.join(format!("{key}.tmp"));
        fs::write(&tmp, body).map_err(err)?;
        fs::rename(&tmp, self.path(key)).map_err(err)
    }
}

pub struct HttpBackend {
    spec: BackendSpec,
    agent: ureq::Agent,
    cache: Option<ResponseCache>,
    calls: AtomicUsize,
}

impl HttpBackend {
    pub fn new(spec: BackendSpec, cache_dir: Option<&Path>) -> Result<Self, BackendError> {
        spec.validate()?;
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs(spec.request_timeout_secs.max(1)))
            .build();
        let cache = spec
            .use_cache
            .then(|| ResponseCache::new(ResponseCache::resolve_dir(cache_dir)));
        Ok(HttpBackend {
            spec,
            agent,
            cache,
            calls: AtomicUsize::new(0),
        })
    }

    fn post(&self, api_key: &str, req: &CompletionRequest) -> Result<String, BackendError> {
        let body = ChatRequest::new(&self.spec.model_name, req);
        let mut last_error = String::new();
        let attempts = self.spec.retry_limit + 1;
        for attempt in 0..attempts {
            if attempt > 0 {
                let delay = self
                    .spec
                    .retry_base_ms
                    .saturating_mul(1 << (attempt - 1).min(16));
                std::thread::sleep(Duration::from_millis(delay));
            }
            self.calls.fetch_add(1, Ordering::SeqCst);
            let result = self
                .agent
                .post(&self.spec.endpoint_url)
                .set("Authorization", &format!("Bearer {api_key}"))
                .set("Content-Type", "application/json")
                .send_json(&body);
            match result {
                Ok(resp) => {
                    let value: serde_json::Value = resp
                        .into_json()
                        .map_err(|e| BackendError::BadResponse(e.to_string()))?;
                    return extract_content(&value);
                }
                Err(ureq::Error::Status(code, resp)) => {
                    last_error = format!("HTTP {code}: {}", resp.into_string().unwrap_or_default());
                    if !(code == 429 || code >= 500) {
                        return Err(BackendError::Unavailable {
                            attempts: attempt + 1,
                            last_error,
                        });
                    }
                }
                Err(e) => last_error = e.to_string(),
            }
        }
        Err(BackendError::Unavailable {
            attempts,
            last_error,
        })
    }
}

fn extract_content(value: &serde_json::Value) -> Result<String, BackendError> {
    value
        .pointer("/choices/0/message/content")
        .and_then(serde_json::Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| BackendError::BadResponse("missing choices[0].message.content".into()))
}

impl TextBackend for HttpBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<String, BackendError> {
        let key = ResponseCache::key(&self.spec.model_name, request);
        if let Some(hit) = self.cache.as_ref().and_then(|c| c.get(&key)) {
            return Ok(hit);
        }
        let api_key = std::env::var(&self.spec.auth_env_var)
            .map_err(|_| BackendError::AuthMissing(self.spec.auth_env_var.clone()))?;
        let content = self.post(&api_key, request)?;
        if let Some(cache) = &self.cache {
            cache.put(&key, &content)?;
        }
        Ok(content)
    }

    fn name(&self) -> &str {
        &self.spec.model_name
    }

    fn max_concurrent(&self) -> usize {
        self.spec.max_concurrent
    }

    fn network_calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}
