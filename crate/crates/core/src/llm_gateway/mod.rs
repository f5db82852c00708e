//! Stateless access to chat-completion backends.
//!
//! Every call carries the full context (one system message, one user
//! message). Nothing is remembered between calls, so a response depends
//! only on the request that produced it.

mod http;
mod mock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digest::canonical_digest;

pub use http::{extract_completion, HttpBackend, WireMessage, WireRequest};
pub use mock::{
    first_option_label, MockBackend, MockFallback, MockScript, OPTIONS_PREFIX, OPTION_SEPARATOR,
};

pub const DEFAULT_MAX_TOKENS: u32 = 256;
pub const DEFAULT_MAX_IN_FLIGHT: usize = 4;
pub const DEFAULT_TIMEOUT_SECS: f64 = 120.0;

pub const ENV_API_BASE: &str = "SYNTHPOLL_API_BASE";
pub const ENV_API_KEY: &str = "SYNTHPOLL_API_KEY";
pub const ENV_MODEL: &str = "SYNTHPOLL_MODEL";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GatewayError {
    #[error("request timed out")]
    Timeout,
    #[error("backend unreachable: {0}")]
    Unreachable(String),
    #[error("backend returned HTTP status {0}")]
    HttpStatus(u16),
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("backend returned an empty completion")]
    EmptyCompletion,
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("invalid backend config: {0}")]
    InvalidConfig(String),
    #[error("mock script: {0}")]
    Script(String),
}

impl GatewayError {
    /// Short stable tag used when an error is recorded as data.
    pub fn tag(&self) -> String {
        match self {
            Self::Timeout => "timeout".into(),
            Self::Unreachable(_) => "unreachable".into(),
            Self::HttpStatus(code) => format!("http_status:{code}"),
            Self::MalformedResponse(_) => "malformed_response".into(),
            Self::EmptyCompletion => "empty_completion".into(),
            Self::InvalidRequest(_) => "invalid_request".into(),
            Self::InvalidConfig(_) => "invalid_config".into(),
            Self::Script(_) => "mock_script".into(),
        }
    }

    /// True when the backend could not be reached at all.
    pub fn is_unreachable(&self) -> bool {
        matches!(self, Self::Timeout | Self::Unreachable(_))
    }
}

/// One stateless chat-completion request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub system: String,
    pub user: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub model: String,
}

impl ChatRequest {
    /// Builds a request at temperature 0 with the default token budget.
    pub fn new(
        system: impl Into<String>,
        user: impl Into<String>,
        model: impl Into<String>,
    ) -> Result<Self, GatewayError> {
        let request = Self {
            system: system.into(),
            user: user.into(),
            temperature: 0.0,
            max_tokens: DEFAULT_MAX_TOKENS,
            model: model.into(),
        };
        request.validate()?;
        Ok(request)
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn with_max_tokens(mut self, max_tokens: u32) -> Self {
        self.max_tokens = max_tokens;
        self
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.system.trim().is_empty() {
            return Err(GatewayError::InvalidRequest("empty system message".into()));
        }
        if self.user.trim().is_empty() {
            return Err(GatewayError::InvalidRequest("empty user message".into()));
        }
        if self.max_tokens == 0 {
            return Err(GatewayError::InvalidRequest(
                "max_tokens must be positive".into(),
            ));
        }
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(GatewayError::InvalidRequest(format!(
                "temperature {} out of range",
                self.temperature
            )));
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON of every request field.
    pub fn prompt_hash(&self) -> String {
        canonical_digest(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    pub backend_id: String,
    pub prompt_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendKind {
    #[serde(rename = "http")]
    HttpOpenAiCompatible {
        base_url: String,
    },
    Mock {
        script: MockScript,
    },
}

/// Backend selection plus the request defaults applied to every call.
///
/// The bearer token is never part of this struct; the HTTP backend reads it
/// from `SYNTHPOLL_API_KEY`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    #[serde(flatten)]
    pub kind: BackendKind,
    #[serde(default)]
    pub model: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default = "default_max_in_flight")]
    pub max_in_flight: usize,
}

fn default_timeout() -> f64 {
    DEFAULT_TIMEOUT_SECS
}
fn default_max_tokens() -> u32 {
    DEFAULT_MAX_TOKENS
}
fn default_max_in_flight() -> usize {
    DEFAULT_MAX_IN_FLIGHT
}

impl BackendConfig {
    pub fn http(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        Self::with_kind(
            BackendKind::HttpOpenAiCompatible {
                base_url: base_url.into(),
            },
            model,
        )
    }

    fn with_kind(kind: BackendKind, model: impl Into<String>) -> Self {
        Self {
            kind,
            model: model.into(),
            timeout_secs: DEFAULT_TIMEOUT_SECS,
            temperature: 0.0,
            max_tokens: DEFAULT_MAX_TOKENS,
            max_in_flight: DEFAULT_MAX_IN_FLIGHT,
        }
    }

    /// A request for `system`/`user` carrying this config's model and defaults.
    pub fn build_request(&self, system: &str, user: &str) -> Result<ChatRequest, GatewayError> {
        let request = ChatRequest::new(system, user, self.model.clone())?
            .with_temperature(self.temperature)
            .with_max_tokens(self.max_tokens);
        request.validate()?;
        Ok(request)
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if let BackendKind::HttpOpenAiCompatible { base_url } = &self.kind {
            if base_url.trim().is_empty() {
                return Err(GatewayError::InvalidConfig(
                    "http backend requires base_url".into(),
                ));
            }
            if !(base_url.starts_with("http://") || base_url.starts_with("https://")) {
                return Err(GatewayError::InvalidConfig(format!(
                    "base_url must be an http(s) URL, got {base_url:?}"
                )));
            }
        }
        if !(self.timeout_secs.is_finite() && self.timeout_secs > 0.0) {
            return Err(GatewayError::InvalidConfig(
                "timeout must be positive".into(),
            ));
        }
        if self.max_tokens == 0 || self.max_in_flight == 0 {
            return Err(GatewayError::InvalidConfig(
                "max_tokens and max_in_flight must be positive".into(),
            ));
        }
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(GatewayError::InvalidConfig(
                "temperature must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Builds a mock backend config resolving replies by request digest.
pub fn mock_script(
    entries: impl IntoIterator<Item = (String, String)>,
    fallback: MockFallback,
) -> BackendConfig {
    BackendConfig::with_kind(
        BackendKind::Mock {
            script: MockScript {
                entries: entries.into_iter().collect(),
                fallback,
            },
        },
        "mock",
    )
}

pub trait LlmBackend: Send + Sync {
    fn config(&self) -> &BackendConfig;

    fn backend_id(&self) -> String;

    /// Sends exactly one request carrying the full context.
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError>;

    /// Builds a request using this backend's model and request defaults.
    fn request(&self, system: &str, user: &str) -> Result<ChatRequest, GatewayError> {
        self.config().build_request(system, user)
    }
}

/// Instantiates the backend described by `config`.
pub fn connect(config: &BackendConfig) -> Result<Box<dyn LlmBackend>, GatewayError> {
    config.validate()?;
    Ok(match &config.kind {
        BackendKind::HttpOpenAiCompatible { .. } => Box::new(HttpBackend::new(config.clone())?),
        BackendKind::Mock { .. } => Box::new(MockBackend::new(config.clone())?),
    })
}

/// One-shot completion against the backend described by `config`.
pub fn complete(
    config: &BackendConfig,
    request: &ChatRequest,
) -> Result<ChatResponse, GatewayError> {
    connect(config)?.complete(request)
}
