use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{
    BackendConfig, BackendKind, ChatRequest, ChatResponse, GatewayError, LlmBackend, ENV_API_KEY,
};

/// Client for `POST {base_url}/v1/chat/completions`.
pub struct HttpBackend {
    config: BackendConfig,
    endpoint: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct WireMessage {
    pub role: String,
    pub content: String,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct WireRequest {
    pub model: String,
    pub messages: Vec<WireMessage>,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl WireRequest {
    /// Exactly one system and one user message; no history.
    pub fn from_request(request: &ChatRequest) -> Self {
        Self {
            model: request.model.clone(),
            messages: vec![
                WireMessage {
                    role: "system".into(),
                    content: request.system.clone(),
                },
                WireMessage {
                    role: "user".into(),
                    content: request.user.clone(),
                },
            ],
            temperature: request.temperature,
            max_tokens: request.max_tokens,
        }
    }
}

impl HttpBackend {
    /// Reads the bearer token from `SYNTHPOLL_API_KEY` when set.
    pub fn new(config: BackendConfig) -> Result<Self, GatewayError> {
        let api_key = std::env::var(ENV_API_KEY).ok().filter(|k| !k.is_empty());
        Self::with_api_key(config, api_key)
    }

    pub fn with_api_key(
        config: BackendConfig,
        api_key: Option<String>,
    ) -> Result<Self, GatewayError> {
        config.validate()?;
        let base_url = match &config.kind {
            BackendKind::HttpOpenAiCompatible { base_url } => {
                base_url.trim_end_matches('/').to_string()
            }
            _ => {
                return Err(GatewayError::InvalidConfig(
                    "not an http backend config".into(),
                ))
            }
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(config.timeout_secs))
            .build()
            .map_err(|e| GatewayError::InvalidConfig(e.to_string()))?;
        Ok(Self {
            endpoint: format!("{base_url}/v1/chat/completions"),
            config,
            api_key,
            client,
        })
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn send_once(&self, body: &WireRequest) -> Result<String, GatewayError> {
        let mut builder = self.client.post(&self.endpoint).json(body);
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = builder.send().map_err(classify)?;
        let status = response.status();
        if !status.is_success() {
            return Err(GatewayError::HttpStatus(status.as_u16()));
        }
        let bytes = response.bytes().map_err(classify)?;
        extract_completion(&bytes)
    }
}

fn classify(err: reqwest::Error) -> GatewayError {
    if err.is_timeout() {
        GatewayError::Timeout
    } else if err.is_decode() || err.is_body() {
        GatewayError::MalformedResponse(err.to_string())
    } else {
        GatewayError::Unreachable(err.to_string())
    }
}

/// Pulls `choices[0].message.content` out of a response body.
pub fn extract_completion(body: &[u8]) -> Result<String, GatewayError> {
    let json: Value = serde_json::from_slice(body)
        .map_err(|e| GatewayError::MalformedResponse(format!("invalid JSON: {e}")))?;
    let content = json
        .get("choices")
        .and_then(|c| c.get(0))
        .and_then(|c| c.get("message"))
        .and_then(|m| m.get("content"))
        .ok_or_else(|| {
            GatewayError::MalformedResponse("missing choices[0].message.content".into())
        })?;
    let text = content
        .as_str()
        .ok_or_else(|| GatewayError::MalformedResponse("message content is not a string".into()))?;
    if text.trim().is_empty() {
        return Err(GatewayError::EmptyCompletion);
    }
    Ok(text.to_string())
}

impl LlmBackend for HttpBackend {
    fn config(&self) -> &BackendConfig {
        &self.config
    }

    fn backend_id(&self) -> String {
        format!("http:{}", self.config.model)
    }

    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        request.validate()?;
        let body = WireRequest::from_request(request);
        // one retry, timeouts only
        let text = match self.send_once(&body) {
            Err(GatewayError::Timeout) => self.send_once(&body)?,
            other => other?,
        };
        Ok(ChatResponse {
            text,
            backend_id: self.backend_id(),
            prompt_hash: request.prompt_hash(),
        })
    }
}
