use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{BackendConfig, BackendKind, ChatRequest, ChatResponse, GatewayError, LlmBackend};

/// Line prefix under which poll prompts list their answer options,
/// separated by [`OPTION_SEPARATOR`].
pub const OPTIONS_PREFIX: &str = "Options:";
pub const OPTION_SEPARATOR: &str = " | ";

/// Reply used when no scripted entry matches the request digest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MockFallback {
    FixedText(String),
    /// First option label listed in the user prompt.
    FirstOption,
    /// The user message, verbatim.
    Echo,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockScript {
    /// prompt hash -> reply text
    #[serde(default)]
    pub entries: BTreeMap<String, String>,
    pub fallback: MockFallback,
}

impl MockScript {
    pub fn resolve(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        if let Some(text) = self.entries.get(&request.prompt_hash()) {
            return Ok(text.clone());
        }
        match &self.fallback {
            MockFallback::FixedText(text) => Ok(text.clone()),
            MockFallback::Echo => Ok(request.user.clone()),
            MockFallback::FirstOption => first_option_label(&request.user)
                .map(str::to_owned)
                .ok_or_else(|| GatewayError::Script("no option list in user prompt".into())),
        }
    }
}

/// First label on the last `Options:` line of a prompt.
pub fn first_option_label(prompt: &str) -> Option<&str> {
    let line = prompt
        .lines()
        .rev()
        .find_map(|line| line.trim_start().strip_prefix(OPTIONS_PREFIX))?;
    line.split(OPTION_SEPARATOR.trim())
        .map(str::trim)
        .find(|label| !label.is_empty())
}

/// Deterministic scripted backend. Immutable after construction.
#[derive(Debug, Clone)]
pub struct MockBackend {
    config: BackendConfig,
    script: MockScript,
}

impl MockBackend {
    pub fn new(config: BackendConfig) -> Result<Self, GatewayError> {
        let script = match &config.kind {
            BackendKind::Mock { script } => script.clone(),
            _ => {
                return Err(GatewayError::InvalidConfig(
                    "not a mock backend config".into(),
                ))
            }
        };
        Ok(Self { config, script })
    }

    pub fn from_script(
        entries: impl IntoIterator<Item = (String, String)>,
        fallback: MockFallback,
    ) -> Self {
        Self::new(super::mock_script(entries, fallback)).expect("mock_script builds a mock config")
    }
}

impl LlmBackend for MockBackend {
    fn config(&self) -> &BackendConfig {
        &self.config
    }

    fn backend_id(&self) -> String {
        format!("mock:{}", self.config.model)
    }

    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        request.validate()?;
        let text = self.script.resolve(request)?;
        Ok(ChatResponse {
            text,
            backend_id: self.backend_id(),
            prompt_hash: request.prompt_hash(),
        })
    }
}
