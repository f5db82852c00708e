//! Layered configuration: defaults < config file < environment < flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use synthpoll::embed_index::{HashedBowEmbedder, DEFAULT_DIM, DEFAULT_SEED};
use synthpoll::llm_gateway::{BackendConfig, BackendKind, ENV_API_BASE, ENV_MODEL};
use synthpoll::survey_runner::{ExcerptPolicy, PollMode};

pub const CONFIG_FILE_NAME: &str = "synthpoll.json";
pub const DEFAULT_API_BASE: &str = "http://localhost:11434";
pub const DEFAULT_MODEL: &str = "llama3.3";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    /// Index file used when `--index`/`--out` is not given.
    pub index: Option<PathBuf>,
    /// Directory for role profiles.
    pub roles: Option<PathBuf>,
    /// Relative survey paths are resolved against this directory.
    pub surveys: Option<PathBuf>,
    /// Directory receiving responses and reports.
    pub outputs: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub backend: BackendConfig,
    pub embed_dim: usize,
    pub retrieval_k: usize,
    pub concurrency_limit: usize,
    #[serde(default)]
    pub paths: Paths,
    pub poll_mode: PollMode,
    pub excerpt: ExcerptPolicy,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            backend: BackendConfig::http(DEFAULT_API_BASE, DEFAULT_MODEL),
            embed_dim: DEFAULT_DIM,
            retrieval_k: 1,
            concurrency_limit: synthpoll::llm_gateway::DEFAULT_MAX_IN_FLIGHT,
            paths: Paths::default(),
            poll_mode: PollMode::PerRole,
            excerpt: ExcerptPolicy::TopHit,
        }
    }
}

/// Values given on the command line; `None` keeps the lower layer.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub api_base: Option<String>,
    pub model: Option<String>,
    pub temperature: Option<f64>,
    pub concurrency: Option<usize>,
    pub embed_dim: Option<usize>,
    pub retrieval_k: Option<usize>,
    pub poll_mode: Option<PollMode>,
    pub excerpt: Option<ExcerptPolicy>,
}

/// Objects merge key by key; anything else is replaced. A backend whose
/// `kind` changes is replaced whole so stale variant fields don't linger.
fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(base), Value::Object(patch)) => {
            let kind_changed = matches!(
                (base.get("kind"), patch.get("kind")),
                (Some(a), Some(b)) if a != b
            );
            if kind_changed {
                *base = patch;
                return;
            }
            for (key, value) in patch {
                match base.get_mut(&key) {
                    Some(slot) => merge(slot, value),
                    None => {
                        base.insert(key, value);
                    }
                }
            }
        }
        (base, patch) => *base = patch,
    }
}

impl Config {
    /// Picks the explicit `--config` file, else `synthpoll.json` in the
    /// working directory when present.
    pub fn locate(explicit: Option<&Path>) -> anyhow::Result<Option<PathBuf>> {
        match explicit {
            Some(path) if path.is_file() => Ok(Some(path.to_path_buf())),
            Some(path) => bail!("config file {} not found", path.display()),
            None => {
                let local = PathBuf::from(CONFIG_FILE_NAME);
                Ok(local.is_file().then_some(local))
            }
        }
    }

    pub fn from_file_text(text: &str) -> anyhow::Result<Self> {
        let patch: Value = serde_json::from_str(text).context("config is not valid JSON")?;
        if !patch.is_object() {
            bail!("config must be a JSON object");
        }
        let mut merged =
            serde_json::to_value(Config::default()).expect("default config serializes");
        merge(&mut merged, patch);
        serde_json::from_value(merged).context("invalid config")
    }

    /// Builds the effective config from every layer and validates it.
    pub fn resolve(
        file: Option<&Path>,
        env: impl Fn(&str) -> Option<String>,
        overrides: &Overrides,
    ) -> anyhow::Result<Self> {
        let mut config = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                Self::from_file_text(&text).with_context(|| format!("config {}", path.display()))?
            }
            None => Self::default(),
        };

        let api_base = overrides
            .api_base
            .clone()
            .or_else(|| env(ENV_API_BASE).filter(|v| !v.is_empty()));
        if let Some(base_url) = api_base {
            config.backend.kind = BackendKind::HttpOpenAiCompatible { base_url };
        }
        if let Some(model) = overrides
            .model
            .clone()
            .or_else(|| env(ENV_MODEL).filter(|v| !v.is_empty()))
        {
            config.backend.model = model;
        }
        if let Some(t) = overrides.temperature {
            config.backend.temperature = t;
        }
        if let Some(n) = overrides.concurrency {
            config.concurrency_limit = n;
        }
        if let Some(d) = overrides.embed_dim {
            config.embed_dim = d;
        }
        if let Some(k) = overrides.retrieval_k {
            config.retrieval_k = k;
        }
        if let Some(mode) = overrides.poll_mode {
            config.poll_mode = mode;
        }
        if let Some(excerpt) = overrides.excerpt {
            config.excerpt = excerpt;
        }
        config.backend.max_in_flight = config.concurrency_limit.max(1);
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.concurrency_limit == 0 {
            bail!("concurrency_limit must be positive");
        }
        if self.retrieval_k == 0 {
            bail!("retrieval_k must be positive");
        }
        HashedBowEmbedder::new(self.embed_dim, DEFAULT_SEED)?;
        self.backend.validate()?;
        if let Some(dir) = &self.paths.surveys {
            if !dir.is_dir() {
                bail!("paths.surveys {} is not a directory", dir.display());
            }
        }
        for (name, dir) in [
            ("roles", &self.paths.roles),
            ("outputs", &self.paths.outputs),
        ] {
            if let Some(dir) = dir {
                if dir.exists() && !dir.is_dir() {
                    bail!("paths.{name} {} is not a directory", dir.display());
                }
            }
        }
        if let Some(index) = &self.paths.index {
            if index.is_dir() {
                bail!("paths.index {} is a directory", index.display());
            }
        }
        Ok(())
    }

    pub fn embedder(&self) -> HashedBowEmbedder {
        HashedBowEmbedder::new(self.embed_dim, DEFAULT_SEED).expect("validated")
    }

    pub fn roles_dir(&self) -> PathBuf {
        self.paths
            .roles
            .clone()
            .unwrap_or_else(|| PathBuf::from("roles"))
    }

    pub fn index_path(&self) -> PathBuf {
        self.paths
            .index
            .clone()
            .unwrap_or_else(|| PathBuf::from("roles.roleindex.json"))
    }

    pub fn output_path(&self, file_name: &str) -> PathBuf {
        match &self.paths.outputs {
            Some(dir) => dir.join(file_name),
            None => PathBuf::from(file_name),
        }
    }

    pub fn survey_path(&self, given: &Path) -> PathBuf {
        match &self.paths.surveys {
            Some(dir) if given.is_relative() && !given.exists() => dir.join(given),
            _ => given.to_path_buf(),
        }
    }
}
