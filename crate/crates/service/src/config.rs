//! TOML configuration with environment overrides.
//!
//! ```toml
//! [service]
//! listen = "127.0.0.1:8080"
//! fact_store_path = "data/facts.jsonl"
//! corpus_path = "data/corpus.jsonl"
//! session_dir = "sessions"
//!
//! [policy]
//! max_facts = 3
//! min_turns_btw_facts = 3
//!
//! [simulation]
//! p_like_fact = 0.66
//! ```

use std::path::{Path, PathBuf};

use factful_core::curation::CurationConfig;
use factful_core::policy::PolicyParams;
use factful_core::sim::UserModel;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const ENV_LISTEN: &str = "FACTFUL_LISTEN";
pub const ENV_FACT_STORE: &str = "FACTFUL_FACT_STORE";
pub const ENV_CORPUS: &str = "FACTFUL_CORPUS";
pub const ENV_SESSION_DIR: &str = "FACTFUL_SESSION_DIR";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bad config {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn default_listen() -> String {
    "127.0.0.1:8080".into()
}
fn default_session_dir() -> PathBuf {
    PathBuf::from("sessions")
}
fn default_max_body_bytes() -> usize {
    16 * 1024
}
fn default_max_utterance_chars() -> usize {
    500
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    #[serde(default = "default_listen")]
    pub listen: String,
    /// Bundled sample data is used when unset.
    #[serde(default)]
    pub fact_store_path: Option<PathBuf>,
    #[serde(default)]
    pub corpus_path: Option<PathBuf>,
    #[serde(default = "default_session_dir")]
    pub session_dir: PathBuf,
    #[serde(default = "default_max_body_bytes")]
    pub max_body_bytes: usize,
    #[serde(default = "default_max_utterance_chars")]
    pub max_utterance_chars: usize,
    #[serde(default = "default_true")]
    pub facts_enabled: bool,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            listen: default_listen(),
            fact_store_path: None,
            corpus_path: None,
            session_dir: default_session_dir(),
            max_body_bytes: default_max_body_bytes(),
            max_utterance_chars: default_max_utterance_chars(),
            facts_enabled: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppConfig {
    #[serde(default)]
    pub service: ServiceConfig,
    #[serde(default)]
    pub policy: PolicyParams,
    #[serde(default)]
    pub curation: CurationConfig,
    #[serde(default)]
    pub simulation: UserModel,
}

impl AppConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })
    }

    /// Reads `path` if given, otherwise starts from defaults. Environment
    /// overrides are applied last.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut config = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Io {
                    path: p.display().to_string(),
                    source,
                })?;
                Self::parse(&text, &p.display().to_string())?
            }
            None => Self::default(),
        };
        config.apply_env(|k| std::env::var(k).ok());
        config.validate()?;
        Ok(config)
    }

    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) {
        if let Some(v) = get(ENV_LISTEN) {
            self.service.listen = v;
        }
        if let Some(v) = get(ENV_FACT_STORE) {
            self.service.fact_store_path = Some(v.into());
        }
        if let Some(v) = get(ENV_CORPUS) {
            self.service.corpus_path = Some(v.into());
        }
        if let Some(v) = get(ENV_SESSION_DIR) {
            self.service.session_dir = v.into();
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.policy
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("[policy] {e}")))?;
        self.curation
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("[curation] {e}")))?;
        self.simulation
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("[simulation] {e}")))?;
        if self.service.max_body_bytes == 0 || self.service.max_utterance_chars == 0 {
            return Err(ConfigError::Invalid("[service] request limits must be positive".into()));
        }
        Ok(())
    }
}
