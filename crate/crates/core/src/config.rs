//! Run configuration: defaults, `key=value` config files, and CLI overrides.

use std::path::{Path, PathBuf};

pub use crate::retrieve::CorpusChoice;
use crate::retrieve::{DEFAULT_ROLE_TAU, DEFAULT_TOP_K};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config line {line}: {reason}")]
    BadLine { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct Config {
    pub provider_endpoint: Option<String>,
    pub model: String,
    /// Name of the environment variable holding the API credential.
    pub api_key_env: String,
    pub mock_script: Option<PathBuf>,
    pub embed_endpoint: Option<String>,
    pub mock_embeddings: bool,
    pub k: usize,
    pub max_parallel: usize,
    /// Recorded for reproducibility; the built-in pipelines are
    /// deterministic and do not sample.
    pub seed: u64,
    pub retry_max_attempts: u32,
    pub retry_base_ms: u64,
    pub role_tau: f64,
    pub max_reference_chars: usize,
    pub annotate_retry_limit: u32,
    pub transcript: Option<PathBuf>,
    pub corpus: CorpusChoice,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            provider_endpoint: None,
            model: "default-model".to_string(),
            api_key_env: "CICHECK_API_KEY".to_string(),
            mock_script: None,
            embed_endpoint: None,
            mock_embeddings: false,
            k: DEFAULT_TOP_K,
            max_parallel: crate::gateway::DEFAULT_MAX_PARALLEL,
            seed: 0,
            retry_max_attempts: 3,
            retry_base_ms: 100,
            role_tau: DEFAULT_ROLE_TAU,
            max_reference_chars: crate::judge::DEFAULT_MAX_REFERENCE_CHARS,
            annotate_retry_limit: crate::annotate::DEFAULT_RETRY_LIMIT,
            transcript: None,
            corpus: CorpusChoice::default(),
        }
    }
}

impl Config {
    /// Apply `key=value` lines over the current values. `#` starts a comment.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path)?;
        for (index, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let lineno = index + 1;
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::BadLine {
                line: lineno,
                reason: "expected `key=value`".into(),
            })?;
            let key = key.trim();
            let value = value.trim();
            let bad = |reason: String| ConfigError::BadLine { line: lineno, reason };
            match key {
                "provider_endpoint" => self.provider_endpoint = Some(value.to_string()),
                "model" => self.model = value.to_string(),
                "api_key_env" => self.api_key_env = value.to_string(),
                "mock_script" => self.mock_script = Some(PathBuf::from(value)),
                "embed_endpoint" => self.embed_endpoint = Some(value.to_string()),
                "mock_embeddings" => {
                    self.mock_embeddings = value
                        .parse()
                        .map_err(|_| bad(format!("`{value}` is not a boolean")))?
                }
                "k" => self.k = value.parse().map_err(|_| bad(format!("bad k `{value}`")))?,
                "max_parallel" => {
                    self.max_parallel =
                        value.parse().map_err(|_| bad(format!("bad max_parallel `{value}`")))?
                }
                "seed" => {
                    self.seed = value.parse().map_err(|_| bad(format!("bad seed `{value}`")))?
                }
                "retry_max_attempts" => {
                    self.retry_max_attempts = value
                        .parse()
                        .map_err(|_| bad(format!("bad retry_max_attempts `{value}`")))?
                }
                "retry_base_ms" => {
                    self.retry_base_ms =
                        value.parse().map_err(|_| bad(format!("bad retry_base_ms `{value}`")))?
                }
                "role_tau" => {
                    self.role_tau =
                        value.parse().map_err(|_| bad(format!("bad role_tau `{value}`")))?
                }
                "max_reference_chars" => {
                    self.max_reference_chars = value
                        .parse()
                        .map_err(|_| bad(format!("bad max_reference_chars `{value}`")))?
                }
                "annotate_retry_limit" => {
                    self.annotate_retry_limit = value
                        .parse()
                        .map_err(|_| bad(format!("bad annotate_retry_limit `{value}`")))?
                }
                "transcript" => self.transcript = Some(PathBuf::from(value)),
                "corpus" => self.corpus = value.parse().map_err(bad)?,
                other => return Err(bad(format!("unknown key `{other}`"))),
            }
        }
        Ok(())
    }
}
