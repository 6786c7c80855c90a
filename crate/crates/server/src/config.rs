use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ServerError;

fn default_port() -> u16 {
    8080
}

fn default_bind() -> String {
    "127.0.0.1".into()
}

/// Service configuration file. `IISA_STORE`, `IISA_CORPUS` and `IISA_PORT`
/// override the corresponding keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServerConfig {
    /// Study store root directory.
    pub store: PathBuf,
    /// Corpus manifest (line-delimited JSON).
    pub corpus: PathBuf,
    /// Study to serve; may be omitted when the store holds exactly one.
    #[serde(default)]
    pub study: Option<String>,
    #[serde(default = "default_bind")]
    pub bind: String,
    #[serde(default = "default_port")]
    pub port: u16,
    /// Required as a bearer token on admin endpoints when set.
    #[serde(default)]
    pub admin_token: Option<String>,
    /// Concurrent render jobs; defaults to the CPU count.
    #[serde(default)]
    pub render_workers: Option<usize>,
}

impl ServerConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ServerError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ServerError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: ServerConfig =
            toml::from_str(&text).map_err(|e| ServerError::Config(format!("{}: {e}", path.display())))?;
        if let Some(base) = path.parent() {
            cfg.store = base.join(&cfg.store);
            cfg.corpus = base.join(&cfg.corpus);
        }
        Ok(cfg)
    }

    /// Applies overrides from `lookup` (normally the process environment).
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<(), ServerError> {
        if let Some(v) = lookup("IISA_STORE") {
            self.store = v.into();
        }
        if let Some(v) = lookup("IISA_CORPUS") {
            self.corpus = v.into();
        }
        if let Some(v) = lookup("IISA_PORT") {
            self.port = v
                .parse()
                .map_err(|_| ServerError::Config(format!("IISA_PORT is not a port: {v}")))?;
        }
        Ok(())
    }

    pub fn render_workers(&self) -> usize {
        self.render_workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
            .max(1)
    }
}
