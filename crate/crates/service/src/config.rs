//! Service settings: defaults, then a TOML file, then `TRIPGYM_*` variables.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use tripgym::simulator::RemoteConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SimulatorSpec {
    RuleBased,
    Remote(RemoteConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub bind: String,
    /// Shared bearer token; when unset the API is open.
    #[serde(skip_serializing)]
    pub token: Option<String>,
    /// Root of the append-only session store.
    pub data_dir: PathBuf,
    /// Dataset whose scenarios can be referenced by id.
    pub dataset: Option<PathBuf>,
    pub idle_timeout_secs: u64,
    /// Upper bound on unfinished sessions held at once.
    pub max_sessions: usize,
    pub simulator: SimulatorSpec,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1:8642".into(),
            token: None,
            data_dir: PathBuf::from("tripgym-sessions"),
            dataset: None,
            idle_timeout_secs: 900,
            max_sessions: 1024,
            simulator: SimulatorSpec::RuleBased,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config file {path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error("invalid value for {var}: {value}")]
    Env { var: &'static str, value: String },
}

impl ServiceConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        toml::from_str(&text).map_err(|source| ConfigError::Parse { path: path.into(), source })
    }

    /// Applies `TRIPGYM_BIND`, `TRIPGYM_TOKEN`, `TRIPGYM_DATA_DIR`,
    /// `TRIPGYM_DATASET`, `TRIPGYM_IDLE_TIMEOUT_SECS` and
    /// `TRIPGYM_MAX_SESSIONS`; a remote simulator also reads `TRIPGYM_SIM_*`.
    pub fn with_env(self) -> Result<Self, ConfigError> {
        self.with_vars(|k| std::env::var(k).ok())
    }

    pub fn with_vars(mut self, get: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        if let Some(v) = get("TRIPGYM_BIND") {
            self.bind = v;
        }
        if let Some(v) = get("TRIPGYM_TOKEN") {
            self.token = Some(v).filter(|t| !t.is_empty());
        }
        if let Some(v) = get("TRIPGYM_DATA_DIR") {
            self.data_dir = v.into();
        }
        if let Some(v) = get("TRIPGYM_DATASET") {
            self.dataset = Some(v.into());
        }
        if let Some(v) = get("TRIPGYM_IDLE_TIMEOUT_SECS") {
            self.idle_timeout_secs = v.parse().map_err(|_| ConfigError::Env { var: "TRIPGYM_IDLE_TIMEOUT_SECS", value: v })?;
        }
        if let Some(v) = get("TRIPGYM_MAX_SESSIONS") {
            self.max_sessions = v.parse().map_err(|_| ConfigError::Env { var: "TRIPGYM_MAX_SESSIONS", value: v })?;
        }
        if let SimulatorSpec::Remote(r) = self.simulator {
            self.simulator = SimulatorSpec::Remote(r.from_env());
        }
        Ok(self)
    }

    pub fn idle_timeout(&self) -> Duration {
        Duration::from_secs(self.idle_timeout_secs)
    }
}
