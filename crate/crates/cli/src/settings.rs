//! The settings file shared by `run`, `replay` and `serve`.
//!
//! ```toml
//! [env]         # episode config, same keys as the flags
//! [benchmark]   # k, seed, parallelism, group_by, timing
//! [agent]       # remote agent endpoint
//! [simulator]   # kind = "rule_based" | "remote"
//! [service]     # serve only
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;
use tripgym::domain::EnvConfig;
use tripgym::harness::{BenchmarkOptions, RemoteAgentConfig};
use tripgym::simulator::RemoteConfig;
use tripgym_service::{ServiceConfig, SimulatorSpec};

use crate::error::{CliError, CliResult};

pub const DEFAULT_FILE: &str = "tripgym.toml";

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub env: EnvConfig,
    pub benchmark: BenchmarkOptions,
    pub agent: RemoteAgentConfig,
    pub simulator: Option<SimulatorSpec>,
    pub service: ServiceConfig,
}

impl Settings {
    /// Loads `explicit` if given, else `./tripgym.toml` if present, else defaults.
    pub fn discover(explicit: Option<&Path>) -> CliResult<Settings> {
        let path = match explicit {
            Some(p) if !p.exists() => return Err(CliError::not_found(format!("NOT_FOUND: {}", p.display()))),
            Some(p) => p.to_path_buf(),
            None if Path::new(DEFAULT_FILE).is_file() => PathBuf::from(DEFAULT_FILE),
            None => return Ok(Settings::default()),
        };
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::failed(format!("{}: {e}", path.display())))?;
        let settings: Settings = toml::from_str(&text)
            .map_err(|e| CliError::invalid(format!("INVALID_CONFIG: {}: {e}", path.display())))?;
        tracing::debug!(path = %path.display(), "loaded settings");
        Ok(settings)
    }
}

/// Parses `rule_based` or `remote:<url>`. A remote backend also takes
/// `TRIPGYM_SIM_*` variables.
pub fn parse_simulator(spec: &str, base: Option<&SimulatorSpec>) -> CliResult<SimulatorSpec> {
    match spec {
        "rule_based" | "rule-based" => Ok(SimulatorSpec::RuleBased),
        _ => match spec.strip_prefix("remote:").or((spec == "remote").then_some("")) {
            Some(url) => {
                let mut cfg = match base {
                    Some(SimulatorSpec::Remote(r)) => r.clone(),
                    _ => RemoteConfig::default(),
                }
                .from_env();
                if !url.is_empty() {
                    cfg.url = url.to_string();
                }
                Ok(SimulatorSpec::Remote(cfg))
            }
            None => Err(CliError::invalid(format!(
                "INVALID_CONFIG: unknown simulator `{spec}` (expected rule_based or remote:<url>)"
            ))),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_are_optional_and_strict() {
        let s: Settings = toml::from_str("[env]\nmax_steps = 12\n[benchmark]\nk = 3\n").unwrap();
        assert_eq!(s.env.max_steps, 12);
        assert_eq!(s.env.elicitation_interval, 3);
        assert_eq!(s.benchmark.k, 3);
        assert!(s.simulator.is_none());
        assert!(toml::from_str::<Settings>("[env]\nmax_stepz = 1\n").is_err());
        assert!(toml::from_str::<Settings>("[extra]\n").is_err());
    }

    #[test]
    fn simulator_specs() {
        assert_eq!(parse_simulator("rule_based", None).unwrap(), SimulatorSpec::RuleBased);
        let SimulatorSpec::Remote(r) = parse_simulator("remote:http://judge/v1/chat/completions", None).unwrap() else {
            panic!()
        };
        assert_eq!(r.url, "http://judge/v1/chat/completions");
        assert_eq!(parse_simulator("llm", None).unwrap_err().kind, crate::error::Kind::Invalid);
    }
}
