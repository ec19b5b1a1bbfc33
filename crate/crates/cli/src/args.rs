use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use tripgym::domain::{EnvConfig, Mode, OffTopicPolicy};
use tripgym::metrics::{GroupBy, TimingWeight};

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  1  runtime failure (I/O, remote endpoint, storage)
  2  usage error (unknown flag, bad flag value)
  3  invalid input (failed validation, unsupported composition, bad config, malformed log)
  4  input not found";

#[derive(Debug, Parser)]
#[command(name = "tripgym", version, about = "Multi-turn travel-planning environment with hidden user preferences", after_help = EXIT_CODES)]
pub struct Cli {
    /// More log output on stderr (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, action = ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a dataset from a preference catalog.
    Generate(GenerateArgs),
    /// Check a dataset (or a catalog) against every invariant.
    Validate(ValidateArgs),
    /// Run an agent over a dataset and write a report.
    Run(RunArgs),
    /// Render an episode log, or play an episode by hand.
    Replay(ReplayArgs),
    /// Compute a report from recorded episode logs.
    Report(ReportArgs),
    /// Start the HTTP session service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Catalog JSON file; the built-in catalog when omitted.
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    /// Compositions and counts, e.g. `22:10,33:10,44:10`.
    #[arg(long)]
    pub plan: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory (manifest.json plus scenarios/).
    #[arg(long)]
    pub out: PathBuf,
    /// Wrong options per aspect.
    #[arg(long)]
    pub wrong: Option<usize>,
    /// Noise options per aspect.
    #[arg(long)]
    pub noise: Option<usize>,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("target").required(true).args(["path", "catalog"]))]
pub struct ValidateArgs {
    /// Dataset directory, scenario file or JSONL bundle.
    pub path: Option<PathBuf>,
    /// Check a catalog file instead.
    #[arg(long)]
    pub catalog: Option<PathBuf>,
}

/// One flag per EnvConfig field. Each also reads `TRIPGYM_<FIELD>`.
#[derive(Debug, Default, Clone, Args)]
pub struct EnvFlags {
    #[arg(long, env = "TRIPGYM_MODE", value_parser = parse_mode)]
    pub mode: Option<Mode>,
    #[arg(long, alias = "max_steps", env = "TRIPGYM_MAX_STEPS")]
    pub max_steps: Option<u32>,
    #[arg(long, alias = "search_failure_interval", env = "TRIPGYM_SEARCH_FAILURE_INTERVAL")]
    pub search_failure_interval: Option<u32>,
    #[arg(long, alias = "elicitation_interval", env = "TRIPGYM_ELICITATION_INTERVAL")]
    pub elicitation_interval: Option<u32>,
    #[arg(long, alias = "reward_scale", env = "TRIPGYM_REWARD_SCALE")]
    pub reward_scale: Option<f64>,
    #[arg(long, alias = "step_penalty", env = "TRIPGYM_STEP_PENALTY")]
    pub step_penalty: Option<f64>,
    #[arg(long, alias = "search_correct_reward", env = "TRIPGYM_SEARCH_CORRECT_REWARD")]
    pub search_correct_reward: Option<f64>,
    #[arg(long, alias = "preference_correct_reward", env = "TRIPGYM_PREFERENCE_CORRECT_REWARD")]
    pub preference_correct_reward: Option<f64>,
    #[arg(long, alias = "choice_best_reward", env = "TRIPGYM_CHOICE_BEST_REWARD")]
    pub choice_best_reward: Option<f64>,
    #[arg(long, alias = "choice_correct_reward", env = "TRIPGYM_CHOICE_CORRECT_REWARD")]
    pub choice_correct_reward: Option<f64>,
    #[arg(long, alias = "wrong_choice_penalty", env = "TRIPGYM_WRONG_CHOICE_PENALTY")]
    pub wrong_choice_penalty: Option<f64>,
    #[arg(long, alias = "rng_seed", env = "TRIPGYM_RNG_SEED")]
    pub rng_seed: Option<u64>,
    #[arg(long, alias = "off_topic_policy", env = "TRIPGYM_OFF_TOPIC_POLICY", value_parser = parse_serde::<OffTopicPolicy>)]
    pub off_topic_policy: Option<OffTopicPolicy>,
}

macro_rules! overlay {
    ($flags:ident, $cfg:ident, $($field:ident),*) => {
        $( if let Some(v) = $flags.$field { $cfg.$field = v; } )*
    };
}

impl EnvFlags {
    /// Overwrites every field that was given as a flag or variable.
    pub fn apply(&self, cfg: &mut EnvConfig) {
        let f = self.clone();
        overlay!(
            f,
            cfg,
            mode,
            max_steps,
            search_failure_interval,
            elicitation_interval,
            reward_scale,
            step_penalty,
            search_correct_reward,
            preference_correct_reward,
            choice_best_reward,
            choice_correct_reward,
            wrong_choice_penalty,
            rng_seed,
            off_topic_policy
        );
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Dataset directory, scenario file or JSONL bundle.
    #[arg(long)]
    pub dataset: PathBuf,
    /// `scripted:<name>` or `remote:<chat-completions URL>`.
    #[arg(long, env = "TRIPGYM_ADAPTER", default_value = "scripted:oracle")]
    pub adapter: String,
    /// Samples per scenario.
    #[arg(long, env = "TRIPGYM_K")]
    pub k: Option<u32>,
    /// Base seed for per-episode seeds.
    #[arg(long, env = "TRIPGYM_SEED")]
    pub seed: Option<u64>,
    /// Concurrent episodes; 0 uses every core.
    #[arg(long, env = "TRIPGYM_PARALLELISM")]
    pub parallelism: Option<usize>,
    #[arg(long, value_parser = parse_group_by)]
    pub group_by: Option<GroupBy>,
    /// `reward` or `indicator`.
    #[arg(long, value_parser = parse_serde::<TimingWeight>)]
    pub timing: Option<TimingWeight>,
    /// `rule_based` or `remote:<chat-completions URL>`.
    #[arg(long, env = "TRIPGYM_SIMULATOR")]
    pub simulator: Option<String>,
    /// Directory for report files and episode logs.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Format printed on stdout: table, csv or json.
    #[arg(long, default_value = "table")]
    pub format: String,
    /// Settings file; `TRIPGYM_CONFIG`, then `./tripgym.toml` when omitted.
    #[arg(long, env = "TRIPGYM_CONFIG")]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub env: EnvFlags,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Episode log (JSONL).
    #[arg(required_unless_present = "interactive")]
    pub log: Option<PathBuf>,
    /// Readable transcript instead of JSON.
    #[arg(long)]
    pub human: bool,
    /// Type agent calls at a prompt, continuing `LOG` or starting `--scenario`.
    #[arg(long, requires = "dataset")]
    pub interactive: bool,
    /// Dataset holding the scenario (interactive only).
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Scenario to start (interactive, without a log).
    #[arg(long)]
    pub scenario: Option<String>,
    /// Where to write the interactive episode's log.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, env = "TRIPGYM_SIMULATOR")]
    pub simulator: Option<String>,
    #[command(flatten)]
    pub env: EnvFlags,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Log files, or directories searched for `*.jsonl`.
    #[arg(required = true)]
    pub logs: Vec<PathBuf>,
    #[arg(long, value_parser = parse_group_by, default_value = "tier")]
    pub group_by: GroupBy,
    #[arg(long, value_parser = parse_serde::<TimingWeight>, default_value = "reward")]
    pub timing: TimingWeight,
    /// table, csv or json.
    #[arg(long, default_value = "table")]
    pub format: String,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Settings file; `TRIPGYM_CONFIG`, then `./tripgym.toml` when omitted.
    #[arg(long, env = "TRIPGYM_CONFIG")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub bind: Option<String>,
    /// Shared bearer token. Prefer `TRIPGYM_TOKEN` over the flag.
    #[arg(long)]
    pub token: Option<String>,
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub idle_timeout_secs: Option<u64>,
    #[arg(long)]
    pub max_sessions: Option<usize>,
    /// `rule_based` or `remote:<chat-completions URL>`.
    #[arg(long)]
    pub simulator: Option<String>,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse()
}

fn parse_group_by(s: &str) -> Result<GroupBy, String> {
    s.parse()
}

/// Parses a unit enum from its serialized name; dashes count as underscores.
fn parse_serde<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.replace('-', "_"))).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_mirror_config_fields() {
        let cli = Cli::try_parse_from([
            "tripgym",
            "run",
            "--dataset",
            "d",
            "--max-steps",
            "7",
            "--search_failure_interval",
            "0",
            "--off-topic-policy",
            "action-turns-only",
        ])
        .unwrap();
        let Command::Run(run) = cli.command else { panic!() };
        let mut cfg = EnvConfig::default();
        run.env.apply(&mut cfg);
        assert_eq!(cfg.max_steps, 7);
        assert_eq!(cfg.search_failure_interval, 0);
        assert_eq!(cfg.off_topic_policy, OffTopicPolicy::ActionTurnsOnly);
        assert_eq!(cfg.elicitation_interval, EnvConfig::default().elicitation_interval);

        // Every config field has a flag.
        let fields = serde_json::to_value(EnvConfig::default()).unwrap();
        let cmd = <Cli as clap::CommandFactory>::command();
        let run = cmd.find_subcommand("run").unwrap();
        for name in fields.as_object().unwrap().keys() {
            let long = name.replace('_', "-");
            assert!(run.get_arguments().any(|a| a.get_long() == Some(long.as_str())), "no flag for {name}");
        }
    }

    #[test]
    fn negative_max_steps_is_a_usage_error() {
        let err = Cli::try_parse_from(["tripgym", "run", "--dataset", "d", "--max-steps", "-3"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
