//! Batch runner: drives agents against the engine, pass-k sampling, sweeps
//! and report rendering.

mod remote;
mod report;
pub mod scripted;

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use remote::{agent_request_body, parse_agent_response, RemoteAgent, RemoteAgentConfig, RemoteAgentFactory};
pub use report::{render_report, ReportFormat, UnsupportedFormat, COLUMNS};

use crate::catalog::{synthesize_options, PreferenceCatalog};
use crate::domain::{
    validate_scenario_with, EnvConfig, EpisodeLog, OptionCounts, RawAgentCall, Scenario, TerminalReason,
};
use crate::engine::{EngineError, Episode};
use crate::metrics::{aggregate, EpisodeCounts, GroupBy, MetricsRow, TimingWeight};
use crate::prompts::{agent_system_prompt, tool_schema, DEFAULT_ENVIRONMENT_NAME};
use crate::simulator::SimulatorBackend;
use crate::util::{derive_seed, label, sha256_json};

/// One transcript item, in the order the agent saw or produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "role", content = "content", rename_all = "snake_case")]
pub enum TranscriptEntry {
    User(String),
    Agent(RawAgentCall),
}

/// Everything an agent is given on each turn.
#[derive(Debug, Clone, Copy)]
pub struct AgentContext<'a> {
    pub system_prompt: &'a str,
    pub transcript: &'a [TranscriptEntry],
    pub tool_schema: &'a Value,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum AdapterError {
    #[error("ADAPTER_FAILURE: {0}")]
    Transport(String),
    /// The agent produced no usable tool call.
    #[error("ADAPTER_FAILURE: {0}")]
    Refused(String),
}

pub trait AgentAdapter: Send {
    fn name(&self) -> &str;

    fn act(&mut self, ctx: &AgentContext<'_>) -> Result<RawAgentCall, AdapterError>;
}

/// Creates one adapter per episode. Scripted factories may read the
/// scenario; model-backed ones ignore it.
pub trait AdapterFactory: Send + Sync {
    fn name(&self) -> String;

    fn create(&self, scenario: &Arc<Scenario>, seed: u64) -> Box<dyn AgentAdapter>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRun {
    pub log: EpisodeLog,
    pub transcript: Vec<TranscriptEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adapter_error: Option<String>,
}

/// Plays one episode to termination. Adapter failures end the episode as a
/// protocol error; the partial log is still returned.
pub fn run_episode(
    scenario: Arc<Scenario>,
    config: EnvConfig,
    sim: Arc<dyn SimulatorBackend>,
    adapter: &mut dyn AgentAdapter,
) -> Result<EpisodeRun, EngineError> {
    let system = agent_system_prompt(config.mode, DEFAULT_ENVIRONMENT_NAME);
    let schema = tool_schema();
    let mut ep = Episode::reset(scenario, config, sim)?;
    let mut transcript = vec![TranscriptEntry::User(ep.initial_observation().to_string())];
    let mut adapter_error = None;
    while !ep.is_done() {
        let ctx = AgentContext { system_prompt: &system, transcript: &transcript, tool_schema: &schema };
        match adapter.act(&ctx) {
            Ok(call) => {
                let out = ep.step(call.clone())?;
                transcript.push(TranscriptEntry::Agent(call));
                transcript.push(TranscriptEntry::User(out.observation));
            }
            Err(e) => {
                tracing::warn!(adapter = adapter.name(), "{e}");
                adapter_error = Some(e.to_string());
                ep.finish(TerminalReason::ProtocolError);
            }
        }
    }
    Ok(EpisodeRun { log: ep.into_log(), transcript, adapter_error })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkOptions {
    /// Samples per scenario.
    pub k: u32,
    pub seed: u64,
    /// Maximum concurrently running episodes; 0 uses every core.
    pub parallelism: usize,
    pub group_by: GroupBy,
    pub timing: TimingWeight,
    /// Sweep label echoed in the report.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub knob: Option<String>,
}

impl Default for BenchmarkOptions {
    fn default() -> Self {
        Self { k: 1, seed: 0, parallelism: 0, group_by: GroupBy::Tier, timing: TimingWeight::Reward, knob: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub dataset_digest: String,
    pub scenario_count: usize,
    pub adapter: String,
    pub simulator: String,
    pub config: EnvConfig,
    pub options: BenchmarkOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub meta: ReportMeta,
    pub overall: MetricsRow,
    pub groups: Vec<MetricsRow>,
    pub episodes: Vec<EpisodeCounts>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<String>,
    /// SHA-256 of the report with this field empty.
    pub digest: String,
}

impl BenchmarkReport {
    pub fn compute_digest(&self) -> String {
        let mut copy = self.clone();
        copy.digest.clear();
        sha256_json(&copy)
    }
}

/// Content digest of a scenario list, matching the dataset manifest digest.
pub fn scenarios_digest(scenarios: &[Arc<Scenario>]) -> String {
    let joined: Vec<String> = scenarios.iter().map(|s| s.digest()).collect();
    crate::util::sha256_hex(joined.join("\n").as_bytes())
}

/// Seed for sample `j` of scenario `i`. Independent of `k`, so smaller runs
/// are prefixes of larger ones.
pub fn episode_seed(base: u64, scenario_index: usize, sample: u32) -> u64 {
    derive_seed(base, &[label("episode"), scenario_index as u64, sample as u64])
}

/// Runs `k` samples per scenario and aggregates. Episode failures are
/// reported but never abort the batch; the reduction order is fixed.
pub fn run_benchmark(
    scenarios: &[Arc<Scenario>],
    config: &EnvConfig,
    factory: &dyn AdapterFactory,
    sim: Arc<dyn SimulatorBackend>,
    opts: &BenchmarkOptions,
) -> Result<(BenchmarkReport, Vec<EpisodeRun>), EngineError> {
    config.validate()?;
    let k = opts.k.max(1);
    let jobs: Vec<(usize, u32)> = (0..scenarios.len()).flat_map(|i| (0..k).map(move |j| (i, j))).collect();
    let run_one = |&(i, j): &(usize, u32)| {
        let seed = episode_seed(opts.seed, i, j);
        let cfg = config.clone().with_seed(seed);
        let scenario = scenarios[i].clone();
        let mut adapter = factory.create(&scenario, seed);
        run_episode(scenario, cfg, sim.clone(), adapter.as_mut()).map(|r| (j, r))
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.parallelism)
        .build()
        .expect("thread pool");
    let results: Vec<_> = pool.install(|| jobs.par_iter().map(run_one).collect());

    let mut runs = Vec::new();
    let mut counts = Vec::new();
    let mut failures = Vec::new();
    for ((i, _), r) in jobs.iter().zip(results) {
        match r {
            Ok((j, run)) => {
                let mut c = EpisodeCounts::from_log(&run.log, opts.timing);
                c.sample = j;
                if let Some(e) = &run.adapter_error {
                    failures.push(format!("{} sample {j}: {e}", run.log.scenario_id));
                }
                counts.push(c);
                runs.push(run);
            }
            Err(e) => failures.push(format!("{}: {e}", scenarios[*i].scenario_id)),
        }
    }
    let (overall, groups) = aggregate(&counts, opts.group_by);
    let mut report = BenchmarkReport {
        meta: ReportMeta {
            dataset_digest: scenarios_digest(scenarios),
            scenario_count: scenarios.len(),
            adapter: factory.name(),
            simulator: sim.name().to_string(),
            config: config.clone(),
            options: BenchmarkOptions { k, ..opts.clone() },
        },
        overall,
        groups,
        episodes: counts,
        failures,
        digest: String::new(),
    };
    report.digest = report.compute_digest();
    Ok((report, runs))
}

/// Builds a report from recorded logs. Repeated logs of one scenario are
/// numbered as samples 0, 1, ... in input order.
pub fn report_from_logs(logs: &[EpisodeLog], group_by: GroupBy, timing: TimingWeight) -> BenchmarkReport {
    let mut seen: std::collections::HashMap<&str, u32> = std::collections::HashMap::new();
    let counts: Vec<EpisodeCounts> = logs
        .iter()
        .map(|log| {
            let n = seen.entry(log.scenario_id.as_str()).or_insert(0);
            let mut c = EpisodeCounts::from_log(log, timing);
            c.sample = *n;
            *n += 1;
            c
        })
        .collect();
    let k = seen.values().copied().max().unwrap_or(1);
    let (overall, groups) = aggregate(&counts, group_by);
    let mut report = BenchmarkReport {
        meta: ReportMeta {
            dataset_digest: String::new(),
            scenario_count: seen.len(),
            adapter: "recorded".into(),
            simulator: "recorded".into(),
            config: logs.first().map(|l| l.config.clone()).unwrap_or_default(),
            options: BenchmarkOptions { k, group_by, timing, ..BenchmarkOptions::default() },
        },
        overall,
        groups,
        episodes: counts,
        failures: Vec::new(),
        digest: String::new(),
    };
    report.digest = report.compute_digest();
    report
}

/// One sweep dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Knob {
    MaxSteps(Vec<u32>),
    OptionCounts(Vec<OptionCounts>),
}

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error("knob value set is empty")]
    Empty,
    #[error("regenerated scenario {scenario} ({tag}) failed validation: {detail}")]
    Invalid { scenario: String, tag: String, detail: String },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Regenerates every aspect's options with `counts` and re-validates.
pub fn regenerate_options(
    catalog: &PreferenceCatalog,
    scenarios: &[Arc<Scenario>],
    counts: OptionCounts,
    seed: u64,
) -> Result<Vec<Arc<Scenario>>, SweepError> {
    scenarios
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let mut s = (**s).clone();
            for task in &mut s.aspects {
                let sub = derive_seed(seed, &[label("regenerate"), i as u64, task.aspect as u64]);
                task.options = synthesize_options(catalog, task, counts, sub);
            }
            let report = validate_scenario_with(&s, counts);
            if !report.is_valid() {
                let detail = report.violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ");
                return Err(SweepError::Invalid { scenario: s.scenario_id.clone(), tag: counts.tag(), detail });
            }
            Ok(Arc::new(s))
        })
        .collect()
}

/// One report per knob value, with the value echoed in `meta.options.knob`.
pub fn sweep(
    catalog: &PreferenceCatalog,
    scenarios: &[Arc<Scenario>],
    config: &EnvConfig,
    factory: &dyn AdapterFactory,
    sim: Arc<dyn SimulatorBackend>,
    opts: &BenchmarkOptions,
    knob: &Knob,
) -> Result<Vec<BenchmarkReport>, SweepError> {
    let mut out = Vec::new();
    match knob {
        Knob::MaxSteps(values) if values.is_empty() => return Err(SweepError::Empty),
        Knob::OptionCounts(values) if values.is_empty() => return Err(SweepError::Empty),
        Knob::MaxSteps(values) => {
            for &m in values {
                let cfg = EnvConfig { max_steps: m, ..config.clone() };
                let o = BenchmarkOptions { knob: Some(format!("max_steps={m}")), ..opts.clone() };
                out.push(run_benchmark(scenarios, &cfg, factory, sim.clone(), &o)?.0);
            }
        }
        Knob::OptionCounts(values) => {
            for &counts in values {
                let regenerated = regenerate_options(catalog, scenarios, counts, opts.seed)?;
                let o = BenchmarkOptions { knob: Some(counts.tag()), ..opts.clone() };
                out.push(run_benchmark(&regenerated, config, factory, sim.clone(), &o)?.0);
            }
        }
    }
    Ok(out)
}
