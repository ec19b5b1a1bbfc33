//! Native half of the `tripgym` Python package. Structured values cross the
//! boundary as JSON text; `tripgym/__init__.py` decodes them.

use std::path::Path;
use std::sync::{Arc, Mutex};

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use tripgym::catalog::{generate_dataset, PlanEntry, PreferenceCatalog};
use tripgym::domain::{EnvConfig, EpisodeLog, Mode, OptionCounts, RawAgentCall, Scenario};
use tripgym::engine::Episode;
use tripgym::harness::scripted::scripted;
use tripgym::harness::{report_from_logs, AgentAdapter, AgentContext, TranscriptEntry};
use tripgym::metrics::{score_episode, GroupBy, TimingWeight};
use tripgym::prompts::{agent_system_prompt, tool_schema, DEFAULT_ENVIRONMENT_NAME};
use tripgym::simulator::{RuleBased, SimulatorBackend};

create_exception!(_tripgym, TripgymError, PyException, "Raised with a `CODE: detail` message.");

fn err(code: &str, detail: impl std::fmt::Display) -> PyErr {
    let detail = detail.to_string();
    if detail.starts_with(code) {
        TripgymError::new_err(detail)
    } else {
        TripgymError::new_err(format!("{code}: {detail}"))
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("values serialize")
}

fn parse_mode(mode: &str) -> PyResult<Mode> {
    mode.parse().map_err(|e| err("INVALID_CONFIG", e))
}

fn parse_scenario(text: &str) -> PyResult<Scenario> {
    serde_json::from_str(text).map_err(|e| err("INVALID_SCENARIO", e))
}

fn parse_config(text: Option<&str>) -> PyResult<EnvConfig> {
    let config: EnvConfig = match text {
        Some(t) => serde_json::from_str(t).map_err(|e| err("INVALID_CONFIG", e))?,
        None => EnvConfig::default(),
    };
    config.validate().map_err(|e| err("INVALID_CONFIG", e))?;
    Ok(config)
}

fn rule_based() -> Arc<dyn SimulatorBackend> {
    Arc::new(RuleBased::builtin())
}

/// One episode over one scenario with the rule-based simulator.
#[pyclass(module = "tripgym._tripgym")]
struct Environment {
    scenario: Arc<Scenario>,
    config: EnvConfig,
    episode: Mutex<Episode>,
}

impl Environment {
    fn fresh(&self) -> PyResult<Episode> {
        Episode::reset(self.scenario.clone(), self.config.clone(), rule_based()).map_err(|e| err("INVALID_SCENARIO", e))
    }
}

#[pymethods]
impl Environment {
    #[new]
    #[pyo3(signature = (scenario_json, config_json=None))]
    fn new(scenario_json: &str, config_json: Option<&str>) -> PyResult<Self> {
        let scenario = Arc::new(parse_scenario(scenario_json)?);
        let config = parse_config(config_json)?;
        let episode = Episode::reset(scenario.clone(), config.clone(), rule_based())
            .map_err(|e| err("INVALID_SCENARIO", e))?;
        Ok(Environment { scenario, config, episode: Mutex::new(episode) })
    }

    /// Starts over; returns the opening user message.
    fn reset(&self) -> PyResult<String> {
        let ep = self.fresh()?;
        let obs = ep.initial_observation().to_string();
        *self.episode.lock().unwrap() = ep;
        Ok(obs)
    }

    #[getter]
    fn observation(&self) -> String {
        self.episode.lock().unwrap().initial_observation().to_string()
    }

    #[getter]
    fn system_prompt(&self) -> String {
        agent_system_prompt(self.config.mode, DEFAULT_ENVIRONMENT_NAME)
    }

    #[getter]
    fn done(&self) -> bool {
        self.episode.lock().unwrap().is_done()
    }

    #[getter]
    fn config_json(&self) -> String {
        to_json(&self.config)
    }

    /// Returns `(observation, reward, done, info_json)`.
    #[pyo3(signature = (choice, content, thought=""))]
    fn step(&self, choice: &str, content: &str, thought: &str) -> PyResult<(String, f64, bool, String)> {
        let call = RawAgentCall { thought: thought.into(), choice: choice.into(), content: content.into() };
        let out = self.episode.lock().unwrap().step(call).map_err(|e| err("EPISODE_DONE", e))?;
        Ok((out.observation, out.reward, out.done, to_json(&out.info)))
    }

    fn log_jsonl(&self) -> String {
        self.episode.lock().unwrap().log().to_jsonl()
    }
}

/// A built-in scripted agent (`oracle`, `greedy`, `random`, `chatter`, `answer_first`).
#[pyclass(module = "tripgym._tripgym")]
struct ScriptedAgent {
    system_prompt: String,
    inner: Mutex<Box<dyn AgentAdapter>>,
}

#[pymethods]
impl ScriptedAgent {
    #[new]
    #[pyo3(signature = (name, scenario_json, seed=0, mode="single"))]
    fn new(name: &str, scenario_json: &str, seed: u64, mode: &str) -> PyResult<Self> {
        let factory = scripted(name).ok_or_else(|| err("INVALID_CONFIG", format!("unknown scripted agent `{name}`")))?;
        let scenario = Arc::new(parse_scenario(scenario_json)?);
        Ok(ScriptedAgent {
            system_prompt: agent_system_prompt(parse_mode(mode)?, DEFAULT_ENVIRONMENT_NAME),
            inner: Mutex::new(factory.create(&scenario, seed)),
        })
    }

    /// Takes the transcript as JSON (`[{"role": "user"|"agent", "content": ...}]`)
    /// and returns the next call as JSON.
    fn act(&self, transcript_json: &str) -> PyResult<String> {
        let transcript: Vec<TranscriptEntry> =
            serde_json::from_str(transcript_json).map_err(|e| err("MALFORMED_REQUEST", e))?;
        let schema = tool_schema();
        let ctx = AgentContext { system_prompt: &self.system_prompt, transcript: &transcript, tool_schema: &schema };
        let call = self.inner.lock().unwrap().act(&ctx).map_err(|e| err("ADAPTER_FAILURE", e))?;
        Ok(to_json(&call))
    }
}

#[pyfunction]
fn tool_schema_json() -> String {
    to_json(&tool_schema())
}

#[pyfunction]
#[pyo3(signature = (mode="single"))]
fn system_prompt(mode: &str) -> PyResult<String> {
    Ok(agent_system_prompt(parse_mode(mode)?, DEFAULT_ENVIRONMENT_NAME))
}

/// Generates scenarios with the built-in catalog; returns the dataset as JSON.
#[pyfunction]
#[pyo3(signature = (plan, seed=0, wrong=None, noise=None))]
fn generate_dataset_json(plan: &str, seed: u64, wrong: Option<usize>, noise: Option<usize>) -> PyResult<String> {
    let plan = PlanEntry::parse_plan(plan).map_err(|e| err(e.code(), e))?;
    let d = OptionCounts::default();
    let counts = OptionCounts::new(wrong.unwrap_or(d.wrong), noise.unwrap_or(d.noise));
    let dataset = generate_dataset(&PreferenceCatalog::builtin(), &plan, counts, seed).map_err(|e| err(e.code(), e))?;
    Ok(to_json(&dataset))
}

#[pyfunction]
fn load_dataset_json(path: &str) -> PyResult<String> {
    let dataset = tripgym::dataset::load_dataset(Path::new(path)).map_err(|e| err(e.code(), e))?;
    Ok(to_json(&dataset))
}

fn parse_log(text: &str) -> PyResult<EpisodeLog> {
    EpisodeLog::from_jsonl_lenient(text).map(|p| p.log).map_err(|e| err("MALFORMED_LOG", e))
}

/// Episode score under `mode`, or the log's own mode when omitted.
#[pyfunction]
#[pyo3(signature = (log_jsonl, mode=None))]
fn score_log(log_jsonl: &str, mode: Option<&str>) -> PyResult<f64> {
    let log = parse_log(log_jsonl)?;
    let mode = match mode {
        Some(m) => parse_mode(m)?,
        None => log.config.mode,
    };
    Ok(score_episode(&log, mode))
}

#[pyfunction]
#[pyo3(signature = (logs, group_by="tier"))]
fn report_json(logs: Vec<String>, group_by: &str) -> PyResult<String> {
    let group_by: GroupBy = group_by.parse().map_err(|e| err("INVALID_CONFIG", e))?;
    let logs = logs.iter().map(|t| parse_log(t)).collect::<PyResult<Vec<_>>>()?;
    Ok(to_json(&report_from_logs(&logs, group_by, TimingWeight::Reward)))
}

#[pymodule]
fn _tripgym(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("TripgymError", m.py().get_type::<TripgymError>())?;
    m.add_class::<Environment>()?;
    m.add_class::<ScriptedAgent>()?;
    m.add_function(wrap_pyfunction!(tool_schema_json, m)?)?;
    m.add_function(wrap_pyfunction!(system_prompt, m)?)?;
    m.add_function(wrap_pyfunction!(generate_dataset_json, m)?)?;
    m.add_function(wrap_pyfunction!(load_dataset_json, m)?)?;
    m.add_function(wrap_pyfunction!(score_log, m)?)?;
    m.add_function(wrap_pyfunction!(report_json, m)?)?;
    Ok(())
}
