//! Session registry: create, step, read and close episodes, with
//! write-ahead persistence and single-writer enforcement per session.

use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use tripgym::domain::{EnvConfig, EpisodeLog, LogRecord, RawAgentCall, Scenario, TerminalReason};
use tripgym::engine::{EngineError, Episode, StepOutcome};
use tripgym::prompts::{agent_system_prompt, tool_schema, DEFAULT_ENVIRONMENT_NAME};
use tripgym::simulator::SimulatorBackend;

use crate::store::{SessionFile, Store, StoreError};

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("{0}")]
    NotFound(String),
    #[error("scenario failed validation: {}", .0.join("; "))]
    InvalidScenario(Vec<String>),
    #[error("{0}")]
    InvalidConfig(String),
    #[error("episode has already terminated")]
    EpisodeDone,
    #[error("{0}")]
    Conflict(String),
    #[error("missing or wrong bearer token")]
    AuthFailed,
    #[error("{0}")]
    MalformedRequest(String),
    #[error("session limit of {0} reached")]
    TooManySessions(usize),
    #[error("storage failure: {0}")]
    Storage(String),
}

impl ApiError {
    pub fn code(&self) -> &'static str {
        match self {
            ApiError::NotFound(_) => "NOT_FOUND",
            ApiError::InvalidScenario(_) => "INVALID_SCENARIO",
            ApiError::InvalidConfig(_) => "INVALID_CONFIG",
            ApiError::EpisodeDone => "EPISODE_DONE",
            ApiError::Conflict(_) => "CONFLICT",
            ApiError::AuthFailed => "AUTH_FAILED",
            ApiError::MalformedRequest(_) => "MALFORMED_REQUEST",
            ApiError::TooManySessions(_) => "TOO_MANY_SESSIONS",
            ApiError::Storage(_) => "STORAGE_ERROR",
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        ApiError::Storage(e.to_string())
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::EpisodeDone => ApiError::EpisodeDone,
            EngineError::InvalidScenario(v) => ApiError::InvalidScenario(v),
            EngineError::InvalidConfig(c) => ApiError::InvalidConfig(c.to_string()),
            other => ApiError::Storage(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateRequest {
    #[serde(default)]
    pub scenario_id: Option<String>,
    /// Inline scenario document; kept raw so parse errors map to INVALID_SCENARIO.
    #[serde(default)]
    pub scenario: Option<Value>,
    /// Partial config; omitted fields take their defaults.
    #[serde(default)]
    pub config: Option<Value>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Created {
    pub session_id: String,
    pub observation: String,
    pub system_prompt: String,
    pub tool_schema: Value,
    pub config: EnvConfig,
}

#[derive(Debug, Clone, Deserialize)]
pub struct StepRequest {
    #[serde(flatten)]
    pub call: RawAgentCall,
    /// Optional compare-and-set guard: the turn index the client expects to write.
    #[serde(default)]
    pub expected_turn: Option<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub done: bool,
    pub terminal_reason: Option<TerminalReason>,
    pub turns: usize,
    pub log: EpisodeLog,
}

struct Live {
    episode: Episode,
    file: SessionFile,
    last_active: Instant,
}

pub struct Session {
    id: String,
    /// Held for the whole of a step; a second writer fails fast.
    stepping: AtomicBool,
    live: Mutex<Live>,
}

impl Session {
    fn view(&self, live: &Live) -> SessionView {
        SessionView {
            session_id: self.id.clone(),
            done: live.episode.is_done(),
            terminal_reason: live.episode.state().terminal_reason,
            turns: live.episode.log().turns.len(),
            log: live.episode.log().clone(),
        }
    }
}

/// Releases the writer flag on every exit path.
struct WriterGuard<'a>(&'a AtomicBool);

impl Drop for WriterGuard<'_> {
    fn drop(&mut self) {
        self.0.store(false, Ordering::Release);
    }
}

pub struct Registry {
    store: Store,
    sim: Arc<dyn SimulatorBackend>,
    scenarios: HashMap<String, Arc<Scenario>>,
    sessions: RwLock<HashMap<String, Arc<Session>>>,
    idle_timeout: Duration,
    max_sessions: usize,
}

impl Registry {
    pub fn new(
        store: Store,
        sim: Arc<dyn SimulatorBackend>,
        scenarios: Vec<Scenario>,
        idle_timeout: Duration,
        max_sessions: usize,
    ) -> Registry {
        let scenarios = scenarios.into_iter().map(|s| (s.scenario_id.clone(), Arc::new(s))).collect();
        Registry { store, sim, scenarios, sessions: RwLock::new(HashMap::new()), idle_timeout, max_sessions }
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn scenario_count(&self) -> usize {
        self.scenarios.len()
    }

    /// Unfinished sessions held in memory. A session busy stepping counts.
    pub fn active(&self) -> usize {
        let map = self.sessions.read().unwrap();
        map.values().filter(|s| s.live.try_lock().map(|l| !l.episode.is_done()).unwrap_or(true)).count()
    }

    fn resolve(&self, req: &CreateRequest) -> Result<Arc<Scenario>, ApiError> {
        match (&req.scenario_id, &req.scenario) {
            (_, Some(doc)) => serde_json::from_value(doc.clone())
                .map(Arc::new)
                .map_err(|e| ApiError::InvalidScenario(vec![format!("malformed scenario document: {e}")])),
            (Some(id), None) => {
                self.scenarios.get(id).cloned().ok_or_else(|| ApiError::NotFound(format!("unknown scenario `{id}`")))
            }
            (None, None) => Err(ApiError::MalformedRequest("give scenario_id or an inline scenario".into())),
        }
    }

    pub fn create(&self, body: Value) -> Result<Created, ApiError> {
        let req: CreateRequest =
            serde_json::from_value(body).map_err(|e| ApiError::MalformedRequest(format!("bad request body: {e}")))?;
        let config: EnvConfig = match &req.config {
            None => EnvConfig::default(),
            Some(v) => serde_json::from_value(v.clone()).map_err(|e| ApiError::InvalidConfig(e.to_string()))?,
        };
        config.validate().map_err(|e| ApiError::InvalidConfig(e.to_string()))?;
        let scenario = self.resolve(&req)?;
        if self.active() >= self.max_sessions {
            return Err(ApiError::TooManySessions(self.max_sessions));
        }
        let episode = Episode::reset(scenario.clone(), config.clone(), self.sim.clone())?;
        let id = uuid::Uuid::new_v4().simple().to_string();
        let file = self.store.create(&id, &scenario, episode.log())?;
        let created = Created {
            session_id: id.clone(),
            observation: episode.initial_observation().to_string(),
            system_prompt: agent_system_prompt(config.mode, DEFAULT_ENVIRONMENT_NAME),
            tool_schema: tool_schema(),
            config,
        };
        let session = Session {
            id: id.clone(),
            stepping: AtomicBool::new(false),
            live: Mutex::new(Live { episode, file, last_active: Instant::now() }),
        };
        self.sessions.write().unwrap().insert(id.clone(), Arc::new(session));
        tracing::info!(session = %id, scenario = %scenario.scenario_id, "session created");
        Ok(created)
    }

    /// Finds a session in memory, falling back to its file on disk.
    fn session(&self, id: &str) -> Result<Arc<Session>, ApiError> {
        if let Some(s) = self.sessions.read().unwrap().get(id) {
            return Ok(s.clone());
        }
        let unknown = || ApiError::NotFound(format!("unknown session `{id}`"));
        if !is_session_id(id) || !self.store.exists(id) {
            return Err(unknown());
        }
        let session = Arc::new(self.load(id)?);
        let mut map = self.sessions.write().unwrap();
        Ok(map.entry(id.to_string()).or_insert(session).clone())
    }

    fn load(&self, id: &str) -> Result<Session, ApiError> {
        let stored = self.store.load(id)?;
        let log = stored.log;
        let episode = Episode::restore(Arc::new(stored.scenario), log.config, self.sim.clone(), log.turns, log.terminal_reason)?;
        let file = self.store.open_append(id)?;
        Ok(Session {
            id: id.to_string(),
            stepping: AtomicBool::new(false),
            live: Mutex::new(Live { episode, file, last_active: Instant::now() }),
        })
    }

    /// Finalizes an unfinished episode, persisting the end record first.
    fn finalize(live: &mut Live, reason: TerminalReason) -> Result<(), ApiError> {
        if live.episode.is_done() {
            return Ok(());
        }
        live.file.append(&LogRecord::End { terminal_reason: reason })?;
        live.episode.finish(reason);
        Ok(())
    }

    fn expired(&self, live: &Live, now: Instant) -> bool {
        !live.episode.is_done() && now.saturating_duration_since(live.last_active) >= self.idle_timeout
    }

    pub fn step(&self, id: &str, body: Value) -> Result<StepOutcome, ApiError> {
        let session = self.session(id)?;
        let req: StepRequest = match body {
            Value::Object(_) => serde_json::from_value(body)
                .map_err(|e| ApiError::MalformedRequest(format!("bad agent call: {e}")))?,
            _ => return Err(ApiError::MalformedRequest("agent call must be a JSON object".into())),
        };
        if session.stepping.compare_exchange(false, true, Ordering::AcqRel, Ordering::Acquire).is_err() {
            return Err(ApiError::Conflict("another step on this session is in progress".into()));
        }
        let _guard = WriterGuard(&session.stepping);
        let mut live = session.live.lock().unwrap();
        if self.expired(&live, Instant::now()) {
            Self::finalize(&mut live, TerminalReason::ProtocolError)?;
            tracing::info!(session = id, "session expired");
        }
        if live.episode.is_done() {
            return Err(ApiError::EpisodeDone);
        }
        let turn = live.episode.state().turn;
        if let Some(expected) = req.expected_turn {
            if expected != turn {
                return Err(ApiError::Conflict(format!("expected turn {expected}, session is at turn {turn}")));
            }
        }
        // Step a copy; it replaces the live episode only once the record is on disk.
        let mut next = live.episode.clone();
        let outcome = next.step(req.call)?;
        live.file.append(&LogRecord::Turn(outcome.info.clone()))?;
        if let Some(reason) = outcome.terminal_reason {
            live.file.append(&LogRecord::End { terminal_reason: reason })?;
        }
        live.episode = next;
        live.last_active = Instant::now();
        tracing::info!(session = id, turn, reward = outcome.reward, done = outcome.done, "step");
        Ok(outcome)
    }

    pub fn get(&self, id: &str) -> Result<SessionView, ApiError> {
        let session = self.session(id)?;
        let live = session.live.lock().unwrap();
        Ok(session.view(&live))
    }

    /// Ends the session. An unfinished episode is finalized as a protocol
    /// error; closing again returns the same log.
    pub fn close(&self, id: &str) -> Result<SessionView, ApiError> {
        let session = self.session(id)?;
        if session.stepping.compare_exchange(false, true, Ordering::AcqRel, Ordering::Acquire).is_err() {
            return Err(ApiError::Conflict("a step on this session is in progress".into()));
        }
        let _guard = WriterGuard(&session.stepping);
        let mut live = session.live.lock().unwrap();
        Self::finalize(&mut live, TerminalReason::ProtocolError)?;
        tracing::info!(session = id, "session closed");
        Ok(session.view(&live))
    }

    /// Finalizes idle sessions and drops finished ones that have been idle
    /// for a full timeout; their files stay on disk. Returns how many
    /// sessions were finalized.
    pub fn reap(&self, now: Instant) -> usize {
        let sessions: Vec<Arc<Session>> = self.sessions.read().unwrap().values().cloned().collect();
        let mut finalized = 0;
        let mut evict = Vec::new();
        for s in sessions {
            let Ok(mut live) = s.live.try_lock() else { continue };
            if self.expired(&live, now) {
                match Self::finalize(&mut live, TerminalReason::ProtocolError) {
                    Ok(()) => {
                        finalized += 1;
                        live.last_active = now;
                        tracing::info!(session = %s.id, "session expired");
                    }
                    Err(e) => tracing::error!(session = %s.id, "cannot finalize expired session: {e}"),
                }
            } else if live.episode.is_done() && now.saturating_duration_since(live.last_active) >= self.idle_timeout {
                evict.push(s.id.clone());
            }
        }
        if !evict.is_empty() {
            let mut map = self.sessions.write().unwrap();
            for id in evict {
                map.remove(&id);
            }
        }
        finalized
    }

    /// Reloads every unfinished session from disk after a restart.
    pub fn recover(&self) -> Result<usize, ApiError> {
        let mut n = 0;
        for id in self.store.list()? {
            if self.sessions.read().unwrap().contains_key(&id) || !self.store.exists(&id) {
                continue;
            }
            let session = self.load(&id)?;
            if session.live.lock().unwrap().episode.is_done() {
                continue;
            }
            self.sessions.write().unwrap().insert(id, Arc::new(session));
            n += 1;
        }
        Ok(n)
    }
}

/// Session ids are simple hex UUIDs; anything else cannot name a file.
fn is_session_id(id: &str) -> bool {
    id.len() == 32 && id.bytes().all(|b| b.is_ascii_hexdigit())
}
