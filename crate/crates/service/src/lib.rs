//! HTTP session service over the tripgym environment.
//!
//! Endpoints: `POST /v1/sessions`, `POST /v1/sessions/{id}/step`,
//! `GET /v1/sessions/{id}`, `DELETE /v1/sessions/{id}` and `GET /v1/healthz`.

mod api;
mod config;
mod sessions;
mod store;

use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

pub use api::{router, AppState};
pub use config::{ConfigError, ServiceConfig, SimulatorSpec};
pub use sessions::{ApiError, Created, Registry, SessionView};
pub use store::{Store, StoreError};

use tripgym::catalog::PreferenceCatalog;
use tripgym::dataset::{load_dataset, DatasetError};
use tripgym::simulator::{RemoteBackend, RuleBased, SimulatorBackend};

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("session store: {0}")]
    Store(#[from] StoreError),
    #[error("recovery failed: {0}")]
    Recovery(#[from] ApiError),
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn build_simulator(spec: &SimulatorSpec) -> Arc<dyn SimulatorBackend> {
    match spec {
        SimulatorSpec::RuleBased => Arc::new(RuleBased::builtin()),
        SimulatorSpec::Remote(cfg) => Arc::new(RemoteBackend::new(cfg.clone(), RuleBased::new(&PreferenceCatalog::builtin()))),
    }
}

/// Opens the store, loads the dataset and recovers unfinished sessions.
pub fn build_state(cfg: &ServiceConfig, sim: Arc<dyn SimulatorBackend>) -> Result<AppState, ServeError> {
    let scenarios = match &cfg.dataset {
        Some(p) => load_dataset(Path::new(p))?.scenarios,
        None => Vec::new(),
    };
    let store = Store::open(&cfg.data_dir)?;
    let registry = Registry::new(store, sim, scenarios, cfg.idle_timeout(), cfg.max_sessions);
    let recovered = registry.recover()?;
    if recovered > 0 {
        tracing::info!(recovered, "recovered unfinished sessions");
    }
    Ok(AppState { registry: Arc::new(registry), token: cfg.token.clone() })
}

/// Periodically expires idle sessions.
pub fn spawn_reaper(registry: Arc<Registry>, idle_timeout: Duration) -> tokio::task::JoinHandle<()> {
    let period = (idle_timeout / 4).clamp(Duration::from_millis(50), Duration::from_secs(30));
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(period);
        loop {
            tick.tick().await;
            let reg = registry.clone();
            let _ = tokio::task::spawn_blocking(move || reg.reap(Instant::now())).await;
        }
    })
}

/// Serves `state` until `shutdown` resolves.
pub async fn serve(
    state: AppState,
    listener: tokio::net::TcpListener,
    idle_timeout: Duration,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> Result<(), ServeError> {
    let reaper = spawn_reaper(state.registry.clone(), idle_timeout);
    tracing::info!(addr = %listener.local_addr()?, "listening");
    let result = axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await;
    reaper.abort();
    Ok(result?)
}
