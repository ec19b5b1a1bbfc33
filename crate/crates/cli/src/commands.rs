use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde_json::json;
use tripgym::catalog::{generate_dataset, load_catalog, PlanEntry, PreferenceCatalog};
use tripgym::dataset::{load_dataset, read_scenarios, write_dataset};
use tripgym::domain::{validate_scenario, validate_scenario_with, EpisodeLog, OptionCounts, Scenario};
use tripgym::engine::EngineError;
use tripgym::harness::scripted::{scripted, SCRIPTED_NAMES};
use tripgym::harness::{
    render_report, report_from_logs, run_benchmark, AdapterFactory, BenchmarkReport, EpisodeRun,
    RemoteAgentConfig, RemoteAgentFactory, ReportFormat,
};
use tripgym_service::{build_simulator, build_state, ServeError, SimulatorSpec};

use crate::args::{GenerateArgs, ReportArgs, RunArgs, ServeArgs, ValidateArgs};
use crate::error::{CliError, CliResult};
use crate::settings::{parse_simulator, Settings};

fn read_file(path: &Path) -> CliResult<Vec<u8>> {
    if !path.exists() {
        return Err(CliError::not_found(format!("NOT_FOUND: {}", path.display())));
    }
    fs::read(path).map_err(|e| CliError::failed(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> CliResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::failed(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| CliError::failed(format!("{}: {e}", path.display())))
}

fn parse_format(s: &str) -> CliResult<ReportFormat> {
    s.parse().map_err(CliError::invalid)
}

pub fn generate(a: GenerateArgs) -> CliResult {
    let catalog = match &a.catalog {
        Some(p) => load_catalog(&read_file(p)?)?,
        None => PreferenceCatalog::builtin(),
    };
    let plan = PlanEntry::parse_plan(&a.plan)?;
    let d = OptionCounts::default();
    let counts = OptionCounts::new(a.wrong.unwrap_or(d.wrong), a.noise.unwrap_or(d.noise));
    let dataset = generate_dataset(&catalog, &plan, counts, a.seed)?;
    write_dataset(&a.out, &dataset)?;
    let m = &dataset.manifest;
    let summary = json!({
        "out": a.out,
        "scenario_count": m.scenario_count,
        "tier_counts": m.tier_counts,
        "content_digest": m.content_digest,
    });
    println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
    Ok(())
}

pub fn validate(a: ValidateArgs) -> CliResult {
    if let Some(p) = &a.catalog {
        let catalog = load_catalog(&read_file(p)?)?;
        println!("catalog ok: {} aspects, digest {}", catalog.aspects.len(), catalog.digest());
        return Ok(());
    }
    let path = a.path.expect("clap requires a target");
    let (scenarios, manifest) = read_scenarios(&path)?;
    let mut problems = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for s in &scenarios {
        if !seen.insert(s.scenario_id.as_str()) {
            problems.push(format!("{}: DUPLICATE_SCENARIO", s.scenario_id));
        }
        let report = match &manifest {
            Some(m) => validate_scenario_with(s, m.option_counts),
            None => validate_scenario(s),
        };
        problems.extend(report.violations.iter().map(|v| format!("{}: {v}", s.scenario_id)));
    }
    if problems.is_empty() && manifest.is_some() {
        // Digest and manifest consistency.
        if let Err(e) = load_dataset(&path) {
            problems.push(e.to_string());
        }
    }
    for p in &problems {
        println!("{p}");
    }
    if problems.is_empty() {
        println!("{} scenarios ok", scenarios.len());
        Ok(())
    } else {
        Err(CliError::invalid(format!(
            "INVALID_SCENARIO: {} violation(s) in {} scenario(s)",
            problems.len(),
            scenarios.len()
        )))
    }
}

/// Builds an adapter from `scripted:<name>` or `remote:<url>`.
pub fn adapter_factory(spec: &str, agent: &RemoteAgentConfig) -> CliResult<Arc<dyn AdapterFactory>> {
    if let Some(name) = spec.strip_prefix("scripted:") {
        return scripted(name).ok_or_else(|| {
            CliError::invalid(format!(
                "INVALID_CONFIG: unknown scripted adapter `{name}` (one of {})",
                SCRIPTED_NAMES.join(", ")
            ))
        });
    }
    if let Some(url) = spec.strip_prefix("remote:").or((spec == "remote").then_some("")) {
        let mut cfg = agent.clone().from_env();
        if !url.is_empty() {
            cfg.url = url.to_string();
        }
        return Ok(Arc::new(RemoteAgentFactory::new(cfg)));
    }
    Err(CliError::invalid(format!("INVALID_CONFIG: adapter `{spec}` must be scripted:<name> or remote:<url>")))
}

fn simulator_spec(flag: Option<&str>, settings: &Settings) -> CliResult<SimulatorSpec> {
    match flag {
        Some(s) => parse_simulator(s, settings.simulator.as_ref()),
        None => Ok(match settings.simulator.clone() {
            Some(SimulatorSpec::Remote(r)) => SimulatorSpec::Remote(r.from_env()),
            other => other.unwrap_or(SimulatorSpec::RuleBased),
        }),
    }
}

pub fn engine_error(e: EngineError) -> CliError {
    match e {
        EngineError::InvalidConfig(_) | EngineError::InvalidScenario(_) | EngineError::InvalidLog(_) => {
            CliError::invalid(e)
        }
        other => CliError::failed(other),
    }
}

/// File-name-safe form of a scenario id.
fn file_stem(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' }).collect()
}

fn write_run(out: &Path, report: &BenchmarkReport, runs: &[EpisodeRun]) -> CliResult {
    write_file(&out.join("report.json"), &render_report(report, ReportFormat::Structured))?;
    write_file(&out.join("report.csv"), &render_report(report, ReportFormat::Tabular))?;
    write_file(&out.join("report.txt"), &render_report(report, ReportFormat::Human))?;
    // Runs and episode counts are recorded pairwise.
    for (run, counts) in runs.iter().zip(&report.episodes) {
        let name = format!("{}.s{}.jsonl", file_stem(&run.log.scenario_id), counts.sample);
        write_file(&out.join("logs").join(name), &run.log.to_jsonl())?;
    }
    Ok(())
}

pub fn run(a: RunArgs) -> CliResult {
    let settings = Settings::discover(a.config.as_deref())?;
    let format = parse_format(&a.format)?;
    let mut config = settings.env.clone();
    a.env.apply(&mut config);
    config.validate().map_err(|e| CliError::invalid(format!("INVALID_CONFIG: {e}")))?;
    let mut opts = settings.benchmark.clone();
    if let Some(k) = a.k {
        opts.k = k;
    }
    if let Some(seed) = a.seed {
        opts.seed = seed;
    }
    if let Some(p) = a.parallelism {
        opts.parallelism = p;
    }
    if let Some(g) = a.group_by {
        opts.group_by = g;
    }
    if let Some(t) = a.timing {
        opts.timing = t;
    }
    let factory = adapter_factory(&a.adapter, &settings.agent)?;
    let sim = build_simulator(&simulator_spec(a.simulator.as_deref(), &settings)?);
    let dataset = load_dataset(&a.dataset)?;
    let scenarios: Vec<Arc<Scenario>> = dataset.scenarios.into_iter().map(Arc::new).collect();
    tracing::info!(scenarios = scenarios.len(), k = opts.k, adapter = %factory.name(), "starting run");
    let (report, runs) = run_benchmark(&scenarios, &config, factory.as_ref(), sim, &opts).map_err(engine_error)?;
    for f in &report.failures {
        tracing::warn!("{f}");
    }
    if let Some(out) = &a.out {
        write_run(out, &report, &runs)?;
    }
    print!("{}", render_report(&report, format));
    Ok(())
}

/// Every `*.jsonl` under the given paths, sorted within each directory.
fn collect_logs(paths: &[PathBuf]) -> CliResult<Vec<PathBuf>> {
    fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
        let mut entries: Vec<PathBuf> = fs::read_dir(dir)?.filter_map(|e| e.ok().map(|e| e.path())).collect();
        entries.sort();
        for p in entries {
            if p.is_dir() {
                walk(&p, out)?;
            } else if p.extension().is_some_and(|x| x == "jsonl") {
                out.push(p);
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    for p in paths {
        if !p.exists() {
            return Err(CliError::not_found(format!("NOT_FOUND: {}", p.display())));
        }
        if p.is_dir() {
            walk(p, &mut out).map_err(|e| CliError::failed(format!("{}: {e}", p.display())))?;
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

pub fn report(a: ReportArgs) -> CliResult {
    let format = parse_format(&a.format)?;
    let mut logs = Vec::new();
    for path in collect_logs(&a.logs)? {
        let text = String::from_utf8_lossy(&read_file(&path)?).into_owned();
        let parsed = EpisodeLog::from_jsonl_lenient(&text)
            .map_err(|e| CliError::invalid(format!("MALFORMED_LOG: {}: {e}", path.display())))?;
        if let Some(why) = parsed.truncated {
            tracing::warn!(path = %path.display(), "truncated log: {why}");
        }
        logs.push(parsed.log);
    }
    print!("{}", render_report(&report_from_logs(&logs, a.group_by, a.timing), format));
    Ok(())
}

fn serve_error(e: ServeError) -> CliError {
    match e {
        ServeError::Dataset(d) => d.into(),
        other => CliError::failed(other),
    }
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = term => {}
    }
    tracing::info!("shutting down");
}

pub fn serve(a: ServeArgs) -> CliResult {
    let settings = Settings::discover(a.config.as_deref())?;
    let mut cfg = settings.service.clone();
    if let Some(sim) = &settings.simulator {
        cfg.simulator = sim.clone();
    }
    let mut cfg = cfg.with_env().map_err(|e| CliError::invalid(format!("INVALID_CONFIG: {e}")))?;
    if let Some(s) = a.simulator.as_deref().map(str::to_string).or_else(|| std::env::var("TRIPGYM_SIMULATOR").ok()) {
        cfg.simulator = parse_simulator(&s, Some(&cfg.simulator))?;
    }
    if let Some(v) = a.bind {
        cfg.bind = v;
    }
    if let Some(v) = a.token {
        cfg.token = Some(v);
    }
    if let Some(v) = a.data_dir {
        cfg.data_dir = v;
    }
    if let Some(v) = a.dataset {
        cfg.dataset = Some(v);
    }
    if let Some(v) = a.idle_timeout_secs {
        cfg.idle_timeout_secs = v;
    }
    if let Some(v) = a.max_sessions {
        cfg.max_sessions = v;
    }
    let state = build_state(&cfg, build_simulator(&cfg.simulator)).map_err(serve_error)?;
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::failed(format!("cannot start runtime: {e}")))?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(&cfg.bind)
            .await
            .map_err(|e| CliError::failed(format!("cannot bind {}: {e}", cfg.bind)))?;
        let addr = listener.local_addr().map_err(CliError::failed)?;
        println!("listening on http://{addr}");
        use std::io::Write;
        let _ = std::io::stdout().flush();
        tripgym_service::serve(state, listener, cfg.idle_timeout(), shutdown_signal()).await.map_err(serve_error)
    })
}
