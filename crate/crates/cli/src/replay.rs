//! Log rendering and the interactive prompt.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Arc;

use serde_json::json;
use tripgym::dataset::load_dataset;
use tripgym::domain::{EpisodeLog, ParsedLog, RawAgentCall, TurnRecord};
use tripgym::engine::Episode;
use tripgym::metrics::score_episode;
use tripgym_service::build_simulator;

use crate::args::ReplayArgs;
use crate::commands::engine_error;
use crate::error::{CliError, CliResult};
use crate::settings::{parse_simulator, Settings};

fn read_log(path: &Path) -> CliResult<ParsedLog> {
    if !path.exists() {
        return Err(CliError::not_found(format!("NOT_FOUND: {}", path.display())));
    }
    let text = std::fs::read_to_string(path).map_err(|e| CliError::failed(format!("{}: {e}", path.display())))?;
    EpisodeLog::from_jsonl_lenient(&text).map_err(|e| CliError::invalid(format!("MALFORMED_LOG: {}: {e}", path.display())))
}

fn indent(text: &str) -> String {
    text.lines().map(|l| format!("    {l}")).collect::<Vec<_>>().join("\n")
}

pub fn render_turn(out: &mut String, t: &TurnRecord) {
    let choice = if t.call.choice.is_empty() { "?" } else { t.call.choice.as_str() };
    let _ = writeln!(out, "[turn {}] agent {choice}: {}", t.turn_index, t.call.content);
    if !t.call.thought.is_empty() {
        let _ = writeln!(out, "  thought: {}", t.call.thought);
    }
    let _ = writeln!(out, "  observation:\n{}", indent(&t.observation));
    let parts: Vec<String> = t
        .components
        .iter()
        .map(|c| format!("{} {}", serde_json::to_value(c.kind).unwrap().as_str().unwrap_or(""), c.value))
        .collect();
    if parts.is_empty() {
        let _ = writeln!(out, "  reward {}", t.reward);
    } else {
        let _ = writeln!(out, "  reward {} ({})", t.reward, parts.join(", "));
    }
    for r in &t.revealed {
        let mode = serde_json::to_value(r.mode).unwrap();
        let _ = writeln!(out, "  revealed {} ({})", r.preference_id, mode.as_str().unwrap_or(""));
    }
    if let Some(e) = &t.protocol_error {
        let _ = writeln!(out, "  protocol error: {e}");
    }
}

/// Readable transcript: a header, every turn, then the outcome.
pub fn render_human(parsed: &ParsedLog) -> String {
    let log = &parsed.log;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "scenario {} ({}, Travel-{}), {}, max {} steps\n",
        log.scenario_id, log.tier, log.composition, log.config.mode, log.config.max_steps
    );
    for t in &log.turns {
        render_turn(&mut out, t);
        out.push('\n');
    }
    let reason = log.terminal_reason.map(|r| r.to_string()).unwrap_or_else(|| "unfinished".into());
    let _ = writeln!(
        out,
        "end: {reason}; {} turns; total reward {}; score {:.4}",
        log.turns.len(),
        log.total_reward(),
        score_episode(log, log.config.mode)
    );
    if let Some(why) = &parsed.truncated {
        let _ = writeln!(out, "TRUNCATED: {why}");
    }
    out
}

pub fn render_json(parsed: &ParsedLog) -> String {
    let log = &parsed.log;
    let turns: Vec<_> = log
        .turns
        .iter()
        .map(|t| {
            json!({
                "turn_index": t.turn_index,
                "call": t.call,
                "observation": t.observation,
                "reward": t.reward,
                "revealed": t.revealed,
                "protocol_error": t.protocol_error,
            })
        })
        .collect();
    let doc = json!({
        "scenario_id": log.scenario_id,
        "tier": log.tier,
        "composition": log.composition,
        "mode": log.config.mode,
        "turns": turns,
        "terminal_reason": log.terminal_reason,
        "total_reward": log.total_reward(),
        "score": score_episode(log, log.config.mode),
        "truncated": parsed.truncated,
    });
    serde_json::to_string_pretty(&doc).expect("replay serializes") + "\n"
}

/// One typed agent call: a JSON object, or `<choice> <content>`.
pub fn parse_call(line: &str) -> Result<RawAgentCall, String> {
    let line = line.trim();
    if line.starts_with('{') {
        return serde_json::from_str(line).map_err(|e| format!("not an agent call: {e}"));
    }
    let (choice, content) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
    Ok(RawAgentCall { thought: String::new(), choice: choice.to_string(), content: content.trim().to_string() })
}

const HELP: &str = "Type `search <request>`, `action <utterance>` or `answer <option id>`, a JSON agent call, or :quit.";

fn interactive(a: ReplayArgs) -> CliResult {
    let dataset = load_dataset(a.dataset.as_deref().expect("clap requires --dataset"))?;
    let prior = a.log.as_deref().map(read_log).transpose()?;
    let scenario_id = match (&prior, &a.scenario) {
        (Some(p), _) => p.log.scenario_id.clone(),
        (None, Some(id)) => id.clone(),
        (None, None) => return Err(CliError::invalid("MALFORMED_REQUEST: give a log or --scenario")),
    };
    let scenario = dataset
        .scenarios
        .into_iter()
        .find(|s| s.scenario_id == scenario_id)
        .map(Arc::new)
        .ok_or_else(|| CliError::not_found(format!("NOT_FOUND: scenario `{scenario_id}` is not in the dataset")))?;
    let settings = Settings::discover(None)?;
    let sim_spec = match &a.simulator {
        Some(s) => parse_simulator(s, settings.simulator.as_ref())?,
        None => settings.simulator.clone().unwrap_or(tripgym_service::SimulatorSpec::RuleBased),
    };
    let sim = build_simulator(&sim_spec);
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let mut ep = match prior {
        Some(p) => {
            let log = p.log;
            let ep = Episode::restore(scenario, log.config, sim, log.turns, log.terminal_reason).map_err(engine_error)?;
            let _ = write!(out, "{}", render_human(&ParsedLog { log: ep.log().clone(), truncated: None }));
            ep
        }
        None => {
            let mut config = settings.env.clone();
            a.env.apply(&mut config);
            let ep = Episode::reset(scenario, config, sim).map_err(engine_error)?;
            let _ = writeln!(out, "{}\n", ep.initial_observation());
            ep
        }
    };
    let _ = writeln!(out, "{HELP}");
    let stdin = std::io::stdin();
    let mut lines = stdin.lock().lines();
    while !ep.is_done() {
        let _ = write!(out, "> ");
        let _ = out.flush();
        let Some(Ok(line)) = lines.next() else { break };
        if line.trim().is_empty() {
            continue;
        }
        if line.trim() == ":quit" {
            break;
        }
        let call = match parse_call(&line) {
            Ok(c) => c,
            Err(e) => {
                let _ = writeln!(out, "{e}");
                continue;
            }
        };
        let outcome = ep.step(call).map_err(engine_error)?;
        let mut text = String::new();
        render_turn(&mut text, &outcome.info);
        let _ = write!(out, "{text}");
        if let Some(r) = outcome.terminal_reason {
            let _ = writeln!(out, "episode over: {r}; score {:.4}", score_episode(ep.log(), ep.config().mode));
        }
    }
    if let Some(path) = &a.out {
        std::fs::write(path, ep.log().to_jsonl()).map_err(|e| CliError::failed(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

pub fn replay(a: ReplayArgs) -> CliResult {
    if a.interactive {
        return interactive(a);
    }
    let parsed = read_log(a.log.as_deref().expect("clap requires a log"))?;
    if let Some(why) = &parsed.truncated {
        tracing::warn!("log is truncated: {why}");
    }
    print!("{}", if a.human { render_human(&parsed) } else { render_json(&parsed) });
    Ok(())
}
