mod common;

use std::sync::{Arc, Mutex};

use serde_json::{json, Value};
use tripgym::catalog::{generate_dataset, sample_scenario, PlanEntry, PreferenceCatalog};
use tripgym::domain::{EnvConfig, Label, Mode, OptionCounts, RawAgentCall, RevealMode, Scenario, TerminalReason};
use tripgym::harness::scripted::{
    search_query, AnswerFirstFactory, ChatterFactory, GreedyFactory, OracleFactory, RandomFactory,
};
use tripgym::harness::{
    regenerate_options, render_report, report_from_logs, run_benchmark, run_episode, sweep, AdapterError, AdapterFactory, AgentAdapter,
    AgentContext, BenchmarkOptions, BenchmarkReport, Knob, RemoteAgentConfig, RemoteAgentFactory, ReportFormat,
    SweepError, TranscriptEntry, COLUMNS,
};
use tripgym::metrics::score_episode;
use tripgym::prompts::{agent_system_prompt, tool_schema, DEFAULT_ENVIRONMENT_NAME, TOOL_NAME};
use tripgym::simulator::{RuleBased, SimulatorBackend};

fn sim() -> Arc<dyn SimulatorBackend> {
    Arc::new(RuleBased::builtin())
}

fn dataset(plan: &str, seed: u64) -> Vec<Arc<Scenario>> {
    let c = PreferenceCatalog::builtin();
    let d = generate_dataset(&c, &PlanEntry::parse_plan(plan).unwrap(), OptionCounts::default(), seed).unwrap();
    d.scenarios.into_iter().map(Arc::new).collect()
}

#[test]
fn oracle_is_perfect_on_every_composition() {
    let data = dataset("22:20,2222:10,33:10,233:10,333:10,44:10,334:10,444:10", 11);
    let sim = Arc::new(RuleBased::builtin());
    let (report, runs) =
        run_benchmark(&data, &EnvConfig::default(), &OracleFactory, sim, &BenchmarkOptions::default()).unwrap();
    for (run, e) in runs.iter().zip(&report.episodes) {
        assert!(
            e.score == 1.0 && e.active_reveals == e.preferences && e.passive_reveals == 0,
            "{}: {e:?}\n{:#?}",
            run.log.scenario_id,
            run.transcript
        );
    }
}

#[test]
fn scripted_ladder_orders_by_score() {
    let data = dataset("22:20,33:20,44:20", 5);
    let sim = Arc::new(RuleBased::builtin());
    let cfg = EnvConfig::default();
    let opts = BenchmarkOptions::default();
    let score = |f: &dyn tripgym::harness::AdapterFactory| {
        run_benchmark(&data, &cfg, f, sim.clone(), &opts).unwrap().0.overall.score
    };
    let (o, g, r) = (score(&OracleFactory), score(&GreedyFactory), score(&RandomFactory));
    assert!(o >= g && g >= r, "oracle {o} greedy {g} random {r}");
}

#[test]
fn single_sample_max_equals_mean() {
    let data = dataset("22:6,33:6", 2);
    let opts = BenchmarkOptions { k: 1, seed: 9, ..Default::default() };
    let (report, _) = run_benchmark(&data, &EnvConfig::default(), &RandomFactory, sim(), &opts).unwrap();
    assert!((report.overall.max_over_k_score - report.overall.score).abs() < 1e-12);
    for g in &report.groups {
        assert!((g.max_over_k_score - g.score).abs() < 1e-12);
    }
}

/// Fails on every call for one chosen scenario, otherwise plays the oracle.
struct FlakyFactory {
    broken: String,
}

struct Broken;

impl AgentAdapter for Broken {
    fn name(&self) -> &str {
        "broken"
    }

    fn act(&mut self, _ctx: &AgentContext<'_>) -> Result<RawAgentCall, AdapterError> {
        Err(AdapterError::Transport("connection reset".into()))
    }
}

impl AdapterFactory for FlakyFactory {
    fn name(&self) -> String {
        "flaky".into()
    }

    fn create(&self, scenario: &Arc<Scenario>, seed: u64) -> Box<dyn AgentAdapter> {
        if scenario.scenario_id == self.broken {
            Box::new(Broken)
        } else {
            OracleFactory.create(scenario, seed)
        }
    }
}

#[test]
fn one_failing_episode_leaves_the_others_untouched() {
    let data = dataset("22:3,33:3", 4);
    let broken = data[2].scenario_id.clone();
    let opts = BenchmarkOptions::default();
    let (clean, clean_runs) = run_benchmark(&data, &EnvConfig::default(), &OracleFactory, sim(), &opts).unwrap();
    let (flaky, flaky_runs) =
        run_benchmark(&data, &EnvConfig::default(), &FlakyFactory { broken: broken.clone() }, sim(), &opts).unwrap();
    assert_eq!(flaky.failures.len(), 1);
    assert!(flaky.failures[0].contains(&broken) && flaky.failures[0].contains("ADAPTER_FAILURE"));
    for (i, (a, b)) in clean_runs.iter().zip(&flaky_runs).enumerate() {
        if i == 2 {
            assert_eq!(b.log.terminal_reason, Some(TerminalReason::ProtocolError));
            assert!(b.log.turns.is_empty());
            assert_eq!(flaky.episodes[i].score, 0.0);
        } else {
            assert_eq!(a.log, b.log);
            assert_eq!(clean.episodes[i], flaky.episodes[i]);
        }
    }
}

#[test]
fn max_steps_sweep_yields_one_report_per_value() {
    let data = dataset("22:4,44:4", 6);
    let catalog = PreferenceCatalog::builtin();
    let reports = sweep(
        &catalog,
        &data,
        &EnvConfig::default(),
        &GreedyFactory,
        sim(),
        &BenchmarkOptions::default(),
        &Knob::MaxSteps(vec![10, 20, 30]),
    )
    .unwrap();
    assert_eq!(reports.len(), 3);
    let knobs: Vec<_> = reports.iter().map(|r| r.meta.options.knob.clone().unwrap()).collect();
    assert_eq!(knobs, ["max_steps=10", "max_steps=20", "max_steps=30"]);
    assert_eq!(reports.iter().map(|r| r.meta.config.max_steps).collect::<Vec<_>>(), [10, 20, 30]);
    let empty = sweep(
        &catalog,
        &data,
        &EnvConfig::default(),
        &GreedyFactory,
        sim(),
        &BenchmarkOptions::default(),
        &Knob::MaxSteps(vec![]),
    );
    assert!(matches!(empty, Err(SweepError::Empty)));
}

#[test]
fn option_count_sweep_regenerates_and_revalidates() {
    let data = dataset("22:4,33:4", 8);
    let catalog = PreferenceCatalog::builtin();
    let w10n0 = OptionCounts::new(10, 0);
    let regenerated = regenerate_options(&catalog, &data, w10n0, 3).unwrap();
    for s in &regenerated {
        for task in &s.aspects {
            assert_eq!(task.options.iter().filter(|o| o.label == Label::Noise).count(), 0);
            assert_eq!(task.options.iter().filter(|o| o.label == Label::Wrong).count(), 10);
            let problems = common::audit_aspect(&serde_json::to_value(task).unwrap());
            assert!(problems.is_empty(), "{}: {problems:?}", s.scenario_id);
        }
    }
    let knob = Knob::OptionCounts(vec![OptionCounts::new(10, 5), w10n0]);
    let reports =
        sweep(&catalog, &data, &EnvConfig::default(), &OracleFactory, sim(), &BenchmarkOptions::default(), &knob)
            .unwrap();
    let tags: Vec<_> = reports.iter().map(|r| r.meta.options.knob.clone().unwrap()).collect();
    assert_eq!(tags, ["w10n5", "w10n0"]);
    assert!(reports.iter().all(|r| r.overall.score == 1.0));
}

#[test]
fn recorded_logs_rebuild_the_run_report() {
    let data = dataset("22:3,33:2", 9);
    let opts = BenchmarkOptions { k: 3, group_by: tripgym::metrics::GroupBy::Composition, ..Default::default() };
    let cfg = EnvConfig::default().with_mode(Mode::MultiChoice);
    let (report, runs) = run_benchmark(&data, &cfg, &RandomFactory, sim(), &opts).unwrap();
    let logs: Vec<_> = runs.into_iter().map(|r| r.log).collect();
    let rebuilt = report_from_logs(&logs, opts.group_by, opts.timing);
    assert_eq!(rebuilt.overall, report.overall);
    assert_eq!(rebuilt.groups, report.groups);
    assert_eq!(rebuilt.meta.options.k, 3);
    assert_eq!(rebuilt.meta.scenario_count, 5);
    assert!(report.overall.max_over_k_score >= report.overall.score);
}

fn small_report() -> BenchmarkReport {
    let data = dataset("22:3,44:3", 10);
    let opts = BenchmarkOptions { k: 2, ..Default::default() };
    run_benchmark(&data, &EnvConfig::default(), &GreedyFactory, sim(), &opts).unwrap().0
}

#[test]
fn structured_report_round_trips() {
    let report = small_report();
    let text = render_report(&report, ReportFormat::Structured);
    let back: BenchmarkReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, report);
    assert_eq!(back.compute_digest(), report.digest);
}

#[test]
fn tables_carry_the_headline_columns_in_order() {
    let report = small_report();
    let csv = render_report(&report, ReportFormat::Tabular);
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').map(|c| c.trim_matches('"')).collect();
    assert_eq!(&header[2..8], COLUMNS);
    // Overall plus easy and hard rows.
    assert_eq!(csv.lines().count(), 4);
    let human = render_report(&report, ReportFormat::Human);
    let mut last = 0;
    for c in COLUMNS {
        let at = human.find(c).unwrap_or_else(|| panic!("missing {c}"));
        assert!(at > last);
        last = at;
    }
    assert!(human.contains("easy") && human.contains("hard"));
}

#[test]
fn empty_report_is_header_only() {
    let (report, runs) =
        run_benchmark(&[], &EnvConfig::default(), &GreedyFactory, sim(), &BenchmarkOptions::default()).unwrap();
    assert!(runs.is_empty());
    let csv = render_report(&report, ReportFormat::Tabular);
    assert_eq!(csv.lines().count(), 1);
    assert!(csv.starts_with("Group,Episodes,Best Exist Rate"));
    let human = render_report(&report, ReportFormat::Human);
    assert_eq!(human.lines().count(), 3);
}

#[test]
fn unknown_format_is_rejected() {
    let err = "xlsx".parse::<ReportFormat>().unwrap_err();
    assert!(err.to_string().starts_with("UNSUPPORTED_FORMAT"));
    assert_eq!("CSV".parse::<ReportFormat>().unwrap(), ReportFormat::Tabular);
}

#[test]
fn answer_first_is_scored_by_label() {
    let data = dataset("22:5", 12);
    for s in data {
        let mut adapter = AnswerFirstFactory.create(&s, 0);
        let run = run_episode(s.clone(), EnvConfig::default(), sim(), adapter.as_mut()).unwrap();
        let expected: f64 = s
            .aspects
            .iter()
            .map(|t| match t.options.iter().find(|o| o.option_id.number == 1).unwrap().label {
                Label::Best => 1.0,
                Label::Correct => 0.8,
                _ => 0.0,
            })
            .sum::<f64>()
            / s.aspects.len() as f64;
        assert_eq!(score_episode(&run.log, Mode::SingleChoice), expected);
        assert_eq!(run.log.terminal_reason, Some(TerminalReason::AllAnswered));
    }
}

#[test]
fn chatter_runs_out_the_clock_with_passive_reveals() {
    let s = Arc::new(sample_scenario(&PreferenceCatalog::builtin(), &"44".parse().unwrap(), 3).unwrap());
    let mut adapter = ChatterFactory.create(&s, 0);
    let run = run_episode(s, EnvConfig::default(), sim(), adapter.as_mut()).unwrap();
    assert_eq!(run.log.terminal_reason, Some(TerminalReason::MaxSteps));
    assert_eq!(run.log.turns.len(), 20);
    let at: Vec<u32> = run
        .log
        .turns
        .iter()
        .filter(|t| t.revealed.iter().any(|r| r.mode == RevealMode::Passive))
        .map(|t| t.turn_index)
        .collect();
    assert_eq!(at, [2, 5, 8, 11, 14, 17]);
}

/// Records what the agent was shown on each turn.
struct Spy {
    seen: Arc<Mutex<Vec<(String, usize)>>>,
}

impl AgentAdapter for Spy {
    fn name(&self) -> &str {
        "spy"
    }

    fn act(&mut self, ctx: &AgentContext<'_>) -> Result<RawAgentCall, AdapterError> {
        self.seen.lock().unwrap().push((ctx.system_prompt.to_string(), ctx.transcript.len()));
        assert_eq!(ctx.tool_schema, &tool_schema());
        Ok(tripgym::domain::AgentCall::action("Hello there.").into())
    }
}

#[test]
fn agents_see_the_mode_prompt_and_a_growing_transcript() {
    let s = Arc::new(sample_scenario(&PreferenceCatalog::builtin(), &"22".parse().unwrap(), 1).unwrap());
    for mode in [Mode::SingleChoice, Mode::MultiChoice] {
        let seen = Arc::new(Mutex::new(Vec::new()));
        let cfg = EnvConfig { max_steps: 4, ..EnvConfig::default().with_mode(mode) };
        run_episode(s.clone(), cfg, sim(), &mut Spy { seen: seen.clone() }).unwrap();
        let seen = seen.lock().unwrap();
        let want = agent_system_prompt(mode, DEFAULT_ENVIRONMENT_NAME);
        assert!(seen.iter().all(|(p, _)| *p == want));
        assert_eq!(seen.iter().map(|(_, n)| *n).collect::<Vec<_>>(), [1, 3, 5, 7]);
    }
}

fn tool_reply(call: Value) -> Value {
    json!({"choices": [{"index": 0, "message": {"role": "assistant", "content": null, "tool_calls": [
        {"id": "t1", "type": "function", "function": {"name": TOOL_NAME, "arguments": call.to_string()}}
    ]}}]})
}

#[test]
fn remote_agent_speaks_tool_calling_and_fails_closed() {
    let s = Arc::new(sample_scenario(&PreferenceCatalog::builtin(), &"22".parse().unwrap(), 2).unwrap());
    let query = search_query(&s.aspects[0]);
    let mock = common::MockEndpoint::start(vec![
        tool_reply(json!({"thought": "look", "choice": "search", "content": query})),
        common::chat_reply("I think I should answer in prose."),
    ]);
    let cfg = RemoteAgentConfig {
        url: mock.url.clone(),
        model: "m-1".into(),
        api_key: Some("secret".into()),
        timeout_secs: 5.0,
        requests_per_second: Some(50),
        ..Default::default()
    };
    let factory = RemoteAgentFactory::new(cfg);
    assert_eq!(factory.name(), "remote:m-1");
    let mut adapter = factory.create(&s, 0);
    let run = run_episode(s.clone(), EnvConfig::default(), sim(), adapter.as_mut()).unwrap();

    // The first call searched; the prose reply ends the episode.
    assert_eq!(run.log.turns.len(), 1);
    assert_eq!(run.log.turns[0].reward, 0.2);
    assert_eq!(run.log.terminal_reason, Some(TerminalReason::ProtocolError));
    assert!(run.adapter_error.as_deref().unwrap().starts_with("ADAPTER_FAILURE"));

    let seen = mock.requests.lock().unwrap();
    assert_eq!(seen.len(), 2);
    let (auth, first) = &seen[0];
    assert_eq!(auth, "Bearer secret");
    assert_eq!(first["tool_choice"], "required");
    assert_eq!(first["tools"], json!([tool_schema()]));
    assert_eq!(first["model"], "m-1");
    let golden = common::fill(&common::golden("agent_single_choice.system.txt"), &[("environment_name", "TripGym")]);
    assert_eq!(first["messages"][0], json!({"role": "system", "content": golden}));
    assert_eq!(first["messages"][1]["role"], "user");
    assert!(first["messages"][1]["content"].as_str().unwrap().contains(&s.description));

    // The second request replays the first call and its observation.
    let msgs = seen[1].1["messages"].as_array().unwrap();
    assert_eq!(msgs.len(), 4);
    assert_eq!(msgs[2]["tool_calls"][0]["function"]["name"], TOOL_NAME);
    assert_eq!(msgs[3]["role"], "tool");
    assert_eq!(msgs[3]["tool_call_id"], msgs[2]["tool_calls"][0]["id"]);
    match &run.transcript[2] {
        TranscriptEntry::User(obs) => assert_eq!(msgs[3]["content"].as_str().unwrap(), obs),
        other => panic!("{other:?}"),
    }
}
