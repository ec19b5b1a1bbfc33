use std::sync::Arc;

use tripgym::catalog::{sample_scenario, PreferenceCatalog};
use tripgym::domain::{
    AgentCall, AnswerStatus, AspectKind, Choice, EnvConfig, Label, Mode, OffTopicPolicy, RawAgentCall, RevealMode,
    Scenario, SearchOutcome, TerminalReason,
};
use tripgym::engine::{messages, parse_option_ids, EngineError, Episode};
use tripgym::harness::scripted::{search_query, trigger_question, CHATTER_LINE};
use tripgym::prompts::BUDGET_SENTENCE;
use tripgym::simulator::RuleBased;

fn scenario(comp: &str, seed: u64) -> Arc<Scenario> {
    Arc::new(sample_scenario(&PreferenceCatalog::builtin(), &comp.parse().unwrap(), seed).unwrap())
}

fn episode(s: &Arc<Scenario>, cfg: EnvConfig) -> Episode {
    Episode::reset(s.clone(), cfg, Arc::new(RuleBased::builtin())).unwrap()
}

fn option_with(s: &Scenario, aspect: AspectKind, label: Label) -> String {
    s.aspect(aspect).unwrap().options.iter().find(|o| o.label == label).unwrap().option_id.to_string()
}

#[test]
fn reset_shows_description_and_budget_only() {
    let s = scenario("22", 1);
    let ep = episode(&s, EnvConfig::default());
    let obs = ep.initial_observation();
    assert!(obs.starts_with(&s.description));
    assert!(obs.ends_with(BUDGET_SENTENCE));
    for p in s.preferences() {
        for st in &p.implicit_statements {
            assert!(!obs.contains(st.as_str()));
        }
    }
    assert_eq!(episode(&s, EnvConfig::default()).initial_observation(), obs);
    assert_eq!(ep.state().turn, 0);
}

#[test]
fn invalid_inputs_are_rejected() {
    let s = scenario("22", 1);
    let sim = Arc::new(RuleBased::builtin());
    let bad = EnvConfig { max_steps: 0, ..Default::default() };
    let err = Episode::reset(s.clone(), bad, sim.clone()).unwrap_err();
    assert_eq!(err.code(), "INVALID_CONFIG");

    let mut broken = (*s).clone();
    broken.aspects[0].options.retain(|o| o.label != Label::Best);
    let err = Episode::reset(Arc::new(broken), EnvConfig::default(), sim).unwrap_err();
    assert_eq!(err.code(), "INVALID_SCENARIO");
}

#[test]
fn chatter_gets_passive_reveals_every_third_turn() {
    let s = scenario("33", 4);
    let mut ep = episode(&s, EnvConfig::default());
    let mut passive_turns = Vec::new();
    while !ep.is_done() {
        let out = ep.step(AgentCall::action(CHATTER_LINE)).unwrap();
        assert_eq!(out.reward, 0.0);
        if out.info.revealed.iter().any(|r| r.mode == RevealMode::Passive) {
            passive_turns.push(out.info.turn_index);
        }
    }
    assert_eq!(passive_turns, vec![2, 5, 8, 11, 14, 17]);
    assert_eq!(ep.state().terminal_reason, Some(TerminalReason::MaxSteps));
    assert_eq!(ep.state().turn, 20);
}

#[test]
fn passive_reveals_stop_when_preferences_run_out() {
    let s = scenario("22", 9);
    let mut ep = episode(&s, EnvConfig::default());
    let mut count = 0;
    while !ep.is_done() {
        let out = ep.step(AgentCall::action(CHATTER_LINE)).unwrap();
        count += out.info.revealed.len();
        assert!(ep.state().off_topic_counter <= 3);
    }
    assert_eq!(count, 4);
    assert_eq!(ep.state().revealed.len(), 4);
}

#[test]
fn zero_interval_disables_passive_reveals() {
    let s = scenario("22", 9);
    let mut ep = episode(&s, EnvConfig { elicitation_interval: 0, ..Default::default() });
    while !ep.is_done() {
        assert!(ep.step(AgentCall::action(CHATTER_LINE)).unwrap().info.revealed.is_empty());
    }
}

#[test]
fn action_turns_only_policy_ignores_searches() {
    let s = scenario("22", 3);
    let cfg = EnvConfig { off_topic_policy: OffTopicPolicy::ActionTurnsOnly, ..Default::default() };
    let mut ep = episode(&s, cfg);
    for _ in 0..4 {
        let out = ep.step(AgentCall::search("anything at all")).unwrap();
        assert!(out.info.revealed.is_empty());
    }
    ep.step(AgentCall::action(CHATTER_LINE)).unwrap();
    ep.step(AgentCall::action(CHATTER_LINE)).unwrap();
    let out = ep.step(AgentCall::action(CHATTER_LINE)).unwrap();
    assert_eq!(out.info.revealed.len(), 1);
    assert_eq!(out.info.turn_index, 6);
}

#[test]
fn every_fifth_search_attempt_fails() {
    let s = scenario("22", 2);
    let task = &s.aspects[0];
    let mut ep = episode(&s, EnvConfig { max_steps: 40, ..Default::default() });
    let mut failed = Vec::new();
    for attempt in 1..=16 {
        let out = ep.step(AgentCall::search(search_query(task))).unwrap();
        if out.info.search_outcome == Some(SearchOutcome::SystemError) {
            assert!(out.observation.starts_with(messages::SEARCH_SYSTEM_ERROR));
            assert!(out.info.judgement.is_none());
            failed.push(attempt);
        }
    }
    assert_eq!(failed, vec![5, 10, 15]);
}

#[test]
fn search_outcomes_and_rewards() {
    let s = scenario("22", 2);
    let task = &s.aspects[0];
    let mut ep = episode(&s, EnvConfig::default());
    let first = ep.step(AgentCall::search(search_query(task))).unwrap();
    assert_eq!(first.info.search_outcome, Some(SearchOutcome::Listing));
    assert!(first.observation.starts_with(messages::SEARCH_ALIGNED));
    assert_eq!(first.reward, 0.2);
    for o in &task.options {
        assert!(first.observation.contains(&format!("\n{} | ", o.option_id)));
    }
    let again = ep.step(AgentCall::search(search_query(task))).unwrap();
    assert_eq!(again.info.search_outcome, Some(SearchOutcome::AlreadySearched));
    assert!(again.observation.ends_with("Please directly refer to the previous search results."));
    assert_eq!(again.reward, 0.0);
    let miss = ep.step(AgentCall::search(format!("{} options please", task.aspect.noun()))).unwrap();
    assert_eq!(miss.info.search_outcome, Some(SearchOutcome::NoMatch));
    assert_eq!(miss.reward, 0.0);
}

#[test]
fn listing_order_is_fixed_per_seed() {
    let s = scenario("22", 2);
    let q = search_query(&s.aspects[0]);
    let listing = |seed: u64| episode(&s, EnvConfig::default().with_seed(seed)).step(AgentCall::search(q.clone())).unwrap();
    let a = listing(1);
    assert_eq!(a.observation, listing(1).observation);
    let order = |text: &str| parse_option_ids(text);
    assert_ne!(order(&a.observation), order(&listing(2).observation));
}

#[test]
fn action_types_route_to_replies() {
    let s = scenario("22", 6);
    let task = &s.aspects[0];
    let p = &task.preferences[0];
    let mut ep = episode(&s, EnvConfig::default());
    let out = ep.step(AgentCall::action(trigger_question(task.aspect, &p.trigger_topics[0]))).unwrap();
    assert_eq!(out.reward, 0.2);
    assert_eq!(out.info.revealed[0].preference_id, p.preference_id);
    assert!(p.implicit_statements.contains(&out.observation));
    assert!(!out.observation.contains(&p.canonical_statement));

    let repeat = ep.step(AgentCall::action(trigger_question(task.aspect, &p.trigger_topics[0]))).unwrap();
    assert_eq!(repeat.observation, messages::TYPE2_REPLY);
    let vague = ep.step(AgentCall::action(format!("Do you have any preferences for the {}?", task.aspect.noun()))).unwrap();
    assert_eq!(vague.observation, messages::TYPE3_REPLY);
    assert_eq!(ep.state().revealed[&p.preference_id].mode, RevealMode::Active);
}

#[test]
fn answers_are_scored_by_label() {
    let s = scenario("22", 8);
    let a = s.aspects[0].aspect;
    let b = s.aspects[1].aspect;
    let cfg = EnvConfig { wrong_choice_penalty: 0.1, ..EnvConfig::default().with_mode(Mode::MultiChoice) };
    let mut ep = episode(&s, cfg);
    let best = ep.step(AgentCall::answer(option_with(&s, a, Label::Best))).unwrap();
    assert_eq!(best.reward, 1.0);
    assert!(best.observation.starts_with("Your chosen options contain the best option!"));
    let correct = ep.step(AgentCall::answer(option_with(&s, b, Label::Correct))).unwrap();
    assert_eq!(correct.reward, 0.8);
    let wrong = ep.step(AgentCall::answer(option_with(&s, b, Label::Wrong))).unwrap();
    assert_eq!(wrong.reward, -0.1);
    assert!(wrong.observation.contains("do not contain any of the best or correct options"));
    let two = ep.step(AgentCall::answer(format!("{} or {}", option_with(&s, a, Label::Best), option_with(&s, b, Label::Best)))).unwrap();
    assert_eq!(two.info.answer_eval.unwrap().status, AnswerStatus::RejectedMultiple);
    assert!(two.observation.contains("each answer should include only one option ID"));
    let none = ep.step(AgentCall::answer("the cheap one")).unwrap();
    assert_eq!(none.info.answer_eval.unwrap().status, AnswerStatus::NoOptionId);
    let unknown = ep.step(AgentCall::answer("Z9")).unwrap();
    assert_eq!(unknown.info.answer_eval.unwrap().status, AnswerStatus::UnknownOption);
    assert_eq!(ep.state().answered[&b].len(), 2);
    assert!(!ep.is_done(), "multi-choice only stops at max_steps");
}

#[test]
fn single_choice_rejects_a_second_answer_for_an_aspect() {
    let s = scenario("22", 8);
    let a = s.aspects[0].aspect;
    let mut ep = episode(&s, EnvConfig::default());
    ep.step(AgentCall::answer(option_with(&s, a, Label::Correct))).unwrap();
    let before = ep.state().answered.clone();
    let out = ep.step(AgentCall::answer(option_with(&s, a, Label::Best))).unwrap();
    assert_eq!(out.observation, messages::repeat_answer(a.id_prefix()));
    assert!(out.observation.contains("You have already recommended an option with the same initial"));
    assert_eq!(out.reward, 0.0);
    assert_eq!(ep.state().answered, before);

    let b = s.aspects[1].aspect;
    let last = ep.step(AgentCall::answer(option_with(&s, b, Label::Best))).unwrap();
    assert!(last.done);
    assert_eq!(last.terminal_reason, Some(TerminalReason::AllAnswered));
    assert!(matches!(ep.step(AgentCall::action("hi")), Err(EngineError::EpisodeDone)));
}

#[test]
fn malformed_calls_are_protocol_errors() {
    let s = scenario("22", 1);
    let mut ep = episode(&s, EnvConfig::default());
    let raw = RawAgentCall { thought: String::new(), choice: "book".into(), content: "H1".into() };
    let out = ep.step(raw).unwrap();
    assert_eq!(out.reward, 0.0);
    assert!(out.info.protocol_error.is_some());
    assert!(out.info.choice.is_none());
    assert_eq!(ep.state().off_topic_counter, 1);
}

#[test]
fn step_penalty_and_scale_apply_to_every_turn() {
    let s = scenario("22", 1);
    let cfg = EnvConfig { step_penalty: 0.05, reward_scale: 2.0, ..Default::default() };
    let mut ep = episode(&s, cfg);
    let out = ep.step(AgentCall::search(search_query(&s.aspects[0]))).unwrap();
    assert!((out.reward - 2.0 * (0.2 - 0.05)).abs() < 1e-12);
    let out = ep.step(AgentCall::action(CHATTER_LINE)).unwrap();
    assert!((out.reward + 0.1).abs() < 1e-12);
}

/// Plays a fixed mixed script and returns the serialized log.
fn scripted_run(s: &Arc<Scenario>, seed: u64) -> (Episode, Vec<f64>) {
    let mut ep = episode(s, EnvConfig::default().with_seed(seed));
    let mut rewards = Vec::new();
    let mut calls: Vec<AgentCall> = Vec::new();
    for task in &s.aspects {
        calls.push(AgentCall::search(search_query(task)));
        calls.push(AgentCall::action(CHATTER_LINE));
        calls.push(AgentCall::action(trigger_question(task.aspect, &task.preferences[0].trigger_topics[0])));
        calls.push(AgentCall::answer(task.options[0].option_id.to_string()));
    }
    for c in calls {
        if ep.is_done() {
            break;
        }
        rewards.push(ep.step(c).unwrap().reward);
    }
    (ep, rewards)
}

#[test]
fn runs_are_deterministic_and_rewards_conserved() {
    let s = scenario("233", 12);
    let (a, rewards) = scripted_run(&s, 3);
    let (b, _) = scripted_run(&s, 3);
    assert_eq!(a.log().to_jsonl(), b.log().to_jsonl());
    let ledger: f64 = rewards.iter().sum();
    assert!((ledger - a.state().total_reward).abs() < 1e-12);
    assert!((ledger - a.log().total_reward()).abs() < 1e-12);
    for t in &a.log().turns {
        assert!((t.reward - a.config().reward_scale * t.component_sum()).abs() < 1e-12);
    }
}

#[test]
fn restore_rebuilds_identical_state() {
    let s = scenario("233", 12);
    let (a, _) = scripted_run(&s, 3);
    let b = Episode::restore(
        s.clone(),
        a.config().clone(),
        Arc::new(RuleBased::builtin()),
        a.log().turns.clone(),
        a.log().terminal_reason,
    )
    .unwrap();
    assert_eq!(a.state(), b.state());
    assert_eq!(a.dialogue(), b.dialogue());
}

#[test]
fn observations_never_leak_labels() {
    let catalog = PreferenceCatalog::builtin();
    for seed in 0..30 {
        let s = Arc::new(sample_scenario(&catalog, &"334".parse().unwrap(), seed).unwrap());
        let reasons: Vec<&str> = s.aspects.iter().flat_map(|a| a.options.iter().map(|o| o.label_reason.as_str())).collect();
        let cfg = EnvConfig { max_steps: 60, mode: Mode::MultiChoice, ..Default::default() };
        let mut ep = episode(&s, cfg.with_seed(seed));
        let mut outs = vec![ep.initial_observation().to_string()];
        for task in &s.aspects {
            outs.push(ep.step(AgentCall::search(search_query(task))).unwrap().observation);
            for p in &task.preferences {
                outs.push(ep.step(AgentCall::action(trigger_question(task.aspect, &p.trigger_topics[0]))).unwrap().observation);
            }
            for o in task.options.iter().take(4) {
                outs.push(ep.step(AgentCall::answer(o.option_id.to_string())).unwrap().observation);
            }
        }
        for o in &outs {
            let lower = o.to_lowercase();
            for banned in ["suitable", "not-suitable", "noise"] {
                assert!(!lower.contains(banned), "{banned} in {o}");
            }
            for r in &reasons {
                assert!(!o.contains(r), "label reason `{r}` leaked");
            }
        }
    }
}

#[test]
fn max_steps_terminates_any_agent() {
    let s = scenario("22", 1);
    let mut ep = episode(&s, EnvConfig { max_steps: 7, ..EnvConfig::default().with_mode(Mode::MultiChoice) });
    let mut n = 0;
    while !ep.is_done() {
        let c = if n % 2 == 0 { Choice::Search } else { Choice::Answer };
        ep.step(AgentCall::new(c, "H1")).unwrap();
        n += 1;
    }
    assert_eq!(n, 7);
    assert_eq!(ep.state().terminal_reason, Some(TerminalReason::MaxSteps));
}

#[test]
fn unrewarded_turns_score_positive_zero() {
    let s = scenario("22", 4);
    let mut ep = episode(&s, EnvConfig::default());
    let out = ep.step(AgentCall::search("hotels")).unwrap();
    assert!(out.reward == 0.0 && out.reward.is_sign_positive());
    assert!(serde_json::to_string(&out).unwrap().contains("\"reward\":0.0"));
}
