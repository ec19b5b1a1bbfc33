//! Metric definitions on hand-built logs with hand-computed expectations.

use tripgym::domain::{
    AgentCall, AnswerEval, AnswerStatus, AspectKind, Composition, EnvConfig, EpisodeLog, Label, Mode,
    OptionId, Reveal, RevealMode, RewardComponent, RewardKind, SearchJudgement, SearchOutcome, Tier, TurnRecord,
    UtteranceClass, UtteranceKind,
};
use tripgym::metrics::{aggregate, score_episode, EpisodeCounts, GroupBy, TimingWeight};

use AspectKind::{Flight, Hotel};

fn blank(i: u32, call: AgentCall) -> TurnRecord {
    TurnRecord {
        turn_index: i,
        choice: Some(call.choice),
        call: call.into(),
        judgement: None,
        search_outcome: None,
        classification: None,
        answer_eval: None,
        revealed: vec![],
        observation: String::new(),
        reward: 0.0,
        components: vec![],
        protocol_error: None,
    }
}

fn answer(i: u32, aspect: AspectKind, label: Label) -> TurnRecord {
    let (kind, value) = match label {
        Label::Best => (RewardKind::ChoiceBest, 1.0),
        Label::Correct => (RewardKind::ChoiceCorrect, 0.8),
        _ => (RewardKind::ChoiceBest, 0.0),
    };
    let id = OptionId::new(aspect, i + 1);
    let mut t = blank(i, AgentCall::answer(id.to_string()));
    t.answer_eval = Some(AnswerEval {
        status: AnswerStatus::Recorded,
        parsed_ids: vec![id.to_string()],
        option_id: Some(id),
        aspect: Some(aspect),
        label: Some(label),
    });
    if value > 0.0 {
        t.components.push(RewardComponent { kind, value });
    }
    t.reward = value;
    t
}

fn search(i: u32, aligned: bool) -> TurnRecord {
    let mut t = blank(i, AgentCall::search("q"));
    t.judgement = Some(if aligned { SearchJudgement::aligned(Flight) } else { SearchJudgement::not_aligned() });
    t.search_outcome = Some(SearchOutcome::Listing);
    t
}

fn system_error(i: u32) -> TurnRecord {
    let mut t = blank(i, AgentCall::search("q"));
    t.search_outcome = Some(SearchOutcome::SystemError);
    t
}

fn action(i: u32, kind: UtteranceKind, reveal: Option<(&str, RevealMode)>) -> TurnRecord {
    let mut t = blank(i, AgentCall::action("u"));
    t.classification = Some(UtteranceClass::of(kind));
    if let Some((id, mode)) = reveal {
        t.revealed.push(Reveal { preference_id: id.into(), mode });
    }
    t
}

fn log(id: &str, tier: Tier, comp: &[u8], aspects: Vec<AspectKind>, turns: Vec<TurnRecord>) -> EpisodeLog {
    let composition = Composition::new(comp.to_vec());
    let preference_ids = (0..composition.total()).map(|n| format!("p{n}")).collect();
    EpisodeLog {
        scenario_id: id.into(),
        tier,
        composition,
        aspects,
        preference_ids,
        config: EnvConfig::default(),
        turns,
        terminal_reason: None,
    }
}

fn counts(l: &EpisodeLog) -> EpisodeCounts {
    EpisodeCounts::from_log(l, TimingWeight::Reward)
}

fn overall(logs: &[EpisodeLog]) -> tripgym::metrics::MetricsRow {
    let c: Vec<EpisodeCounts> = logs.iter().map(counts).collect();
    aggregate(&c, GroupBy::None).0
}

#[test]
fn no_answers_score_zero() {
    let l = log("e", Tier::Easy, &[2, 2], vec![Flight, Hotel], vec![search(0, true)]);
    assert_eq!(score_episode(&l, Mode::SingleChoice), 0.0);
    assert_eq!(score_episode(&l, Mode::MultiChoice), 0.0);
    let r = overall(&[l]);
    assert_eq!((r.best_exist_rate, r.correct_exist_rate), (0.0, 0.0));
}

#[test]
fn single_choice_takes_first_answer() {
    let l = log(
        "s",
        Tier::Easy,
        &[2, 2],
        vec![Flight, Hotel],
        vec![answer(0, Flight, Label::Correct), answer(1, Hotel, Label::Correct), answer(2, Flight, Label::Best)],
    );
    // Firsts are 0.8 and 0.8; the later best flight only counts in multi-choice.
    assert_eq!(score_episode(&l, Mode::SingleChoice), 0.8);
    assert_eq!(score_episode(&l, Mode::MultiChoice), 0.9);
}

#[test]
fn exist_rates_best_hotel_correct_flight() {
    let l = log(
        "x",
        Tier::Easy,
        &[2, 2],
        vec![Flight, Hotel],
        vec![answer(0, Hotel, Label::Best), answer(1, Flight, Label::Correct)],
    );
    let r = overall(&[l]);
    assert_eq!(r.best_exist_rate, 0.5);
    assert_eq!(r.correct_exist_rate, 1.0);
}

#[test]
fn valid_search_counts_system_errors_as_attempts() {
    let l = log(
        "v",
        Tier::Easy,
        &[2, 2],
        vec![Flight, Hotel],
        vec![search(0, true), search(1, true), system_error(2), search(3, true)],
    );
    let r = overall(&[l]);
    assert_eq!(r.valid_search_rate, 0.75);
    // No action turns at all: reported as 0 and flagged.
    assert_eq!(r.valid_action_rate, 0.0);
    assert!(r.zero_denominators.action_turns);
    assert!(!r.zero_denominators.search_attempts);
}

#[test]
fn elicitation_two_active_one_passive_of_four() {
    let l = log(
        "el",
        Tier::Easy,
        &[2, 2],
        vec![Flight, Hotel],
        vec![
            action(0, UtteranceKind::HeldPreference, Some(("p0", RevealMode::Active))),
            action(1, UtteranceKind::Other, None),
            action(2, UtteranceKind::Vague, Some(("p1", RevealMode::Passive))),
            action(3, UtteranceKind::HeldPreference, Some(("p2", RevealMode::Active))),
        ],
    );
    let r = overall(&[l]);
    assert_eq!(r.active_elicited, 0.5);
    assert_eq!(r.passive_elicited, 0.25);
    assert_eq!(r.valid_action_rate, 0.5);
}

#[test]
fn fully_revealed_partitions_to_one() {
    let turns = (0..4)
        .map(|i| {
            let mode = if i % 2 == 0 { RevealMode::Active } else { RevealMode::Passive };
            action(i, UtteranceKind::HeldPreference, Some((&format!("p{i}"), mode)))
        })
        .collect();
    let r = overall(&[log("all", Tier::Easy, &[2, 2], vec![Flight, Hotel], turns)]);
    assert_eq!(r.active_elicited + r.passive_elicited, 1.0);
}

#[test]
fn weighted_timing_examples() {
    // Best at turn 0 contributes 1.0; correct at turn 1 contributes 0.5 * 0.8.
    let a = log("t0", Tier::Easy, &[2, 2], vec![Flight, Hotel], vec![answer(0, Flight, Label::Best)]);
    assert_eq!(counts(&a).weighted_sum, 1.0);
    let b = log(
        "t1",
        Tier::Easy,
        &[2, 2],
        vec![Flight, Hotel],
        vec![search(0, true), answer(1, Flight, Label::Correct), answer(2, Hotel, Label::Wrong)],
    );
    let c = counts(&b);
    assert!((c.weighted_sum - 0.4).abs() < 1e-15);
    assert_eq!((c.timed_aspects, c.first_index_sum), (1, 1));
    let r = overall(std::slice::from_ref(&b));
    assert_eq!(r.timing.coverage, 0.5);
    assert_eq!(r.timing.mean_first_index, 1.0);
    assert!((r.timing.mean_weighted_score - 0.2).abs() < 1e-15);

    let ind = EpisodeCounts::from_log(&b, TimingWeight::Indicator);
    assert_eq!(ind.weighted_sum, 0.5);
}

/// Four toy logs over two tiers; every row value below is worked by hand.
fn toy_logs() -> Vec<EpisodeLog> {
    vec![
        // easy: 2 aspects, best flight + correct hotel, 1/1 aligned search.
        log(
            "e1",
            Tier::Easy,
            &[2, 2],
            vec![Flight, Hotel],
            vec![search(0, true), answer(1, Flight, Label::Best), answer(2, Hotel, Label::Correct)],
        ),
        // easy: 2 aspects, one wrong answer, 0/1 aligned, one active reveal.
        log(
            "e2",
            Tier::Easy,
            &[2, 2],
            vec![Flight, Hotel],
            vec![
                search(0, false),
                action(1, UtteranceKind::HeldPreference, Some(("p0", RevealMode::Active))),
                answer(2, Flight, Label::Wrong),
            ],
        ),
        // hard: 2 aspects (4+4 prefs), best hotel at turn 0.
        log("h1", Tier::Hard, &[4, 4], vec![Flight, Hotel], vec![answer(0, Hotel, Label::Best)]),
        // hard: 2 aspects, two vague actions and a passive reveal.
        log(
            "h2",
            Tier::Hard,
            &[4, 4],
            vec![Flight, Hotel],
            vec![
                action(0, UtteranceKind::Vague, None),
                action(1, UtteranceKind::Other, Some(("p0", RevealMode::Passive))),
            ],
        ),
    ]
}

#[test]
fn tier_rows_match_hand_computation() {
    let logs = toy_logs();
    let c: Vec<EpisodeCounts> = logs.iter().map(counts).collect();
    let (all, groups) = aggregate(&c, GroupBy::Tier);
    assert_eq!(groups.iter().map(|g| g.group.as_str()).collect::<Vec<_>>(), ["easy", "hard"]);
    let (easy, hard) = (&groups[0], &groups[1]);

    assert_eq!(easy.episodes, 2);
    assert_eq!(easy.best_exist_rate, 1.0 / 4.0);
    assert_eq!(easy.correct_exist_rate, 2.0 / 4.0);
    assert_eq!(easy.score, (0.9 + 0.0) / 2.0);
    assert_eq!(easy.valid_search_rate, 0.5);
    assert_eq!(easy.valid_action_rate, 1.0);
    assert_eq!(easy.active_elicited, 1.0 / 8.0);
    assert_eq!(easy.passive_elicited, 0.0);

    assert_eq!(hard.episodes, 2);
    assert_eq!(hard.best_exist_rate, 1.0 / 4.0);
    assert_eq!(hard.score, (0.5 + 0.0) / 2.0);
    assert_eq!(hard.valid_search_rate, 0.0);
    assert!(hard.zero_denominators.search_attempts);
    assert_eq!(hard.valid_action_rate, 0.0);
    assert_eq!(hard.passive_elicited, 1.0 / 16.0);

    // Micro-averaged overall, not a mean of the two rows.
    assert_eq!(all.active_elicited, 1.0 / 24.0);
    assert_eq!(all.passive_elicited, 1.0 / 24.0);
    assert_eq!(all.valid_action_rate, 1.0 / 3.0);
    assert_eq!(groups.iter().map(|g| g.episodes).sum::<u64>(), logs.len() as u64);
}

#[test]
fn single_group_equals_ungrouped() {
    let logs: Vec<EpisodeLog> = toy_logs().into_iter().filter(|l| l.tier == Tier::Easy).collect();
    let c: Vec<EpisodeCounts> = logs.iter().map(counts).collect();
    let (all, groups) = aggregate(&c, GroupBy::Tier);
    assert_eq!(groups.len(), 1);
    assert_eq!(groups[0].headline(), all.headline());
    assert_eq!(groups[0].timing, all.timing);
}

#[test]
fn composition_groups_partition_the_episodes() {
    let c: Vec<EpisodeCounts> = toy_logs().iter().map(counts).collect();
    let (_, groups) = aggregate(&c, GroupBy::Composition);
    assert_eq!(groups.iter().map(|g| g.group.as_str()).collect::<Vec<_>>(), ["Travel-22", "Travel-44"]);
    assert_eq!(groups.iter().map(|g| g.episodes).sum::<u64>(), 4);
}

#[test]
fn rates_stay_in_bounds() {
    let c: Vec<EpisodeCounts> = toy_logs().iter().map(counts).collect();
    let (all, groups) = aggregate(&c, GroupBy::Tier);
    for row in std::iter::once(&all).chain(&groups) {
        for v in row.headline() {
            assert!((0.0..=1.0).contains(&v), "{v}");
        }
        assert!(row.timing.coverage <= 1.0 && row.timing.mean_weighted_score <= row.score.max(1.0));
    }
}
