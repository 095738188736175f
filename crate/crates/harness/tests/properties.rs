use cave_harness::agents::AgentSpec;
use cave_harness::trials::{Condition, TrialMatrix, STANDARD_CONDITIONS};
use cave_harness::{parse_log, run_trials, summarize, verify_replay, write_records, PriceTable};
use proptest::prelude::*;

fn matrix(cond: (u32, u32, u32), seeds: Vec<u64>) -> TrialMatrix {
    let (grid_size, num_pits, num_wumpus) = cond;
    TrialMatrix { conditions: vec![Condition { grid_size, num_pits, num_wumpus, seeds }], step_limit: 50 }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_records_replay_and_keep_flags(
        cond in prop::sample::select(STANDARD_CONDITIONS.to_vec()),
        seeds in prop::collection::btree_set(any::<u64>(), 1..8),
        agent_seed in any::<u64>(),
    ) {
        let m = matrix(cond, seeds.into_iter().collect());
        let records = run_trials(&m, &AgentSpec::Random { seed: agent_seed }, 2).unwrap();
        for r in &records {
            let states = verify_replay(r).unwrap();
            prop_assert_eq!(states.last().unwrap().score, r.score);
            prop_assert_eq!((r.success, r.wumpus_killed), r.derived_flags());
            prop_assert!(r.steps <= r.config.step_limit);
        }
        let s = summarize(&records, &PriceTable::default()).unwrap();
        let o = s.outcomes.unwrap();
        prop_assert!((0.0..=100.0).contains(&o.success_rate));
        prop_assert!((0.0..=100.0).contains(&o.kill_rate));
        prop_assert!(o.min_steps as f64 <= o.avg_steps && o.avg_steps <= o.max_steps as f64);
    }

    #[test]
    fn log_round_trip(cond in prop::sample::select(STANDARD_CONDITIONS.to_vec()), seed in any::<u64>()) {
        let records = run_trials(&matrix(cond, vec![seed, seed ^ 1]), &AgentSpec::Oracle, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.ndjson");
        write_records(&path, &records).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        prop_assert_eq!(text.lines().count(), 2);
        prop_assert_eq!(parse_log(text.as_bytes()).unwrap(), records);
    }
}

#[test]
fn summary_tokens_equal_round_usage() {
    use cave_agent::{CallRole, Exchange, UsageRecord};
    let mut records = run_trials(&TrialMatrix::standard(3, 2), &AgentSpec::Oracle, 4).unwrap();
    // Attach synthetic usage to every round.
    for (i, r) in records.iter_mut().enumerate() {
        for (j, round) in r.rounds.iter_mut().enumerate() {
            let u = UsageRecord::new(10 + i as u64, 3 + j as u64, 0.25);
            round.exchanges.push(Exchange {
                role: CallRole::Actor,
                model: "m".into(),
                messages: Vec::new(),
                response: None,
                usage: Some(u),
                error: None,
            });
            round.usage = u;
        }
    }
    let s = summarize(&records, &PriceTable::default()).unwrap();
    let prompt: u64 = records.iter().flat_map(|r| &r.rounds).map(|r| r.usage.prompt_tokens).sum();
    let completion: u64 = records.iter().flat_map(|r| &r.rounds).map(|r| r.usage.completion_tokens).sum();
    assert_eq!(s.total_prompt_tokens, prompt);
    assert_eq!(s.total_completion_tokens, completion);
    assert_eq!(s.total_tokens, prompt + completion);
    assert!((s.avg_latency_per_step - 0.25).abs() < 1e-12);
}
