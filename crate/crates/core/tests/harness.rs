use proptest::prelude::*;

use trigame::game::{edge_endpoints, edge_index, read_move_log, replay};
use trigame::harness::run::check;
use trigame::harness::{match_seed, run_match_with, sweep, BiasSpec, MatchSinks, RunConfig, SweepConfig, Winner};
use trigame::{EdgeId, MuMode, NodeId, StrategyKind};

#[test]
fn edge_index_follows_lexicographic_order() {
    for n in 2..40u32 {
        let mut next = 0;
        for u in 0..n {
            for v in u + 1..n {
                let e = edge_index(n, NodeId(u), NodeId(v)).unwrap();
                assert_eq!(e, EdgeId(next));
                assert_eq!(edge_index(n, NodeId(v), NodeId(u)).unwrap(), e);
                assert_eq!(edge_endpoints(n, e).unwrap(), (NodeId(u), NodeId(v)));
                next += 1;
            }
        }
        assert!(edge_endpoints(n, EdgeId(next)).is_err());
    }
}

#[test]
fn sweep_records_match_individual_runs() {
    let cfg = SweepConfig {
        n: vec![60],
        q: vec![8, 14],
        makers: vec![StrategyKind::MakerRandom, StrategyKind::MakerGreedyDegree],
        breakers: vec![StrategyKind::BreakerPotential],
        reps: 2,
        seed: 42,
        ..Default::default()
    };
    let result = sweep(&cfg).unwrap();
    assert_eq!(result.records.len(), 8);
    for (i, rec) in result.records.iter().enumerate() {
        let (cell, rep) = (i as u64 / 2, i as u64 % 2);
        assert_eq!(rec.config.seed, match_seed(42, cell, rep));
        let again = run_match_with(&rec.config, MatchSinks::default()).unwrap();
        assert_eq!(again.to_json(), rec.to_json());
    }
    for row in &result.rows {
        let wins = result
            .records
            .iter()
            .filter(|r| r.q == row.q && r.config.maker.kind == row.maker && r.winner == Winner::Breaker)
            .count();
        assert_eq!(row.breaker_wins as usize, wins);
    }
}

#[test]
fn ce_breaker_success_is_monotone_in_bias() {
    // both players are deterministic, so one game per bias suffices
    let n = 200;
    let mut last = false;
    for q in [6, 10, 14, 20, 28, 40] {
        let cfg = RunConfig::new(n, BiasSpec::Q(q)).with_players(StrategyKind::MakerCeStar, StrategyKind::BreakerCe);
        let won = run_match_with(&cfg, MatchSinks::default()).unwrap().winner == Winner::Breaker;
        assert!(won || !last, "Breaker won at a smaller bias but lost at q = {q}");
        last = won;
    }
    assert!(last, "CE Breaker should win at q = 40 > 2 sqrt(200)");
}

#[test]
fn run_config_round_trips_through_json() {
    let cfg = RunConfig::new(300, BiasSpec::Beta(3.5))
        .with_players(StrategyKind::MakerMaxPotential, StrategyKind::BreakerPotential)
        .with_mu(MuMode::Asymptotic)
        .with_seed(9);
    let text = serde_json::to_string(&cfg).unwrap();
    assert_eq!(RunConfig::from_json(&text).unwrap(), cfg);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn every_game_balances_its_ledger_and_replays(
        n in 12u32..90,
        beta in 2.8f64..5.0,
        maker in 0usize..4,
        seed in any::<u64>(),
    ) {
        let cfg = RunConfig::new(n, BiasSpec::Beta(beta))
            .with_players(StrategyKind::MAKERS[maker], StrategyKind::BreakerPotential)
            .with_seed(seed);
        let mut moves = Vec::new();
        let rec = run_match_with(&cfg, MatchSinks { ledger: None, moves: Some(&mut moves) }).unwrap();
        let log = read_move_log(moves.as_slice()).unwrap();
        // one ledger row per turn that Breaker answered
        let mut answered: Vec<u32> = log.iter().filter(|m| m.player == trigame::Owner::Breaker).map(|m| m.turn).collect();
        answered.dedup();
        for name in check::LEDGER {
            let c = rec.checks[name];
            prop_assert_eq!(c.failed, 0, "{} failed", name);
            prop_assert_eq!(c.checked, answered.len() as u64);
        }
        prop_assert_eq!(log.iter().filter(|m| m.player == trigame::Owner::Maker).count() as u32, rec.turns);
        let state = replay(n, rec.q, &log).unwrap();
        prop_assert_eq!(state.has_maker_triangle().is_some(), rec.winner == Winner::Maker);
        if rec.winner == Winner::Breaker {
            prop_assert_eq!(state.unclaimed_count(), 0);
        }
    }
}
