use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::board::Board;
use crate::episode::{CheckCount, EpisodeOutcome, EpisodeParams, EpisodeTracker};
use crate::error::{GameError, Result};
use crate::game::{GameState, MoveRecord, Owner};
use crate::ledger::{
    check_claim_effect, check_critical_bound, check_deficit_step, check_first_increase, check_free_edge_supply,
    check_half_star_deficit, decompose_turn, LedgerWriter, TurnLedger, TurnRewind,
};
use crate::strategy::{BreakerPlayer, MakerPlayer, StrategyConfig, StrategyKind};

use super::config::{EpisodeSpec, RunConfig};

/// Relative tolerance of the ledger identity.
pub const LEDGER_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Winner {
    Maker,
    Breaker,
}

/// Names of the per-match assertion counters.
pub mod check {
    pub const LEDGER_IDENTITY: &str = "ledger_identity";
    pub const RESTDIFF_NONNEG: &str = "restdiff_nonnegative";
    pub const DEFICIT_STEP: &str = "deficit_step";
    pub const CLAIM_FACTORS: &str = "claim_factors";
    pub const FIRST_INCREASE: &str = "first_increase";
    pub const CRITICAL_BOUND: &str = "critical_bound";
    pub const FREE_EDGE_SUPPLY: &str = "free_edge_supply";
    pub const HALF_STAR_DEFICIT: &str = "half_star_deficit";
    pub const EPISODE_END: &str = "episode_end";
    pub const CRIT_STACKING: &str = "crit_stacking";
    pub const CRIT_INCREASE: &str = "crit_increase";
    pub const BREAKER_WINS: &str = "breaker_wins";
    pub const POT_BELOW_2N: &str = "pot_below_2n";
    pub const NO_HALF_STAR: &str = "no_half_star";

    pub const LEDGER: [&str; 2] = [LEDGER_IDENTITY, RESTDIFF_NONNEG];
    pub const LEMMAS: [&str; 6] =
        [DEFICIT_STEP, CLAIM_FACTORS, FIRST_INCREASE, CRITICAL_BOUND, FREE_EDGE_SUPPLY, HALF_STAR_DEFICIT];
    pub const EPISODES: [&str; 3] = [EPISODE_END, CRIT_STACKING, CRIT_INCREASE];
    pub const THEOREMS: [&str; 3] = [BREAKER_WINS, POT_BELOW_2N, NO_HALF_STAR];
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub config: RunConfig,
    pub q: u32,
    pub mu: f64,
    pub p0: f64,
    pub winner: Winner,
    /// Maker claims made.
    pub turns: u32,
    pub triangle: Option<[u32; 3]>,
    pub max_pot: f64,
    pub max_pot_over_n: f64,
    pub max_maker_degree: u32,
    pub isolation_turns: u32,
    pub critical_turns: u32,
    pub shortfall_turns: u32,
    pub episode_params: Option<EpisodeParams>,
    pub c: Option<u32>,
    pub episodes: Vec<EpisodeOutcome>,
    pub checks: BTreeMap<String, CheckCount>,
    /// Excluded from JSON so that records of identical runs are byte-identical.
    #[serde(skip)]
    pub wall_time: Duration,
}

impl MatchRecord {
    pub fn failures(&self) -> u64 {
        self.checks.values().map(|c| c.failed).sum()
    }

    /// True when every enabled suite has zero failures.
    pub fn passed(&self) -> bool {
        let flags = self.config.checks;
        let suites: [(bool, &[&str]); 4] = [
            (flags.ledger, &check::LEDGER),
            (flags.lemmas, &check::LEMMAS),
            (flags.episodes, &check::EPISODES),
            (flags.theorems, &check::THEOREMS),
        ];
        suites
            .iter()
            .filter(|(on, _)| *on)
            .flat_map(|(_, names)| names.iter())
            .all(|name| self.checks.get(*name).is_none_or(|c| c.failed == 0))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serializes")
    }
}

/// Where a match streams its per-turn output.
#[derive(Default)]
pub struct MatchSinks<'a> {
    pub ledger: Option<&'a mut dyn Write>,
    pub moves: Option<&'a mut dyn Write>,
}

fn io_err(e: std::io::Error) -> GameError {
    GameError::Internal(format!("I/O: {e}"))
}

/// Plays one game with the files named in the configuration.
pub fn run_match(config: &RunConfig) -> Result<MatchRecord> {
    let open = |p: &std::path::PathBuf| File::create(p).map(BufWriter::new).map_err(io_err);
    let mut ledger = config.ledger.as_ref().map(open).transpose()?;
    let mut moves = config.moves.as_ref().map(open).transpose()?;
    let sinks = MatchSinks {
        ledger: ledger.as_mut().map(|w| w as &mut dyn Write),
        moves: moves.as_mut().map(|w| w as &mut dyn Write),
    };
    let record = run_match_with(config, sinks)?;
    if let Some(path) = &config.out {
        std::fs::write(path, record.to_json() + "\n").map_err(io_err)?;
    }
    Ok(record)
}

struct Counters(BTreeMap<String, CheckCount>);

impl Counters {
    fn record(&mut self, name: &str, ok: bool) -> bool {
        self.0.entry(name.to_string()).or_default().record(ok);
        ok
    }
}

/// Plays one game, streaming the ledger CSV and move log to the given sinks.
pub fn run_match_with(config: &RunConfig, sinks: MatchSinks<'_>) -> Result<MatchRecord> {
    let started = Instant::now();
    let params = config.resolve()?;
    let (n, q) = (params.n, params.q);
    let mut board = Board::new(params.clone())?;
    board.record_claims(true);
    let mut maker = MakerPlayer::new(&StrategyConfig { seed: config.seed, ..config.maker })?;
    let breaker = BreakerPlayer::new(&config.breaker)?;
    let potential_breaker = config.breaker.kind == StrategyKind::BreakerPotential;

    let mut tracker = match (config.episode, potential_breaker && config.checks.episodes) {
        (_, false) | (EpisodeSpec::Off, _) => None,
        (EpisodeSpec::Auto, true) => EpisodeTracker::with_defaults(&params)?,
        (EpisodeSpec::Manual(p), true) => Some(EpisodeTracker::new(&params, p)?),
    };
    let eta = tracker.as_ref().map_or(0.0, |t| t.params.eta);
    let lemmas = config.checks.lemmas && potential_breaker;
    // the single-claim factor bounds need p0 < 1
    let factor_regime = params.p0 < 1.0;

    let mut ledger_out = sinks.ledger.map(LedgerWriter::new);
    let mut moves_out = sinks.moves;
    if let Some(w) = moves_out.as_mut() {
        writeln!(w, "turn,player,u,v").map_err(io_err)?;
    }

    let mut counters = Counters(BTreeMap::new());
    let nf = n as f64;
    let mut max_pot = board.total();
    let mut max_before_turn = max_pot;
    let (mut isolation, mut critical, mut shortfall) = (0, 0, 0);

    let winner = loop {
        if board.state().unclaimed_count() == 0 {
            break Winner::Breaker;
        }
        let pot_before = board.total();
        let m = maker.choose(&board)?;
        board.claim(Owner::Maker, m)?;
        let turn = board.state().turn();
        if board.state().has_maker_triangle().is_some() {
            log_moves(&mut moves_out, &board, turn, Owner::Maker, &[m])?;
            break Winner::Maker;
        }
        let plan = if board.state().unclaimed_count() > 0 { Some(breaker.respond(&mut board, m)?) } else { None };
        let effects = board.take_journal();
        log_moves(&mut moves_out, &board, turn, Owner::Maker, &[m])?;
        let Some(plan) = plan else { continue };
        log_moves(&mut moves_out, &board, turn, Owner::Breaker, &plan.claims().collect::<Vec<_>>())?;
        let pot_after = board.total();
        max_pot = max_pot.max(pot_after);
        isolation += plan.isolation_turn as u32;
        shortfall += (plan.shortfall > 0) as u32;

        let ledger: TurnLedger<f64> =
            decompose_turn(&TurnRewind::new(board.state(), &plan)?, &params, eta, &plan, pot_before, pot_after)?;
        critical += ledger.critical as u32;
        let mut bad = false;
        if config.checks.ledger {
            bad |= !counters.record(check::LEDGER_IDENTITY, ledger.identity_holds(LEDGER_TOLERANCE));
            bad |= !counters.record(check::RESTDIFF_NONNEG, ledger.restdiff >= -LEDGER_TOLERANCE * pot_before.max(1.0));
        }
        if config.checks.lemmas {
            for fx in &effects {
                bad |= !counters.record(check::DEFICIT_STEP, check_deficit_step(fx, &params));
                if factor_regime {
                    bad |= !counters.record(check::CLAIM_FACTORS, check_claim_effect(fx, &params));
                }
                if potential_breaker && fx.player == Owner::Maker {
                    for end in &fx.ends {
                        let (dm, db) = (end.deg_m_before, end.deg_b_before);
                        if let Some(ok) = check_half_star_deficit(&params, dm, db) {
                            bad |= !counters.record(check::HALF_STAR_DEFICIT, ok);
                        }
                    }
                }
            }
        }
        if lemmas {
            bad |= !counters
                .record(check::FREE_EDGE_SUPPLY, check_free_edge_supply(max_before_turn < 2.0 * nf, ledger.nominal_f));
            if ledger.regular {
                bad |= !counters.record(check::FIRST_INCREASE, check_first_increase(&ledger, &params));
                if ledger.critical && ledger.f >= 2 {
                    bad |= !counters.record(check::CRITICAL_BOUND, check_critical_bound(&board, eta, &ledger));
                }
            }
        }
        max_before_turn = max_before_turn.max(pot_after);

        let mut episode_id = None;
        let mut label = String::new();
        if let Some(t) = tracker.as_mut() {
            let before = t.violations;
            let ev = t.update(&ledger, &effects, &board);
            episode_id = ev.episode_id;
            if let Some(ok) = ev.crit_stacking {
                counters.record(check::CRIT_STACKING, ok);
                bad |= !ok;
            }
            if let Some(ok) = ev.crit_increase {
                counters.record(check::CRIT_INCREASE, ok);
                bad |= !ok;
            }
            if ev.events.contains(&"tstar") {
                counters.record(check::EPISODE_END, t.violations == before);
            }
            label = ev.label();
        }
        if bad && !label.contains("violation") {
            if !label.is_empty() {
                label.push('|');
            }
            label.push_str("violation");
        }
        if let Some(w) = ledger_out.as_mut() {
            w.write(&ledger.row(episode_id, &label)).map_err(io_err)?;
        }
    };
    if let Some(w) = ledger_out {
        w.finish().map_err(io_err)?;
    }
    if let Some(w) = moves_out {
        w.flush().map_err(io_err)?;
    }
    if let Some(t) = tracker.as_mut() {
        t.finish();
    }
    let (deg_m, _) = board.state().degrees();
    let max_maker_degree = deg_m.iter().copied().max().unwrap_or(0);
    if config.checks.theorems {
        counters.record(check::BREAKER_WINS, winner == Winner::Breaker);
        counters.record(check::POT_BELOW_2N, max_pot < 2.0 * nf);
        counters.record(check::NO_HALF_STAR, max_maker_degree < q.div_ceil(2));
    }
    Ok(MatchRecord {
        config: config.clone(),
        q,
        mu: params.mu,
        p0: params.p0,
        winner,
        turns: board.state().turn(),
        triangle: board.state().has_maker_triangle().map(|t| t.map(|v| v.0)),
        max_pot,
        max_pot_over_n: max_pot / nf,
        max_maker_degree,
        isolation_turns: isolation,
        critical_turns: critical,
        shortfall_turns: shortfall,
        episode_params: tracker.as_ref().map(|t| t.params),
        c: tracker.as_ref().map(|t| t.c),
        episodes: tracker.map(|t| t.outcomes).unwrap_or_default(),
        checks: counters.0,
        wall_time: started.elapsed(),
    })
}

/// Position after `turns` full turns of the configured players (or the end
/// of the game, whichever comes first).
pub fn play_position(config: &RunConfig, turns: u32) -> Result<GameState> {
    let params = config.resolve()?;
    let mut board = Board::new(params)?;
    let mut maker = MakerPlayer::new(&StrategyConfig { seed: config.seed, ..config.maker })?;
    let breaker = BreakerPlayer::new(&config.breaker)?;
    while board.state().turn() < turns && !board.state().is_over() {
        let m = maker.choose(&board)?;
        board.claim(Owner::Maker, m)?;
        if !board.state().is_over() {
            breaker.respond(&mut board, m)?;
        }
    }
    Ok(board.state().clone())
}

fn log_moves(
    out: &mut Option<&mut dyn Write>,
    board: &Board<f64>,
    turn: u32,
    player: Owner,
    edges: &[crate::game::EdgeId],
) -> Result<()> {
    let Some(w) = out.as_mut() else { return Ok(()) };
    for &e in edges {
        let (u, v) = board.state().endpoints(e);
        writeln!(w, "{}", MoveRecord { turn, player, u, v }).map_err(io_err)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::BiasSpec;

    #[test]
    fn small_match_is_consistent() {
        let cfg = RunConfig::new(60, BiasSpec::Beta(3.0)).with_seed(3);
        let r = run_match_with(&cfg, MatchSinks::default()).unwrap();
        assert_eq!(r.q, 14);
        assert!(r.passed(), "{:?}", r.checks);
        assert!(r.checks[check::LEDGER_IDENTITY].checked > 0);
        assert!(r.turns > 0);
    }

    #[test]
    fn ce_star_beats_weak_breaker() {
        let cfg = RunConfig::new(100, BiasSpec::Q(3)).with_players(StrategyKind::MakerCeStar, StrategyKind::BreakerCe);
        let r = run_match_with(&cfg, MatchSinks::default()).unwrap();
        assert_eq!(r.winner, Winner::Maker);
        assert!(r.triangle.is_some());
    }

    #[test]
    fn move_log_replays_to_same_state() {
        let cfg = RunConfig::new(40, BiasSpec::Q(4)).with_seed(11);
        let mut log = Vec::new();
        let r = run_match_with(&cfg, MatchSinks { ledger: None, moves: Some(&mut log) }).unwrap();
        let moves = crate::game::read_move_log(&log[..]).unwrap();
        let state = crate::game::replay(40, 4, &moves).unwrap();
        assert_eq!(state.turn(), r.turns);
        assert_eq!(state.has_maker_triangle().is_some(), r.winner == Winner::Maker);
    }

    #[test]
    fn json_omits_wall_time() {
        let cfg = RunConfig::new(30, BiasSpec::Q(3));
        let r = run_match_with(&cfg, MatchSinks::default()).unwrap();
        let json = r.to_json();
        assert!(!json.contains("wall_time"));
        let back: MatchRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_json(), json);
    }
}
