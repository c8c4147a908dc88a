use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::game::{GameState, NodeId};
use crate::ledger::tech1_grid_failures;
use crate::potential::{
    balance, balance_interpretation_for, bias_for_beta, check_remark_p0, deficit, total_potential, MuMode,
    ParamsHeader, PotentialParams,
};
use crate::solver::{solve_exact, solve_plain, verify_breaker_strategy_exhaustive, SolveLimits, SolveOutcome};
use crate::strategy::{StrategyConfig, StrategyKind};

use super::config::{BiasSpec, RunConfig};
use super::run::{run_match_with, MatchSinks};
use super::seed::match_seed;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyItem {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub counterexamples: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct VerifyReport {
    pub items: Vec<VerifyItem>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.items.iter().all(|i| i.passed)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for i in &self.items {
            let _ = writeln!(out, "{} {}: {}", if i.passed { "PASS" } else { "FAIL" }, i.name, i.detail);
            for c in i.counterexamples.iter().take(10) {
                let _ = writeln!(out, "    counterexample: {c}");
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerifyOptions {
    /// Board size of the simulated lemma suite.
    pub sim_n: u32,
    /// Games per Maker strategy in the simulated suite.
    pub sim_seeds: u32,
    pub seed: u64,
    pub solver: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { sim_n: 500, sim_seeds: 5, seed: 0, solver: true }
    }
}

fn item(name: &str, counterexamples: Vec<String>, detail: String) -> VerifyItem {
    VerifyItem { name: name.into(), passed: counterexamples.is_empty(), detail, counterexamples }
}

/// POT₀ = n, every balance equals p₀ and every deficit is 0 on a fresh board.
pub fn fresh_state_check(ns: &[u32]) -> Result<VerifyItem> {
    let mut bad = Vec::new();
    for &n in ns {
        let params = PotentialParams::<f64>::from_beta(n, 3.0, 0.05, MuMode::Fixed(1.05))?;
        let state = GameState::new(n, params.q)?;
        let pot = total_potential(&state, &params);
        if ((pot - n as f64) / n as f64).abs() > 1e-12 {
            bad.push(format!("n={n}: POT0 = {pot}"));
        }
        for v in 0..n {
            let b = balance(&state, &params, NodeId(v))?;
            let d = deficit(&state, &params, NodeId(v));
            if (b - params.p0).abs() > 1e-12 * params.p0 || d != 0.0 {
                bad.push(format!("n={n} v={v}: bal = {b}, p0 = {}, d = {d}", params.p0));
                break;
            }
        }
    }
    Ok(item("fresh_state", bad, format!("n in {ns:?}")))
}

/// Samples `(β, δ)` with `β > 8/3` and `δ < 1 − 8/(3β)` and checks the
/// ordering of the bounds on p₀.
pub fn remark_p0_check(samples: usize, seed: u64) -> VerifyItem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = Vec::new();
    for _ in 0..samples {
        let beta = rng.gen_range(8.0 / 3.0 + 1e-3..30.0);
        let delta = rng.gen_range(1e-4..1.0 - 8.0 / (3.0 * beta));
        if !check_remark_p0(beta, delta) {
            bad.push(format!("beta={beta}, delta={delta}"));
        }
    }
    item("remark_p0", bad, format!("{samples} sampled (beta, delta)"))
}

pub fn tech_inequality_check() -> VerifyItem {
    let bad = tech1_grid_failures().into_iter().map(|(mu, q, x)| format!("mu={mu}, q={q}, x={x}")).collect();
    item("tech_inequality", bad, "mu in {1.01,1.1,1.5,2}, q in {5,50,500}, x in [1,100] step 0.5".into())
}

/// Plays the potential Breaker against every Maker strategy with all
/// per-turn checks enabled.
pub fn lemma_simulation(n: u32, seeds: u32, master: u64) -> Result<VerifyItem> {
    let mut bad = Vec::new();
    let (mut turns, mut checked) = (0u64, 0u64);
    for (k, maker) in StrategyKind::MAKERS.into_iter().enumerate() {
        for rep in 0..seeds {
            let seed = match_seed(master, k as u64, rep as u64);
            let cfg = RunConfig::new(n, BiasSpec::Beta(3.0))
                .with_players(maker, StrategyKind::BreakerPotential)
                .with_seed(seed);
            let r = run_match_with(&cfg, MatchSinks::default())?;
            turns += r.turns as u64;
            for (name, c) in &r.checks {
                checked += c.checked;
                if c.failed > 0 {
                    bad.push(format!("{maker} seed={seed}: {name} failed {}/{}", c.failed, c.checked));
                }
            }
        }
    }
    Ok(item(
        "lemma_simulation",
        bad,
        format!("n={n}, {} games, {turns} turns, {checked} assertions", seeds * StrategyKind::MAKERS.len() as u32),
    ))
}

/// Relative gap between `B_v/A′` and the balance of a fresh node.
pub fn interpretation_gap(n: u32) -> Result<f64> {
    let params = PotentialParams::<f64>::new(n, bias_for_beta(n, 3.0), 0.05, MuMode::Fixed(1.05))?;
    let row = balance_interpretation_for(&params, 0, 0, 0)?;
    Ok((row.ratio / row.balance - 1.0).abs())
}

pub fn interpretation_check() -> Result<VerifyItem> {
    let small = interpretation_gap(10_000)?;
    let large = interpretation_gap(1_000_000)?;
    let mut bad = Vec::new();
    if large >= small {
        bad.push(format!("gap does not shrink: {small:.3e} at 1e4, {large:.3e} at 1e6"));
    }
    if large >= 0.02 {
        bad.push(format!("gap {large:.3e} at n = 1e6 is not below 0.02"));
    }
    Ok(item("balance_interpretation", bad, format!("|ratio/bal - 1| = {small:.4e} (n=1e4), {large:.4e} (n=1e6)")))
}

/// Exact results on tiny boards, cross-checked against a plain search and
/// against exhaustive play of the deterministic Breaker strategies.
pub fn solver_check() -> Result<VerifyItem> {
    let mut bad = Vec::new();
    let mut notes = Vec::new();
    for (n, q, want) in [(4, 1, SolveOutcome::Breaker), (5, 1, SolveOutcome::Maker)] {
        let exact = solve_exact(n, q, SolveLimits::default())?.winner;
        let plain = solve_plain(n, q)?;
        if exact != want || plain != want {
            bad.push(format!("({n},{q}): exact {exact:?}, plain {plain:?}, expected {want:?}"));
        }
        for kind in [StrategyKind::BreakerPotential, StrategyKind::BreakerCe] {
            let holds = verify_breaker_strategy_exhaustive(n, q, &StrategyConfig::new(kind), SolveLimits::default())?;
            if holds == Some(true) && exact != SolveOutcome::Breaker {
                bad.push(format!("({n},{q}): {kind} never loses but the solver says {exact:?}"));
            }
            notes.push(format!("({n},{q}) {kind}: {holds:?}"));
        }
    }
    let cert = verify_breaker_strategy_exhaustive(
        6,
        4,
        &StrategyConfig::new(StrategyKind::BreakerCe),
        SolveLimits::default(),
    )?;
    if cert != Some(true) {
        bad.push(format!("(6,4) CE Breaker: {cert:?}"));
    }
    Ok(item("solver", bad, notes.join("; ")))
}

/// Runs every suite.
pub fn verify(opts: &VerifyOptions) -> Result<VerifyReport> {
    let mut items = vec![
        fresh_state_check(&[10, 100, 2000])?,
        remark_p0_check(50, opts.seed),
        tech_inequality_check(),
        interpretation_check()?,
        lemma_simulation(opts.sim_n, opts.sim_seeds, opts.seed)?,
    ];
    if opts.solver {
        items.push(solver_check()?);
    }
    Ok(VerifyReport { items })
}

/// Balance interpretation of every node of a position.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Snapshot {
    pub header: ParamsHeader,
    pub turn: u32,
    pub nodes: Vec<crate::potential::BalanceInterpretation>,
    /// Nodes outside the regime where the interpretation is defined.
    pub skipped: Vec<(u32, String)>,
}

pub fn interpret(state: &GameState, params: &PotentialParams<f64>) -> Snapshot {
    let mut nodes = Vec::new();
    let mut skipped = Vec::new();
    for v in 0..state.n() {
        match balance_interpretation_for(params, v, state.deg_m(NodeId(v)), state.deg_b(NodeId(v))) {
            Ok(row) => nodes.push(row),
            Err(e) => skipped.push((v, e.to_string())),
        }
    }
    Snapshot { header: params.header(), turn: state.turn(), nodes, skipped }
}
