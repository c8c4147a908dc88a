//! Per-turn decomposition of the potential change and the runtime checks of
//! the single-turn and critical-turn bounds.

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::board::{Board, ClaimEffect};
use crate::error::{GameError, Result};
use crate::game::{EdgeId, GameState, NodeId, Owner};
use crate::potential::PotentialParams;
use crate::scalar::{approx_eq, approx_le, Real};
use crate::strategy::{BreakerTurnPlan, ClosingKind};

/// Read access to node degrees at some point of the game.
pub trait DegreeView {
    fn n(&self) -> u32;
    fn deg_m(&self, v: NodeId) -> u32;
    fn deg_b(&self, v: NodeId) -> u32;
    /// Number of completed Maker claims.
    fn turn(&self) -> u32;
}

impl DegreeView for GameState {
    fn n(&self) -> u32 {
        GameState::n(self)
    }
    fn deg_m(&self, v: NodeId) -> u32 {
        GameState::deg_m(self, v)
    }
    fn deg_b(&self, v: NodeId) -> u32 {
        GameState::deg_b(self, v)
    }
    fn turn(&self) -> u32 {
        GameState::turn(self)
    }
}

/// Degrees as they were before a completed turn, recovered from the state
/// after it without copying the board.
pub struct TurnRewind<'a> {
    state: &'a GameState,
    undo: HashMap<u32, (u32, u32)>,
}

impl<'a> TurnRewind<'a> {
    pub fn new(state: &'a GameState, plan: &BreakerTurnPlan) -> Result<Self> {
        let maker_edge = plan.maker_edge.ok_or_else(|| GameError::Replay("plan has no Maker edge".into()))?;
        let mut undo: HashMap<u32, (u32, u32)> = HashMap::new();
        let mut bump = |e: EdgeId, maker: bool| -> Result<()> {
            let (a, b) = crate::game::edge_endpoints(state.n(), e)?;
            for w in [a, b] {
                let entry = undo.entry(w.0).or_default();
                if maker {
                    entry.0 += 1;
                } else {
                    entry.1 += 1;
                }
            }
            Ok(())
        };
        bump(maker_edge, true)?;
        for e in plan.claims() {
            bump(e, false)?;
        }
        for (&w, &(m, b)) in &undo {
            if state.deg_m(NodeId(w)) < m || state.deg_b(NodeId(w)) < b {
                return Err(GameError::Replay(format!("node {w} has fewer claims than the plan")));
            }
        }
        if state.turn() == 0 {
            return Err(GameError::Replay("no Maker claim to rewind".into()));
        }
        Ok(TurnRewind { state, undo })
    }
}

impl DegreeView for TurnRewind<'_> {
    fn n(&self) -> u32 {
        self.state.n()
    }
    fn deg_m(&self, v: NodeId) -> u32 {
        self.state.deg_m(v) - self.undo.get(&v.0).map_or(0, |d| d.0)
    }
    fn deg_b(&self, v: NodeId) -> u32 {
        self.state.deg_b(v) - self.undo.get(&v.0).map_or(0, |d| d.1)
    }
    fn turn(&self) -> u32 {
        self.state.turn() - 1
    }
}

/// Components at one endpoint of the Maker edge.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NodeLedger<R: Real> {
    pub node: u32,
    pub pot_before: R,
    pub pot_after: R,
    pub inc: R,
    pub dec_free: R,
    pub dec_heads: R,
    pub dec_tails: R,
    pub dec_zero: R,
    pub utt: R,
    pub ott: R,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TurnLedger<R: Real> {
    pub turn: u32,
    pub maker_edge: EdgeId,
    pub mu: u32,
    pub mv: u32,
    pub f: u32,
    pub nominal_f: i64,
    /// All premises of the single-turn bounds hold (no isolation, shortfall or truncation).
    pub regular: bool,
    pub eta: R,
    pub pot_before: R,
    pub pot_after: R,
    /// `pot_{t−1}(e_M)`.
    pub pot_edge_before: R,
    pub inc: R,
    pub dec_free: R,
    pub dec_heads: R,
    pub utt: R,
    pub ott: R,
    pub dec_tails: R,
    pub dec_zero: R,
    pub critdiff: R,
    pub restdiff: R,
    pub critical: bool,
    pub ends: [NodeLedger<R>; 2],
}

#[derive(Clone, Copy, Default)]
struct Acc<R: Real> {
    m: u32,
    b: u32,
    pot0: R,
    inc: R,
    free: R,
    heads: R,
    tails: R,
    zero: R,
}

#[derive(Clone, Copy, PartialEq)]
enum Role {
    Maker,
    Free,
    Head,
    Tail,
}

/// Replays the turn described by `plan` on the degrees in `before` and splits
/// the potential change into its components. `pot_before` and `pot_after` are
/// the measured totals `POT_{t−1}` and `POT_t`.
pub fn decompose_turn<R: Real>(
    before: &impl DegreeView,
    params: &PotentialParams<R>,
    eta: R,
    plan: &BreakerTurnPlan,
    pot_before: R,
    pot_after: R,
) -> Result<TurnLedger<R>> {
    let n = before.n();
    if n != params.n {
        return Err(GameError::Replay(format!("state has n = {n}, params n = {}", params.n)));
    }
    let maker_edge = plan.maker_edge.ok_or_else(|| GameError::Replay("plan has no Maker edge".into()))?;
    let (u, v) = crate::game::edge_endpoints(n, maker_edge)?;
    let mut nodes: HashMap<u32, Acc<R>> = HashMap::new();
    let mut order = Vec::new();

    let mut apply = |a: NodeId, role: Role| -> Result<()> {
        let acc = nodes.entry(a.0).or_insert_with(|| {
            order.push(a.0);
            let (m, b) = (before.deg_m(a), before.deg_b(a));
            Acc { m, b, pot0: params.pot_of(m, b), ..Default::default() }
        });
        if acc.m + acc.b >= n - 1 {
            return Err(GameError::Replay(format!("claim at saturated node {}", a.0)));
        }
        let f0 = params.pot_formula(params.deficit_of(acc.m, acc.b));
        if role == Role::Maker {
            acc.m += 1;
        } else {
            acc.b += 1;
        }
        let f1 = params.pot_formula(params.deficit_of(acc.m, acc.b));
        match role {
            Role::Maker => acc.inc = acc.inc + f1 - f0,
            Role::Free => acc.free = acc.free + f0 - f1,
            Role::Head => acc.heads = acc.heads + f0 - f1,
            Role::Tail => acc.tails = acc.tails + f0 - f1,
        }
        if acc.m + acc.b == n - 1 {
            acc.zero = acc.zero + f1;
        }
        Ok(())
    };

    apply(u, Role::Maker)?;
    apply(v, Role::Maker)?;
    for c in &plan.closing {
        let (a, b) = crate::game::edge_endpoints(n, c.edge)?;
        if (a, b) != (c.head.min(c.tail), c.head.max(c.tail)) {
            return Err(GameError::Replay(format!("closing edge {:?} does not join its head and tail", c.edge)));
        }
        if c.kind == ClosingKind::Isolation {
            apply(a, Role::Tail)?;
            apply(b, Role::Tail)?;
        } else {
            if c.head != u && c.head != v {
                return Err(GameError::Replay(format!("closing head {} is not on the Maker edge", c.head.0)));
            }
            apply(c.head, Role::Head)?;
            apply(c.tail, Role::Tail)?;
        }
    }
    for &e in &plan.free {
        let (a, b) = crate::game::edge_endpoints(n, e)?;
        apply(a, Role::Free)?;
        apply(b, Role::Free)?;
    }

    let zero = R::zero();
    let mut l = TurnLedger {
        turn: before.turn() + 1,
        maker_edge,
        mu: u.0,
        mv: v.0,
        f: plan.f,
        nominal_f: plan.nominal_f,
        regular: plan.regular(),
        eta,
        pot_before,
        pot_after,
        pot_edge_before: zero,
        inc: zero,
        dec_free: zero,
        dec_heads: zero,
        utt: zero,
        ott: zero,
        dec_tails: zero,
        dec_zero: zero,
        critdiff: zero,
        restdiff: zero,
        critical: false,
        ends: [NodeLedger::default(); 2],
    };
    for w in order {
        let a = nodes[&w];
        let utt = a.inc.min(a.heads);
        let ott = (a.heads - a.inc).max(zero);
        l.inc = l.inc + a.inc;
        l.dec_free = l.dec_free + a.free;
        l.dec_heads = l.dec_heads + a.heads;
        l.utt = l.utt + utt;
        l.ott = l.ott + ott;
        l.dec_tails = l.dec_tails + a.tails;
        l.dec_zero = l.dec_zero + a.zero;
        let slot = if w == u.0 {
            0
        } else if w == v.0 {
            1
        } else {
            continue;
        };
        l.ends[slot] = NodeLedger {
            node: w,
            pot_before: a.pot0,
            pot_after: params.pot_of(a.m, a.b),
            inc: a.inc,
            dec_free: a.free,
            dec_heads: a.heads,
            dec_tails: a.tails,
            dec_zero: a.zero,
            utt,
            ott,
        };
    }
    l.pot_edge_before = l.ends[0].pot_before + l.ends[1].pot_before;
    l.critdiff = l.inc - l.utt - (R::one() - eta) * l.dec_free;
    l.restdiff = l.ott + l.dec_tails + eta * l.dec_free + l.dec_zero;
    l.critical = l.critdiff > zero;
    Ok(l)
}

impl<R: Real> TurnLedger<R> {
    /// `POT_t − POT_{t−1} = critdiff − restdiff` within relative `rel`,
    /// scaled by the larger of the two totals.
    pub fn identity_holds(&self, rel: R) -> bool {
        let lhs = self.pot_after - self.pot_before;
        let rhs = self.critdiff - self.restdiff;
        let scale = self.pot_before.abs().max(self.pot_after.abs()).max(R::one());
        (lhs - rhs).abs() <= rel * scale
    }

    pub fn row(&self, episode_id: Option<u32>, event: &str) -> LedgerRow {
        LedgerRow {
            turn: self.turn,
            mu: self.mu,
            mv: self.mv,
            f: self.f,
            pot_before: self.pot_before.as_f64(),
            pot_after: self.pot_after.as_f64(),
            inc: self.inc.as_f64(),
            dec_free: self.dec_free.as_f64(),
            utt: self.utt.as_f64(),
            ott: self.ott.as_f64(),
            dec_tails: self.dec_tails.as_f64(),
            dec_zero: self.dec_zero.as_f64(),
            critdiff: self.critdiff.as_f64(),
            restdiff: self.restdiff.as_f64(),
            critical: self.critical,
            episode_id,
            event: event.to_string(),
        }
    }
}

/// One line of the ledger CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub turn: u32,
    pub mu: u32,
    pub mv: u32,
    pub f: u32,
    pub pot_before: f64,
    pub pot_after: f64,
    pub inc: f64,
    pub dec_free: f64,
    pub utt: f64,
    pub ott: f64,
    pub dec_tails: f64,
    pub dec_zero: f64,
    pub critdiff: f64,
    pub restdiff: f64,
    pub critical: bool,
    pub episode_id: Option<u32>,
    pub event: String,
}

pub struct LedgerWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> LedgerWriter<W> {
    pub fn new(out: W) -> Self {
        LedgerWriter { inner: csv::Writer::from_writer(out) }
    }

    pub fn write(&mut self, row: &LedgerRow) -> std::io::Result<()> {
        self.inner.serialize(row).map_err(std::io::Error::other)
    }

    pub fn finish(mut self) -> std::io::Result<W> {
        self.inner.flush()?;
        self.inner.into_inner().map_err(|e| e.into_error())
    }
}

fn tol<R: Real>() -> R {
    R::loose_tolerance()
}

/// Single-turn bound on the first increase: total (ii) and per endpoint (i).
pub fn check_first_increase<R: Real>(ledger: &TurnLedger<R>, params: &PotentialParams<R>) -> bool {
    let growth =
        (params.ln_mu() * params.p0 * R::of_int(ledger.f as u64) / R::of_int(params.q as u64)).exp() - R::one();
    let total = approx_le(ledger.inc - ledger.utt, growth * ledger.pot_edge_before, tol());
    total && ledger.ends.iter().all(|e| approx_le(e.inc - e.utt, growth * e.pot_before, tol()))
}

/// Critical-turn bound, checked at the maximum-potential unclaimed edge.
pub fn check_critical_bound<R: Real>(board: &Board<R>, eta: R, ledger: &TurnLedger<R>) -> bool {
    let Some(e) = board.max_potential_open_edge() else { return true };
    let p = board.params();
    let bound = p.mu * p.p0 / (R::one() - eta) * ledger.pot_edge_before;
    let top = board.pot_edge(e);
    top < bound || approx_eq(top, bound, tol())
}

/// Deficit change of a Maker claim at one endpoint: `p0(q − m − 1/2)`.
pub fn check_deficit_step<R: Real>(effect: &ClaimEffect<R>, params: &PotentialParams<R>) -> bool {
    if effect.player != Owner::Maker {
        return true;
    }
    effect.ends.iter().all(|c| {
        let m = R::of_int(c.deg_m_before as u64);
        let want = params.p0 * (R::of_int(params.q as u64) - m - R::of(0.5));
        let tol = if std::mem::size_of::<R>() == 4 { R::of(1e-3) } else { R::of(1e-9) };
        approx_eq(c.deficit_after - c.deficit_before, want, tol)
    })
}

/// Factor bounds of a single claim: a Maker claim raises a node by at most μ
/// and the total by at most `(μ−1)·pot(e_M)`; a Breaker claim scales each
/// endpoint by exactly `μ^{−1/q}` (or zeroes it) and lowers the total by at
/// least `(1 − μ^{−1/q})·pot(e_B)`.
pub fn check_claim_effect<R: Real>(effect: &ClaimEffect<R>, params: &PotentialParams<R>) -> bool {
    let t = tol::<R>();
    let before = effect.pot_edge_before();
    let change = effect.total_change();
    match effect.player {
        Owner::Maker => {
            effect.ends.iter().all(|c| approx_le(c.pot_after, params.mu * c.pot_before, t))
                && approx_le(change, (params.mu - R::one()) * before, t)
        }
        Owner::Breaker => {
            let k = params.breaker_factor();
            effect.ends.iter().all(|c| c.pot_after == R::zero() || approx_eq(c.pot_after, k * c.pot_before, t))
                && approx_le((R::one() - k) * before, -change, t)
        }
        Owner::Unclaimed => false,
    }
}

/// A node about to reach Maker-degree `⌈q/2⌉` while unsaturated keeps a
/// deficit of at least `2δn/3`. `None` when the premise does not apply.
pub fn check_half_star_deficit<R: Real>(params: &PotentialParams<R>, deg_m: u32, deg_b: u32) -> Option<bool> {
    let edge = params.q.div_ceil(2).checked_sub(1)?;
    if deg_m != edge || deg_m + deg_b >= params.n - 1 {
        return None;
    }
    let want = R::of(2.0) * params.delta * R::of_int(params.n as u64) / R::of(3.0);
    Some(approx_le(want, params.deficit_of(deg_m, deg_b), tol()))
}

/// If POT stayed below `2n` through the previous turn, Breaker has at least
/// two free edges.
pub fn check_free_edge_supply(pot_stayed_below_2n: bool, nominal_f: i64) -> bool {
    !pot_stayed_below_2n || nominal_f >= 2
}

/// Number of critical turns that bound an episode, using base-2 logarithms.
pub fn compute_c(mu_p0: f64, eta: f64, epsilon: f64, gamma: f64) -> Result<u32> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(GameError::InvalidParams(format!("gamma = {gamma} must lie in (0, 1)")));
    }
    if !((0.0..1.0).contains(&eta) && epsilon >= 0.0 && mu_p0 > 0.0) {
        return Err(GameError::InvalidParams(format!(
            "need 0 <= eta < 1, epsilon >= 0, mu*p0 > 0 (got {eta}, {epsilon}, {mu_p0})"
        )));
    }
    let den = (1.0 - eta).log2() - (1.0 + epsilon).log2() - mu_p0.log2();
    if den <= 0.0 {
        return Err(GameError::InvalidParams(format!(
            "(1-eta)/((1+epsilon)*mu*p0) = {} must exceed 1",
            (1.0 - eta) / ((1.0 + epsilon) * mu_p0)
        )));
    }
    let c = ((1.0 - (1.0 - gamma).log2()) / den).ceil();
    Ok((c as u32).max(1))
}

/// `x(1 − μ^{−1/q}) ≥ 1 − μ^{−x/q}` within 1e−12.
pub fn tech1_check(mu: f64, q: u32, x: f64) -> bool {
    let q = q as f64;
    let lhs = x * (1.0 - mu.powf(-1.0 / q));
    let rhs = 1.0 - mu.powf(-x / q);
    lhs >= rhs - 1e-12
}

/// Every point of the grid that fails the check.
pub fn tech1_grid_failures() -> Vec<(f64, u32, f64)> {
    let mut bad = Vec::new();
    for mu in [1.01, 1.1, 1.5, 2.0] {
        for q in [5, 50, 500] {
            for k in 0..=198 {
                let x = 1.0 + 0.5 * k as f64;
                if !tech1_check(mu, q, x) {
                    bad.push((mu, q, x));
                }
            }
        }
    }
    bad
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::MuMode;
    use crate::strategy::{breaker_potential_turn, ClosingEdge};

    fn board(n: u32, q: u32) -> Board<f64> {
        Board::new(PotentialParams::new(n, q, 0.05, MuMode::Fixed(1.05)).unwrap()).unwrap()
    }

    fn play_turn(b: &mut Board<f64>, m: EdgeId, eta: f64) -> TurnLedger<f64> {
        let before = b.total();
        b.claim(Owner::Maker, m).unwrap();
        let plan = breaker_potential_turn(b, m).unwrap();
        let after = b.total();
        let rewind = TurnRewind::new(b.state(), &plan).unwrap();
        decompose_turn(&rewind, b.params(), eta, &plan, before, after).unwrap()
    }

    #[test]
    fn first_turn_has_no_closing_components() {
        let mut b = board(40, 6);
        let l = play_turn(&mut b, EdgeId(0), 0.1);
        assert_eq!((l.utt, l.ott, l.dec_tails, l.dec_heads), (0.0, 0.0, 0.0, 0.0));
        assert!((l.critdiff - (l.inc - 0.9 * l.dec_free)).abs() < 1e-12);
        assert!(l.identity_holds(1e-9));
        assert_eq!(l.turn, 1);
        assert_eq!(l.f, 6);
    }

    #[test]
    fn first_turn_increase_bound_is_tight_form() {
        let mut b = board(40, 6);
        let l = play_turn(&mut b, EdgeId(0), 0.1);
        let p = b.params();
        let bound = (1.05f64.powf(p.p0) - 1.0) * 2.0;
        assert!((l.pot_edge_before - 2.0).abs() < 1e-12);
        assert!(l.inc - l.utt <= bound + 1e-12);
        assert!(check_first_increase(&l, p));
    }

    #[test]
    fn rewind_recovers_degrees() {
        let mut b = board(20, 3);
        b.claim(Owner::Maker, b.state().edge(NodeId(0), NodeId(1))).unwrap();
        breaker_potential_turn(&mut b, EdgeId(0)).unwrap();
        let snapshot = b.state().clone();
        let m = b.state().edge(NodeId(1), NodeId(2));
        b.claim(Owner::Maker, m).unwrap();
        let plan = breaker_potential_turn(&mut b, m).unwrap();
        let r = TurnRewind::new(b.state(), &plan).unwrap();
        for w in 0..20 {
            assert_eq!(r.deg_m(NodeId(w)), snapshot.deg_m(NodeId(w)));
            assert_eq!(r.deg_b(NodeId(w)), snapshot.deg_b(NodeId(w)));
        }
        assert_eq!(DegreeView::turn(&r), 1);
    }

    #[test]
    fn closing_edges_split_heads_and_tails() {
        let mut b = board(20, 3);
        b.claim(Owner::Maker, b.state().edge(NodeId(0), NodeId(1))).unwrap();
        breaker_potential_turn(&mut b, EdgeId(0)).unwrap();
        let m = b.state().edge(NodeId(1), NodeId(2));
        let l = play_turn(&mut b, m, 0.1);
        assert!(l.dec_heads > 0.0 && l.dec_tails > 0.0);
        assert!((l.utt + l.ott - l.dec_heads).abs() < 1e-12);
        assert!(l.identity_holds(1e-9));
        assert!(l.restdiff >= 0.0);
    }

    #[test]
    fn saturating_free_edge_books_dec_zero() {
        // 4 nodes, q = 2: Maker's second edge leaves node 3 one claim from full
        let params = PotentialParams::new(4, 2, 0.05, MuMode::Fixed(1.2)).unwrap();
        let mut b = Board::new(params).unwrap();
        let e = |b: &Board<f64>, x, y| b.state().edge(NodeId(x), NodeId(y));
        b.claim(Owner::Maker, e(&b, 0, 1)).unwrap();
        b.claim(Owner::Breaker, e(&b, 2, 3)).unwrap();
        b.claim(Owner::Breaker, e(&b, 1, 3)).unwrap();
        let before = b.total();
        let m = e(&b, 0, 2);
        b.claim(Owner::Maker, m).unwrap();
        let free = e(&b, 0, 3);
        let plan = BreakerTurnPlan {
            maker_edge: Some(m),
            closing: vec![ClosingEdge { edge: e(&b, 1, 2), head: NodeId(2), tail: NodeId(1), kind: ClosingKind::Path }],
            free: vec![free],
            f: 1,
            ..Default::default()
        };
        for c in plan.claims() {
            b.claim(Owner::Breaker, c).unwrap();
        }
        let after = b.total();
        assert!(after.abs() < 1e-12);
        let r = TurnRewind::new(b.state(), &plan).unwrap();
        let l = decompose_turn(&r, b.params(), 0.0, &plan, before, after).unwrap();
        assert!(l.dec_zero > 0.0);
        // oracle: the zeroing drop is the formula value left after the last claim at each node
        let p = b.params();
        let want: f64 =
            [(2, 1), (1, 2), (1, 2), (0, 3)].iter().map(|&(m, bb)| p.pot_formula(p.deficit_of(m, bb))).sum();
        assert!((l.dec_zero - want).abs() < 1e-12, "{} vs {}", l.dec_zero, want);
        assert!(l.identity_holds(1e-9));
    }

    #[test]
    fn mismatched_plan_is_rejected() {
        let mut b = board(20, 3);
        let m = EdgeId(0);
        b.claim(Owner::Maker, m).unwrap();
        let plan = BreakerTurnPlan { maker_edge: Some(EdgeId(5)), ..Default::default() };
        assert!(matches!(TurnRewind::new(b.state(), &plan), Err(GameError::Replay(_))));
        let bad = BreakerTurnPlan {
            maker_edge: Some(m),
            closing: vec![ClosingEdge { edge: EdgeId(40), head: NodeId(7), tail: NodeId(9), kind: ClosingKind::Path }],
            ..Default::default()
        };
        let l = decompose_turn(b.state(), b.params(), 0.0, &bad, 20.0, 20.0);
        assert!(matches!(l, Err(GameError::Replay(_))));
    }

    #[test]
    fn c_examples() {
        assert_eq!(compute_c(0.93, 0.02, 0.01, 0.5).unwrap(), 33);
        assert_eq!(compute_c(0.9, 0.05, 0.02, 0.5).unwrap(), 41);
        // ratio exactly 2: numerator 2, denominator 1
        assert_eq!(compute_c(0.25, 0.5, 0.0, 0.5).unwrap(), 2);
        assert!(compute_c(0.99, 0.02, 0.01, 0.5).is_err());
        assert!(compute_c(0.5, 0.1, 0.1, 1.0).is_err());
    }

    #[test]
    fn tech1() {
        assert!(tech1_check(1.3, 7, 1.0));
        let (lhs, rhs) = (2.0 * (1.0 - 1.1f64.powf(-0.1)), 1.0 - 1.1f64.powf(-0.2));
        assert!((lhs - 0.0189715).abs() < 1e-7 && (rhs - 0.0188815).abs() < 1e-7);
        assert!(tech1_check(1.1, 10, 2.0));
        assert!(tech1_grid_failures().is_empty());
    }

    #[test]
    fn csv_header_and_empty_episode() {
        let mut b = board(30, 4);
        let l = play_turn(&mut b, EdgeId(0), 0.1);
        let mut w = LedgerWriter::new(Vec::new());
        w.write(&l.row(None, "")).unwrap();
        w.write(&l.row(Some(2), "t0|t3")).unwrap();
        let text = String::from_utf8(w.finish().unwrap()).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "turn,mu,mv,f,pot_before,pot_after,inc,dec_free,utt,ott,dec_tails,dec_zero,critdiff,restdiff,critical,episode_id,event"
        );
        assert!(lines.next().unwrap().ends_with(",,"));
        assert!(lines.next().unwrap().ends_with(",2,t0|t3"));
    }

    #[test]
    fn claim_effect_bounds() {
        // β = 3.6 keeps p0 below 1
        let mut b = board(40, 12);
        let fx = b.claim(Owner::Maker, EdgeId(0)).unwrap();
        assert!(check_claim_effect(&fx, b.params()));
        assert!(check_deficit_step(&fx, b.params()));
        let fx = b.claim(Owner::Breaker, EdgeId(1)).unwrap();
        assert!(check_claim_effect(&fx, b.params()));
    }

    #[test]
    fn half_star_premise() {
        let p = PotentialParams::<f64>::new(500, 39, 0.05, MuMode::Fixed(1.05)).unwrap();
        assert_eq!(check_half_star_deficit(&p, 3, 0), None);
        // even one claim short of saturation the deficit stays above 2δn/3
        assert_eq!(check_half_star_deficit(&p, 19, 479), Some(true));
        assert_eq!(check_half_star_deficit(&p, 19, 480), None);
        assert!(check_free_edge_supply(false, 0));
        assert!(!check_free_edge_supply(true, 1));
    }
}
