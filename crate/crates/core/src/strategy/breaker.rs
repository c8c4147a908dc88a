use crate::board::Board;
use crate::error::{GameError, Result};
use crate::game::{EdgeId, NodeId, Owner};
use crate::scalar::{cmp_real, Real};

use super::{BreakerPlayer, BreakerTurnPlan, ClosingEdge, ClosingKind};

/// `⌈√n⌉`
pub fn ce_star_size(n: u32) -> u32 {
    let mut s = (n as f64).sqrt() as u32;
    while s * s < n {
        s += 1;
    }
    while s > 0 && (s - 1) * (s - 1) >= n {
        s -= 1;
    }
    s
}

/// Whether the bias meets the classic `q ≥ 2⌈√n⌉` guarantee.
pub fn ce_bias_sufficient(n: u32, q: u32) -> bool {
    q >= 2 * ce_star_size(n)
}

struct Turn {
    plan: BreakerTurnPlan,
    budget: u32,
    u: NodeId,
    v: NodeId,
}

fn begin<R: Real>(board: &Board<R>, maker_edge: EdgeId) -> Result<Turn> {
    let s = board.state();
    if s.owner(maker_edge) != Owner::Maker {
        return Err(GameError::Replay(format!("edge {maker_edge:?} is not a Maker edge")));
    }
    let (u, v) = s.endpoints(maker_edge);
    let q = board.params().q;
    let nominal_f = q as i64 - (s.deg_m(u) as i64 - 1) - (s.deg_m(v) as i64 - 1);
    Ok(Turn {
        plan: BreakerTurnPlan { maker_edge: Some(maker_edge), nominal_f, ..Default::default() },
        budget: q,
        u,
        v,
    })
}

fn finish<R: Real>(board: &Board<R>, mut t: Turn) -> BreakerTurnPlan {
    let s = board.state();
    if s.unclaimed_degree(t.u) == 0 || s.unclaimed_degree(t.v) == 0 {
        t.plan.isolation_turn = true;
    }
    t.plan.f = t.plan.free.len() as u32;
    t.plan
}

/// Potential strategy: close every new Maker path (substituting at the same
/// head when a path is already closed), then spend the rest of the bias on
/// unclaimed edges of maximum potential.
pub fn breaker_potential_turn<R: Real>(board: &mut Board<R>, maker_edge: EdgeId) -> Result<BreakerTurnPlan> {
    let mut t = begin(board, maker_edge)?;
    let required = board.state().required_closing_edges(maker_edge);
    let mut open = Vec::new();
    let mut closed_heads = Vec::new();
    for (e, head, tail) in required {
        match board.state().owner(e) {
            Owner::Unclaimed => open.push((e, head, tail)),
            Owner::Breaker => closed_heads.push(head),
            // Maker already owns the third edge: the game is lost anyway
            Owner::Maker => {}
        }
    }
    if open.len() > t.budget as usize {
        open.sort_by(|a, b| cmp_real(board.pot(b.2), board.pot(a.2)).then(a.0.cmp(&b.0)));
        t.plan.shortfall = (open.len() - t.budget as usize) as u32;
        open.truncate(t.budget as usize);
    }
    for (e, head, tail) in open {
        board.claim(Owner::Breaker, e)?;
        t.plan.closing.push(ClosingEdge { edge: e, head, tail, kind: ClosingKind::Path });
        t.budget -= 1;
    }
    for head in closed_heads {
        if t.budget == 0 {
            break;
        }
        let pick = match board.best_open_partner(head) {
            Some(tail) => {
                Some(ClosingEdge { edge: board.state().edge(head, tail), head, tail, kind: ClosingKind::Substitute })
            }
            None => {
                t.plan.isolation_turn = true;
                board.max_potential_open_edge().map(|e| {
                    let (a, b) = board.state().endpoints(e);
                    ClosingEdge { edge: e, head: a, tail: b, kind: ClosingKind::Isolation }
                })
            }
        };
        let Some(c) = pick else {
            t.plan.truncated = true;
            break;
        };
        board.claim(Owner::Breaker, c.edge)?;
        t.plan.closing.push(c);
        t.budget -= 1;
    }
    while t.budget > 0 {
        let Some(e) = board.max_potential_open_edge() else {
            t.plan.truncated = true;
            break;
        };
        board.claim(Owner::Breaker, e)?;
        t.plan.free.push(e);
        t.budget -= 1;
    }
    Ok(finish(board, t))
}

/// Classic star-prevention strategy: close every new path, then pad so that
/// `⌈√n⌉` of the turn's edges touch `u` and the rest touch `v`, smallest
/// indices first.
pub fn breaker_ce_turn<R: Real>(board: &mut Board<R>, maker_edge: EdgeId) -> Result<BreakerTurnPlan> {
    let mut t = begin(board, maker_edge)?;
    let share = ce_star_size(board.params().n);
    let mut open: Vec<_> = board
        .state()
        .required_closing_edges(maker_edge)
        .into_iter()
        .filter(|r| board.state().owner(r.0) == Owner::Unclaimed)
        .collect();
    if open.len() > t.budget as usize {
        open.sort_by_key(|r| r.0);
        t.plan.shortfall = (open.len() - t.budget as usize) as u32;
        open.truncate(t.budget as usize);
    }
    let mut at_u = 0;
    for (e, head, tail) in open {
        board.claim(Owner::Breaker, e)?;
        t.plan.closing.push(ClosingEdge { edge: e, head, tail, kind: ClosingKind::Path });
        t.budget -= 1;
        if head == t.u {
            at_u += 1;
        }
    }
    while t.budget > 0 && at_u < share {
        let Some(e) = board.state().first_open_edge_at(t.u) else { break };
        board.claim(Owner::Breaker, e)?;
        t.plan.free.push(e);
        t.budget -= 1;
        at_u += 1;
    }
    while t.budget > 0 {
        let Some(e) = board.state().first_open_edge_at(t.v) else { break };
        board.claim(Owner::Breaker, e)?;
        t.plan.free.push(e);
        t.budget -= 1;
    }
    while t.budget > 0 {
        let Some(e) = board.state().first_open_edge() else {
            t.plan.truncated = true;
            break;
        };
        board.claim(Owner::Breaker, e)?;
        t.plan.free.push(e);
        t.budget -= 1;
    }
    Ok(finish(board, t))
}

/// Computes the plan on a copy of the board, leaving the original untouched.
pub fn preview_breaker_turn<R: Real>(
    board: &Board<R>,
    player: BreakerPlayer,
    maker_edge: EdgeId,
) -> Result<BreakerTurnPlan> {
    let mut scratch = board.clone();
    scratch.record_claims(false);
    player.respond(&mut scratch, maker_edge)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{MuMode, PotentialParams};

    fn board(n: u32, q: u32) -> Board<f64> {
        Board::new(PotentialParams::new(n, q, 0.05, MuMode::Fixed(1.05)).unwrap()).unwrap()
    }

    fn e(b: &Board<f64>, u: u32, v: u32) -> EdgeId {
        b.state().edge(NodeId(u), NodeId(v))
    }

    #[test]
    fn star_size() {
        assert_eq!(ce_star_size(16), 4);
        assert_eq!(ce_star_size(17), 5);
        assert_eq!(ce_star_size(400), 20);
        assert_eq!(ce_star_size(6), 3);
        assert!(ce_bias_sufficient(400, 40));
        assert!(!ce_bias_sufficient(400, 39));
    }

    #[test]
    fn first_turn_potential() {
        let mut b = board(20, 5);
        let m = e(&b, 0, 1);
        b.claim(Owner::Maker, m).unwrap();
        let plan = breaker_potential_turn(&mut b, m).unwrap();
        assert!(plan.closing.is_empty());
        assert_eq!(plan.f, 5);
        assert_eq!(plan.nominal_f, 5);
        assert_eq!(plan.free[0], e(&b, 0, 2));
        assert!(plan.regular());
    }

    #[test]
    fn single_path_is_closed_at_head() {
        let mut b = board(20, 5);
        b.claim(Owner::Maker, e(&b, 0, 1)).unwrap();
        let m = e(&b, 1, 2);
        b.claim(Owner::Maker, m).unwrap();
        let plan = breaker_potential_turn(&mut b, m).unwrap();
        assert_eq!(
            plan.closing,
            vec![ClosingEdge { edge: e(&b, 0, 2), head: NodeId(2), tail: NodeId(0), kind: ClosingKind::Path }]
        );
        assert_eq!(plan.f, 4);
        assert_eq!(plan.nominal_f, 4);
        assert!(b.state().threats().is_empty());
    }

    #[test]
    fn closed_path_gets_substitute_at_same_head() {
        let mut b = board(20, 5);
        b.claim(Owner::Maker, e(&b, 0, 1)).unwrap();
        b.claim(Owner::Breaker, e(&b, 0, 2)).unwrap();
        // make node 9 the hottest possible tail for head 2
        b.claim(Owner::Maker, e(&b, 9, 15)).unwrap();
        let m = e(&b, 1, 2);
        b.claim(Owner::Maker, m).unwrap();
        let plan = breaker_potential_turn(&mut b, m).unwrap();
        assert_eq!(plan.closing.len(), 1);
        let c = plan.closing[0];
        assert_eq!(c.kind, ClosingKind::Substitute);
        assert_eq!(c.head, NodeId(2));
        assert_eq!(c.tail, NodeId(9));
        assert_eq!(plan.f, 4);
    }

    #[test]
    fn shortfall_when_too_many_paths() {
        let mut b = board(12, 2);
        for x in 2..6 {
            b.claim(Owner::Maker, e(&b, 0, x)).unwrap();
        }
        let m = e(&b, 0, 1);
        b.claim(Owner::Maker, m).unwrap();
        let plan = breaker_potential_turn(&mut b, m).unwrap();
        assert_eq!(plan.closing.len(), 2);
        assert_eq!(plan.shortfall, 2);
        assert_eq!(plan.f, 0);
        assert!(!plan.regular());
        // the older star paths among 2..6 stay open; two of the four new ones remain
        let at_1 = b.state().threats().iter().filter(|&&t| b.state().endpoints(t).0 == NodeId(1)).count();
        assert_eq!(at_1, 2);
    }

    #[test]
    fn ce_first_turn_splits_between_endpoints() {
        let mut b = board(16, 8);
        let m = e(&b, 0, 1);
        b.claim(Owner::Maker, m).unwrap();
        let plan = breaker_ce_turn(&mut b, m).unwrap();
        assert!(plan.closing.is_empty());
        let at = |x: u32| {
            plan.free
                .iter()
                .filter(|&&f| {
                    let (a, c) = b.state().endpoints(f);
                    a.0 == x || c.0 == x
                })
                .count()
        };
        assert_eq!((at(0), at(1)), (4, 4));
        assert_eq!(plan.free[..4], [e(&b, 0, 2), e(&b, 0, 3), e(&b, 0, 4), e(&b, 0, 5)]);
        assert_eq!(plan.free[4], e(&b, 1, 2));
    }

    #[test]
    fn ce_two_closings_six_pads() {
        let mut b = board(16, 8);
        b.claim(Owner::Maker, e(&b, 2, 3)).unwrap();
        b.claim(Owner::Maker, e(&b, 4, 5)).unwrap();
        let m = e(&b, 3, 4);
        b.claim(Owner::Maker, m).unwrap();
        let plan = breaker_ce_turn(&mut b, m).unwrap();
        assert_eq!(plan.closing.len(), 2);
        assert_eq!(plan.free.len(), 6);
        assert_eq!(plan.nominal_f, 6);
    }

    #[test]
    fn ce_padding_moves_on_when_saturated() {
        let mut b = board(6, 8);
        for w in 2..6 {
            b.claim(Owner::Breaker, e(&b, 0, w)).unwrap();
        }
        let m = e(&b, 0, 1);
        b.claim(Owner::Maker, m).unwrap();
        let plan = breaker_ce_turn(&mut b, m).unwrap();
        // node 0 is saturated; v = 1 takes its 4 edges, the rest go anywhere
        let at_1 = plan.free.iter().filter(|&&f| b.state().endpoints(f).0 .0 == 1).count();
        assert_eq!(at_1, 4);
        assert_eq!(plan.free.len(), 8);
        assert!(plan.isolation_turn);
    }

    #[test]
    fn plans_never_reuse_edges() {
        let mut b = board(30, 8);
        let mut maker =
            super::super::MakerPlayer::new(&super::super::StrategyConfig::new(super::super::StrategyKind::MakerRandom))
                .unwrap();
        while !b.state().is_over() {
            let m = maker.choose(&b).unwrap();
            b.claim(Owner::Maker, m).unwrap();
            if b.state().is_over() {
                break;
            }
            let before = b.clone();
            let preview = preview_breaker_turn(&b, BreakerPlayer::Potential, m).unwrap();
            let plan = breaker_potential_turn(&mut b, m).unwrap();
            assert_eq!(preview, plan);
            let mut seen = std::collections::HashSet::new();
            for c in plan.claims() {
                assert!(seen.insert(c));
                assert_eq!(before.state().owner(c), Owner::Unclaimed);
            }
            if plan.shortfall == 0 {
                let (u, v) = b.state().endpoints(m);
                assert!(b.state().threats().iter().all(|&t| {
                    let (x, y) = b.state().endpoints(t);
                    x != u && x != v && y != u && y != v
                }));
            }
        }
    }
}
