//! A game state bundled with its potential table and node rankings, kept in
//! sync on every claim.

use std::cell::RefCell;
use std::cmp::Reverse;

use crate::error::Result;
use crate::game::{EdgeId, GameState, NodeId, Owner};
use crate::potential::{NodePotentialTable, PotentialParams, RankKey};
use crate::rank::{PartnerCache, Ranking};
use crate::scalar::Real;

/// Turns between exact resummations of the total potential.
pub const RESYNC_INTERVAL: u32 = 1024;

/// What one claim did to one endpoint.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EndpointChange<R: Real> {
    pub node: NodeId,
    pub deg_m_before: u32,
    pub deg_b_before: u32,
    pub deficit_before: R,
    pub deficit_after: R,
    pub pot_before: R,
    pub pot_after: R,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClaimEffect<R: Real> {
    pub edge: EdgeId,
    pub player: Owner,
    pub ends: [EndpointChange<R>; 2],
}

impl<R: Real> ClaimEffect<R> {
    pub fn pot_edge_before(&self) -> R {
        self.ends[0].pot_before + self.ends[1].pot_before
    }

    pub fn total_change(&self) -> R {
        self.ends.iter().fold(R::zero(), |a, c| a + c.pot_after - c.pot_before)
    }
}

#[derive(Clone, Debug)]
pub struct Board<R: Real> {
    state: GameState,
    params: PotentialParams<R>,
    table: NodePotentialTable<R>,
    maker_rank: Ranking<(Reverse<u32>, u32)>,
    pot_partners: RefCell<PartnerCache<RankKey<R>>>,
    degree_partners: RefCell<PartnerCache<(Reverse<u32>, u32)>>,
    journal: Option<Vec<ClaimEffect<R>>>,
}

impl<R: Real> Board<R> {
    pub fn new(params: PotentialParams<R>) -> Result<Self> {
        let state = GameState::new(params.n, params.q)?;
        Ok(Self::from_state(state, params))
    }

    pub fn from_state(state: GameState, params: PotentialParams<R>) -> Self {
        let table = NodePotentialTable::new(&state, &params);
        let maker_rank = Ranking::new((0..state.n()).map(|v| (Reverse(state.deg_m(NodeId(v))), v)), |k| k.1);
        let (pot_partners, degree_partners) =
            (RefCell::new(PartnerCache::new(state.n())), RefCell::new(PartnerCache::new(state.n())));
        Board { state, params, table, maker_rank, pot_partners, degree_partners, journal: None }
    }

    #[inline]
    pub fn state(&self) -> &GameState {
        &self.state
    }

    #[inline]
    pub fn params(&self) -> &PotentialParams<R> {
        &self.params
    }

    #[inline]
    pub fn table(&self) -> &NodePotentialTable<R> {
        &self.table
    }

    #[inline]
    pub fn pot(&self, v: NodeId) -> R {
        self.table.pot(v)
    }

    pub fn pot_edge(&self, e: EdgeId) -> R {
        let (u, v) = self.state.endpoints(e);
        self.pot(u) + self.pot(v)
    }

    /// Running total potential.
    pub fn total(&self) -> R {
        self.table.total()
    }

    pub fn claim(&mut self, player: Owner, e: EdgeId) -> Result<ClaimEffect<R>> {
        let (u, v) = self.state.endpoints(e);
        let before = [u, v].map(|w| {
            let (m, b) = (self.state.deg_m(w), self.state.deg_b(w));
            (w, m, b, self.params.deficit_of(m, b), self.table.pot(w))
        });
        self.state.apply_claim(player, e)?;
        let ends = before.map(|(w, m, b, d, p)| {
            let (_, after) = self.table.refresh(&self.state, &self.params, w);
            EndpointChange {
                node: w,
                deg_m_before: m,
                deg_b_before: b,
                deficit_before: d,
                deficit_after: self.params.deficit_of(self.state.deg_m(w), self.state.deg_b(w)),
                pot_before: p,
                pot_after: after,
            }
        });
        if ends.iter().any(|c| c.pot_after > c.pot_before) {
            self.pot_partners.get_mut().bump();
        }
        if player == Owner::Maker {
            self.degree_partners.get_mut().bump();
            for w in [u, v] {
                let m = self.state.deg_m(w);
                self.maker_rank.replace((Reverse(m - 1), w.0), (Reverse(m), w.0));
            }
            if self.state.turn().is_multiple_of(RESYNC_INTERVAL) {
                self.table.resync_total();
            }
        }
        let effect = ClaimEffect { edge: e, player, ends };
        if let Some(j) = self.journal.as_mut() {
            j.push(effect);
        }
        Ok(effect)
    }

    /// Starts recording every claim effect until [`Board::take_journal`].
    pub fn record_claims(&mut self, on: bool) {
        self.journal = on.then(Vec::new);
    }

    pub fn take_journal(&mut self) -> Vec<ClaimEffect<R>> {
        self.journal.as_mut().map(std::mem::take).unwrap_or_default()
    }

    pub fn resync_total(&mut self) -> R {
        self.table.resync_total()
    }

    /// Unclaimed edge of maximum `pot(u) + pot(w)`; smallest index among ties.
    pub fn max_potential_open_edge(&self) -> Option<EdgeId> {
        let mut cache = self.pot_partners.borrow_mut();
        best_open_pair(&self.state, self.table.ranking(), &mut cache, |w| self.table.key(w), |k| k.value)
            .map(|(_, e)| e)
    }

    /// Unclaimed edge of maximum `deg_M(u) + deg_M(w)`; smallest index among ties.
    pub fn max_maker_degree_open_edge(&self) -> Option<EdgeId> {
        let mut cache = self.degree_partners.borrow_mut();
        best_open_pair(
            &self.state,
            &self.maker_rank,
            &mut cache,
            |w| (Reverse(self.state.deg_m(NodeId(w))), w),
            |k| k.0 .0 as u64,
        )
        .map(|(_, e)| e)
    }

    /// Partner `w` of `head` over an unclaimed edge with maximum `pot(w)`,
    /// smallest index among ties.
    pub fn best_open_partner(&self, head: NodeId) -> Option<NodeId> {
        if self.state.unclaimed_degree(head) == 0 {
            return None;
        }
        let row = self.state.open_row(head);
        let mut cache = self.pot_partners.borrow_mut();
        cache.partner(self.table.ranking(), head.0, row, |w| self.table.key(w)).map(|k| NodeId(k.node))
    }

    /// Node of maximum Maker-degree that still has unclaimed edges.
    pub fn max_maker_degree_open_node(&self) -> Option<NodeId> {
        self.maker_rank.iter().map(|k| NodeId(k.1)).find(|&w| self.state.unclaimed_degree(w) > 0)
    }
}

/// Unclaimed pair maximizing the summed node value, ties resolved to the
/// smallest edge index.
///
/// Walks `ranking` (value descending, index ascending) and pairs each node
/// with its best-ranked open partner; stops once no later node can reach the
/// best sum found. Among equal values the best-ranked partner has the smallest
/// index, which yields the smallest edge through that node.
pub(crate) fn best_open_pair<K, V>(
    state: &GameState,
    ranking: &Ranking<K>,
    cache: &mut PartnerCache<K>,
    key_of: impl Fn(u32) -> K,
    value: impl Fn(&K) -> V,
) -> Option<(V, EdgeId)>
where
    K: Ord + Copy,
    V: Copy + PartialOrd + std::ops::Add<Output = V>,
{
    let keys = ranking.as_slice();
    let mut best: Option<(V, EdgeId)> = None;
    for (i, uk) in keys.iter().enumerate() {
        let Some(next) = keys.get(i + 1) else { break };
        let pu = value(uk);
        if best.is_some_and(|(bs, _)| pu + value(next) < bs) {
            break;
        }
        let u = NodeId(ranking.node(uk));
        if state.unclaimed_degree(u) == 0 {
            continue;
        }
        let Some(wk) = cache.partner(ranking, u.0, state.open_row(u), &key_of) else { continue };
        let (s, e) = (pu + value(&wk), state.edge(u, NodeId(ranking.node(&wk))));
        if best.is_none_or(|(bs, be)| s > bs || (s == bs && e < be)) {
            best = Some((s, e));
        }
    }
    best
}

/// Brute force reference: scans every unclaimed edge.
pub fn brute_force_max_open_edge<R: Real>(board: &Board<R>) -> Option<EdgeId> {
    let s = board.state();
    let mut best: Option<(R, EdgeId)> = None;
    for i in 0..s.owners().len() as u32 {
        let e = EdgeId(i);
        if s.owner(e) != Owner::Unclaimed {
            continue;
        }
        let p = board.pot_edge(e);
        if best.is_none_or(|(bp, _)| p > bp) {
            best = Some((p, e));
        }
    }
    best.map(|(_, e)| e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{total_potential, MuMode};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn board(n: u32, q: u32) -> Board<f64> {
        Board::new(PotentialParams::new(n, q, 0.05, MuMode::Fixed(1.3)).unwrap()).unwrap()
    }

    #[test]
    fn all_equal_picks_first_edge() {
        let b = board(8, 3);
        assert_eq!(b.max_potential_open_edge(), Some(EdgeId(0)));
        assert_eq!(b.max_maker_degree_open_edge(), Some(EdgeId(0)));
    }

    #[test]
    fn single_hot_node() {
        let mut b = board(8, 3);
        // make node 5 hot, then block its two smallest partners
        b.claim(Owner::Maker, b.state().edge(NodeId(5), NodeId(7))).unwrap();
        b.claim(Owner::Breaker, b.state().edge(NodeId(7), NodeId(6))).unwrap();
        let e = b.max_potential_open_edge().unwrap();
        assert_eq!(b.state().endpoints(e), (NodeId(0), NodeId(5)));
        assert_eq!(Some(e), brute_force_max_open_edge(&b));
    }

    #[test]
    fn second_pair_when_top_pair_claimed() {
        let mut b = board(4, 1);
        b.claim(Owner::Maker, b.state().edge(NodeId(2), NodeId(3))).unwrap();
        // 2 and 3 are hot; (2,3) is claimed so the best is a hot-cold pair
        let e = b.max_potential_open_edge().unwrap();
        assert_eq!(Some(e), brute_force_max_open_edge(&b));
        assert_eq!(b.state().endpoints(e), (NodeId(0), NodeId(2)));
    }

    #[test]
    fn best_partner_prefers_hot_tail() {
        let mut b = board(8, 3);
        b.claim(Owner::Maker, b.state().edge(NodeId(4), NodeId(6))).unwrap();
        assert_eq!(b.best_open_partner(NodeId(0)), Some(NodeId(4)));
        assert_eq!(b.best_open_partner(NodeId(4)), Some(NodeId(0)));
    }

    fn random_play(n: u32, seed: u64, claims: usize) -> Board<f64> {
        let mut b = board(n, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..claims {
            let open = b.state().unclaimed_count();
            if open == 0 {
                break;
            }
            let e = b.state().nth_open_edge(rng.gen_range(0..open)).unwrap();
            let who = if rng.gen_bool(0.3) { Owner::Maker } else { Owner::Breaker };
            b.claim(who, e).unwrap();
        }
        b
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn selection_matches_brute_force(n in 3u32..24, seed in any::<u64>(), frac in 0.0f64..1.0) {
            let claims = (frac * crate::game::pair_count(n) as f64) as usize;
            let b = random_play(n, seed, claims);
            prop_assert_eq!(b.max_potential_open_edge(), brute_force_max_open_edge(&b));
        }

        #[test]
        fn warm_caches_match_brute_force(n in 3u32..150, seed in any::<u64>(), maker_share in 0.0f64..0.6) {
            let mut b = board(n, 3);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let steps = crate::game::pair_count(n).min(400);
            for _ in 0..steps {
                let want = brute_force_max_open_edge(&b);
                prop_assert_eq!(b.max_potential_open_edge(), want);
                let head = NodeId(rng.gen_range(0..n));
                let partner = b.state().open_neighbors(head).max_by(|&x, &y| {
                    crate::scalar::cmp_real(b.pot(NodeId(x)), b.pot(NodeId(y))).then(y.cmp(&x))
                });
                prop_assert_eq!(b.best_open_partner(head), partner.map(NodeId));
                let Some(e) = want else { break };
                // mostly play the hot edge, as the strategies do
                let e = if rng.gen_bool(0.7) { e } else {
                    b.state().nth_open_edge(rng.gen_range(0..b.state().unclaimed_count())).unwrap()
                };
                let who = if rng.gen_bool(maker_share) { Owner::Maker } else { Owner::Breaker };
                b.claim(who, e).unwrap();
            }
        }

        #[test]
        fn degree_selection_matches_brute_force(n in 3u32..20, seed in any::<u64>(), frac in 0.0f64..1.0) {
            let claims = (frac * crate::game::pair_count(n) as f64) as usize;
            let b = random_play(n, seed, claims);
            let s = b.state();
            let mut best: Option<(u32, EdgeId)> = None;
            for i in 0..s.owners().len() as u32 {
                let e = EdgeId(i);
                if s.owner(e) != Owner::Unclaimed { continue; }
                let (x, y) = s.endpoints(e);
                let d = s.deg_m(x) + s.deg_m(y);
                if best.is_none_or(|(bd, _)| d > bd) { best = Some((d, e)); }
            }
            prop_assert_eq!(b.max_maker_degree_open_edge(), best.map(|x| x.1));
        }

        #[test]
        fn cached_potentials_match_recompute(n in 3u32..30, seed in any::<u64>(), frac in 0.0f64..1.0) {
            let claims = (frac * crate::game::pair_count(n) as f64) as usize;
            let b = random_play(n, seed, claims);
            let s = b.state();
            for v in 0..n {
                let exact = crate::potential::pot_node(s, b.params(), NodeId(v));
                prop_assert!((b.pot(NodeId(v)) - exact).abs() <= 1e-9 * exact.max(1.0));
            }
            let total = total_potential(s, b.params());
            prop_assert!((b.total() - total).abs() <= 1e-9 * total.max(1.0));
            let (dm, db) = s.recount_degrees();
            prop_assert_eq!(s.degrees(), (&dm[..], &db[..]));
        }
    }
}
