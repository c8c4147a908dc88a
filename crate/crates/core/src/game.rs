//! Ownership bookkeeping for one play of the (n, q) triangle game on K_n.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{GameError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Lexicographic rank of an unordered pair `{u, v}` among all pairs of K_n.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeId(pub u32);

impl EdgeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Owner {
    Unclaimed,
    Maker,
    Breaker,
}

impl Owner {
    pub fn tag(self) -> char {
        match self {
            Owner::Unclaimed => '-',
            Owner::Maker => 'M',
            Owner::Breaker => 'B',
        }
    }
}

/// Number of edges of K_n.
#[inline]
pub fn pair_count(n: u32) -> usize {
    let n = n as usize;
    n * n.saturating_sub(1) / 2
}

#[inline]
fn row_offset(n: usize, u: usize) -> usize {
    u * (2 * n - u - 1) / 2
}

#[inline]
pub(crate) fn edge_index_unchecked(n: u32, a: u32, b: u32) -> EdgeId {
    let (u, v) = if a < b { (a, b) } else { (b, a) };
    let n = n as usize;
    EdgeId((row_offset(n, u as usize) + (v - u - 1) as usize) as u32)
}

/// Canonical edge id of `{u, v}`.
pub fn edge_index(n: u32, u: NodeId, v: NodeId) -> Result<EdgeId> {
    if u == v || u.0 >= n || v.0 >= n {
        return Err(GameError::InvalidNode { u: u.0, v: v.0, n });
    }
    Ok(edge_index_unchecked(n, u.0, v.0))
}

/// Inverse of [`edge_index`]: returns `(u, v)` with `u < v`.
pub fn edge_endpoints(n: u32, e: EdgeId) -> Result<(NodeId, NodeId)> {
    if e.index() >= pair_count(n) {
        return Err(GameError::InvalidEdge(e.0));
    }
    Ok(edge_endpoints_unchecked(n, e))
}

pub(crate) fn edge_endpoints_unchecked(n: u32, e: EdgeId) -> (NodeId, NodeId) {
    let n = n as usize;
    let idx = e.index();
    // largest u with row_offset(u) <= idx
    let (mut lo, mut hi) = (0usize, n - 1);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if row_offset(n, mid) <= idx {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let u = if row_offset(n, hi) <= idx && hi < n - 1 { hi } else { lo };
    let v = u + 1 + (idx - row_offset(n, u));
    (NodeId(u as u32), NodeId(v as u32))
}

/// Fenwick tree of per-row counts; used for uniform sampling of unclaimed edges.
#[derive(Clone, Debug)]
struct Fenwick {
    tree: Vec<i64>,
}

impl Fenwick {
    fn from_counts(counts: &[i64]) -> Self {
        let mut tree = vec![0; counts.len() + 1];
        for (i, &c) in counts.iter().enumerate() {
            let mut j = i + 1;
            while j < tree.len() {
                tree[j] += c;
                j += j & j.wrapping_neg();
            }
        }
        Fenwick { tree }
    }

    fn add(&mut self, i: usize, delta: i64) {
        let mut j = i + 1;
        while j < self.tree.len() {
            self.tree[j] += delta;
            j += j & j.wrapping_neg();
        }
    }

    /// Smallest index whose prefix sum exceeds `rank`, and the prefix before it.
    fn find(&self, mut rank: i64) -> (usize, i64) {
        let mut pos = 0usize;
        let mut step = (self.tree.len() - 1).next_power_of_two();
        let mut before = 0;
        while step > 0 {
            let next = pos + step;
            if next < self.tree.len() && self.tree[next] <= rank {
                pos = next;
                rank -= self.tree[next];
                before += self.tree[next];
            }
            step >>= 1;
        }
        (pos, before)
    }
}

/// The single mutable truth of a play: who owns each edge of K_n.
#[derive(Clone, Debug)]
pub struct GameState {
    n: u32,
    q: u32,
    owner: Vec<Owner>,
    deg_m: Vec<u32>,
    deg_b: Vec<u32>,
    turn: u32,
    maker_adj: Vec<Vec<u32>>,
    words: usize,
    open_rows: Vec<u64>,
    upper_open: Fenwick,
    unclaimed: usize,
    maker_edges: usize,
    breaker_edges: usize,
    threats: BTreeSet<EdgeId>,
    triangle: Option<[NodeId; 3]>,
}

impl GameState {
    pub fn new(n: u32, q: u32) -> Result<Self> {
        if n < 2 {
            return Err(GameError::InvalidParams(format!("n = {n} must be at least 2")));
        }
        if q < 1 {
            return Err(GameError::InvalidParams("q must be at least 1".into()));
        }
        let nu = n as usize;
        let words = nu.div_ceil(64);
        let mut open_rows = vec![0u64; nu * words];
        for u in 0..nu {
            for v in 0..nu {
                if u != v {
                    open_rows[u * words + v / 64] |= 1u64 << (v % 64);
                }
            }
        }
        let counts: Vec<i64> = (0..nu).map(|u| (nu - 1 - u) as i64).collect();
        Ok(GameState {
            n,
            q,
            owner: vec![Owner::Unclaimed; pair_count(n)],
            deg_m: vec![0; nu],
            deg_b: vec![0; nu],
            turn: 0,
            maker_adj: vec![Vec::new(); nu],
            words,
            open_rows,
            upper_open: Fenwick::from_counts(&counts),
            unclaimed: pair_count(n),
            maker_edges: 0,
            breaker_edges: 0,
            threats: BTreeSet::new(),
            triangle: None,
        })
    }

    #[inline]
    pub fn n(&self) -> u32 {
        self.n
    }

    #[inline]
    pub fn q(&self) -> u32 {
        self.q
    }

    /// Number of Maker edges claimed so far, i.e. the index of the current turn.
    #[inline]
    pub fn turn(&self) -> u32 {
        self.turn
    }

    #[inline]
    pub fn owner(&self, e: EdgeId) -> Owner {
        self.owner[e.index()]
    }

    #[inline]
    pub fn owner_of(&self, u: NodeId, v: NodeId) -> Owner {
        self.owner[edge_index_unchecked(self.n, u.0, v.0).index()]
    }

    pub fn owners(&self) -> &[Owner] {
        &self.owner
    }

    #[inline]
    pub fn deg_m(&self, v: NodeId) -> u32 {
        self.deg_m[v.index()]
    }

    #[inline]
    pub fn deg_b(&self, v: NodeId) -> u32 {
        self.deg_b[v.index()]
    }

    pub fn maker_neighbors(&self, v: NodeId) -> &[u32] {
        &self.maker_adj[v.index()]
    }

    #[inline]
    pub fn unclaimed_count(&self) -> usize {
        self.unclaimed
    }

    pub fn maker_edge_count(&self) -> usize {
        self.maker_edges
    }

    pub fn breaker_edge_count(&self) -> usize {
        self.breaker_edges
    }

    pub fn is_over(&self) -> bool {
        self.triangle.is_some() || self.unclaimed == 0
    }

    #[inline]
    pub fn endpoints(&self, e: EdgeId) -> (NodeId, NodeId) {
        edge_endpoints_unchecked(self.n, e)
    }

    #[inline]
    pub fn edge(&self, u: NodeId, v: NodeId) -> EdgeId {
        edge_index_unchecked(self.n, u.0, v.0)
    }

    /// Unclaimed edges incident in `v`.
    #[inline]
    pub fn unclaimed_degree(&self, v: NodeId) -> u32 {
        self.n - 1 - self.deg_m[v.index()] - self.deg_b[v.index()]
    }

    #[inline]
    pub fn is_open(&self, u: u32, v: u32) -> bool {
        let w = self.open_rows[u as usize * self.words + v as usize / 64];
        w >> (v % 64) & 1 == 1
    }

    #[inline]
    pub(crate) fn open_row(&self, v: NodeId) -> &[u64] {
        let s = v.index() * self.words;
        &self.open_rows[s..s + self.words]
    }

    /// Nodes joined to `v` by an unclaimed edge, ascending.
    pub fn open_neighbors(&self, v: NodeId) -> impl Iterator<Item = u32> + '_ {
        self.open_row(v).iter().enumerate().flat_map(|(wi, &word)| {
            let mut bits = word;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let b = bits.trailing_zeros();
                bits &= bits - 1;
                Some(wi as u32 * 64 + b)
            })
        })
    }

    /// Smallest-index unclaimed edge incident in `v`.
    pub fn first_open_edge_at(&self, v: NodeId) -> Option<EdgeId> {
        self.open_neighbors(v).next().map(|w| self.edge(v, NodeId(w)))
    }

    /// Smallest-index unclaimed edge overall.
    pub fn first_open_edge(&self) -> Option<EdgeId> {
        self.nth_open_edge(0)
    }

    /// The `rank`-th unclaimed edge in index order.
    pub fn nth_open_edge(&self, rank: usize) -> Option<EdgeId> {
        if rank >= self.unclaimed {
            return None;
        }
        let (u, before) = self.upper_open.find(rank as i64);
        let mut left = rank as i64 - before;
        let u = u as u32;
        for w in self.open_neighbors(NodeId(u)) {
            if w <= u {
                continue;
            }
            if left == 0 {
                return Some(self.edge(NodeId(u), NodeId(w)));
            }
            left -= 1;
        }
        None
    }

    /// Unclaimed edges whose claim by Maker would complete a triangle, ascending.
    pub fn threats(&self) -> &BTreeSet<EdgeId> {
        &self.threats
    }

    pub fn has_maker_triangle(&self) -> Option<[NodeId; 3]> {
        self.triangle
    }

    /// Closing edges demanded by Maker's edge `{u, v}`: `{x, v}` for every Maker
    /// neighbour `x` of `u`, then `{y, u}` for every Maker neighbour `y` of `v`.
    /// Each entry is `(edge, head, tail)`.
    pub fn required_closing_edges(&self, maker_edge: EdgeId) -> Vec<(EdgeId, NodeId, NodeId)> {
        let (u, v) = self.endpoints(maker_edge);
        let mut out = Vec::with_capacity((self.deg_m(u) + self.deg_m(v)) as usize);
        for &x in self.maker_neighbors(u) {
            if x != v.0 {
                out.push((self.edge(NodeId(x), v), v, NodeId(x)));
            }
        }
        for &y in self.maker_neighbors(v) {
            if y != u.0 {
                out.push((self.edge(NodeId(y), u), u, NodeId(y)));
            }
        }
        out
    }

    /// Gives `e` to `player`.
    pub fn apply_claim(&mut self, player: Owner, e: EdgeId) -> Result<()> {
        if player == Owner::Unclaimed {
            return Err(GameError::InvalidPlayer(player));
        }
        if e.index() >= self.owner.len() {
            return Err(GameError::InvalidEdge(e.0));
        }
        let current = self.owner[e.index()];
        let (u, v) = self.endpoints(e);
        if current != Owner::Unclaimed {
            return Err(GameError::IllegalMove { edge: (u, v), owner: current });
        }
        self.owner[e.index()] = player;
        self.unclaimed -= 1;
        let w = self.words;
        self.open_rows[u.index() * w + v.index() / 64] &= !(1u64 << (v.0 % 64));
        self.open_rows[v.index() * w + u.index() / 64] &= !(1u64 << (u.0 % 64));
        self.upper_open.add(u.index(), -1);
        self.threats.remove(&e);
        match player {
            Owner::Maker => {
                self.maker_edges += 1;
                self.turn += 1;
                self.note_maker_edge(u, v);
                self.deg_m[u.index()] += 1;
                self.deg_m[v.index()] += 1;
                insert_sorted(&mut self.maker_adj[u.index()], v.0);
                insert_sorted(&mut self.maker_adj[v.index()], u.0);
            }
            Owner::Breaker => {
                self.breaker_edges += 1;
                self.deg_b[u.index()] += 1;
                self.deg_b[v.index()] += 1;
            }
            Owner::Unclaimed => unreachable!(),
        }
        Ok(())
    }

    fn note_maker_edge(&mut self, u: NodeId, v: NodeId) {
        let (small, large) =
            if self.maker_adj[u.index()].len() <= self.maker_adj[v.index()].len() { (u, v) } else { (v, u) };
        if self.triangle.is_none() {
            let other = &self.maker_adj[large.index()];
            if let Some(&x) = self.maker_adj[small.index()].iter().find(|x| other.binary_search(x).is_ok()) {
                let mut t = [u, v, NodeId(x)];
                t.sort();
                self.triangle = Some(t);
            }
        }
        for (a, b) in [(u, v), (v, u)] {
            for &x in &self.maker_adj[a.index()] {
                if x == b.0 {
                    continue;
                }
                let e = edge_index_unchecked(self.n, x, b.0);
                if self.owner[e.index()] == Owner::Unclaimed {
                    self.threats.insert(e);
                }
            }
        }
    }

    /// Recounts every degree from the owner array; used by tests and `verify`.
    pub fn recount_degrees(&self) -> (Vec<u32>, Vec<u32>) {
        let mut dm = vec![0; self.n as usize];
        let mut db = vec![0; self.n as usize];
        for (i, o) in self.owner.iter().enumerate() {
            let (u, v) = self.endpoints(EdgeId(i as u32));
            match o {
                Owner::Maker => {
                    dm[u.index()] += 1;
                    dm[v.index()] += 1;
                }
                Owner::Breaker => {
                    db[u.index()] += 1;
                    db[v.index()] += 1;
                }
                Owner::Unclaimed => {}
            }
        }
        (dm, db)
    }

    pub fn degrees(&self) -> (&[u32], &[u32]) {
        (&self.deg_m, &self.deg_b)
    }
}

fn insert_sorted(v: &mut Vec<u32>, x: u32) {
    if let Err(pos) = v.binary_search(&x) {
        v.insert(pos, x);
    }
}

/// Exhaustive triangle search; reference for the incremental detector.
pub fn brute_force_maker_triangle(state: &GameState) -> Option<[NodeId; 3]> {
    let n = state.n();
    for a in 0..n {
        for b in a + 1..n {
            if state.owner_of(NodeId(a), NodeId(b)) != Owner::Maker {
                continue;
            }
            for c in b + 1..n {
                if state.owner_of(NodeId(a), NodeId(c)) == Owner::Maker
                    && state.owner_of(NodeId(b), NodeId(c)) == Owner::Maker
                {
                    return Some([NodeId(a), NodeId(b), NodeId(c)]);
                }
            }
        }
    }
    None
}

/// One line of the move log: `turn,player,u,v` (an optional header line is skipped).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MoveRecord {
    pub turn: u32,
    pub player: Owner,
    pub u: NodeId,
    pub v: NodeId,
}

impl fmt::Display for MoveRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.turn, self.player.tag(), self.u, self.v)
    }
}

impl FromStr for MoveRecord {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.trim().split(',').collect();
        if parts.len() != 4 {
            return Err(format!("expected 4 fields, got {}", parts.len()));
        }
        let num = |x: &str| x.trim().parse::<u32>().map_err(|e| format!("{x:?}: {e}"));
        let player = match parts[1].trim() {
            "M" => Owner::Maker,
            "B" => Owner::Breaker,
            other => return Err(format!("unknown player {other:?}")),
        };
        Ok(MoveRecord { turn: num(parts[0])?, player, u: NodeId(num(parts[2])?), v: NodeId(num(parts[3])?) })
    }
}

pub fn write_move_log<W: Write>(mut out: W, moves: &[MoveRecord]) -> std::io::Result<()> {
    for m in moves {
        writeln!(out, "{m}")?;
    }
    Ok(())
}

pub fn read_move_log<R: BufRead>(input: R) -> Result<Vec<MoveRecord>> {
    let mut moves = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| GameError::MoveLog { line: i + 1, reason: e.to_string() })?;
        if line.trim().is_empty() || (i == 0 && line.starts_with("turn")) {
            continue;
        }
        let m = line.parse().map_err(|reason| GameError::MoveLog { line: i + 1, reason })?;
        moves.push(m);
    }
    Ok(moves)
}

/// Rebuilds the final position of a logged game.
pub fn replay(n: u32, q: u32, moves: &[MoveRecord]) -> Result<GameState> {
    let mut state = GameState::new(n, q)?;
    for m in moves {
        let e = edge_index(n, m.u, m.v)?;
        state.apply_claim(m.player, e)?;
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(n: u32, u: u32, v: u32) -> EdgeId {
        edge_index(n, NodeId(u), NodeId(v)).unwrap()
    }

    #[test]
    fn edge_index_examples() {
        assert_eq!(e(5, 0, 1), EdgeId(0));
        assert_eq!(e(5, 3, 4), EdgeId(9));
        // lexicographic enumeration of K5 pairs
        let mut rank = 0;
        for u in 0..5 {
            for v in u + 1..5 {
                if (u, v) == (1, 3) {
                    assert_eq!(rank, 5);
                }
                assert_eq!(e(5, u, v), EdgeId(rank));
                assert_eq!(e(5, v, u), EdgeId(rank));
                rank += 1;
            }
        }
    }

    #[test]
    fn edge_index_rejects_bad_nodes() {
        assert!(matches!(edge_index(5, NodeId(2), NodeId(2)), Err(GameError::InvalidNode { .. })));
        assert!(edge_index(5, NodeId(1), NodeId(5)).is_err());
        assert!(edge_endpoints(5, EdgeId(10)).is_err());
    }

    #[test]
    fn endpoints_invert_index() {
        for n in 2..40 {
            for i in 0..pair_count(n) as u32 {
                let (u, v) = edge_endpoints(n, EdgeId(i)).unwrap();
                assert!(u < v);
                assert_eq!(edge_index(n, u, v).unwrap(), EdgeId(i));
            }
        }
    }

    #[test]
    fn claims_update_degrees() {
        let mut s = GameState::new(4, 1).unwrap();
        s.apply_claim(Owner::Maker, e(4, 0, 1)).unwrap();
        assert_eq!((s.deg_m(NodeId(0)), s.deg_m(NodeId(1))), (1, 1));
        assert_eq!((s.deg_m(NodeId(2)), s.deg_m(NodeId(3))), (0, 0));
        let err = s.apply_claim(Owner::Breaker, e(4, 0, 1)).unwrap_err();
        assert_eq!(err, GameError::IllegalMove { edge: (NodeId(0), NodeId(1)), owner: Owner::Maker });
        s.apply_claim(Owner::Breaker, e(4, 2, 3)).unwrap();
        assert_eq!((s.deg_b(NodeId(2)), s.deg_b(NodeId(3))), (1, 1));
        assert_eq!(s.deg_m(NodeId(2)), 0);
        assert!(s.apply_claim(Owner::Unclaimed, e(4, 0, 2)).is_err());
    }

    #[test]
    fn closing_edges() {
        let mut s = GameState::new(6, 2).unwrap();
        s.apply_claim(Owner::Maker, e(6, 0, 1)).unwrap();
        assert!(s.required_closing_edges(e(6, 0, 1)).is_empty());
        let mut s2 = s.clone();
        s2.apply_claim(Owner::Maker, e(6, 1, 2)).unwrap();
        let req = s2.required_closing_edges(e(6, 1, 2));
        // after the claim both endpoints list each other; those are skipped
        assert_eq!(req, vec![(e(6, 0, 2), NodeId(2), NodeId(0))]);

        s.apply_claim(Owner::Maker, e(6, 2, 3)).unwrap();
        let mut before = s.clone();
        let req: Vec<EdgeId> = before.required_closing_edges(e(6, 1, 2)).iter().map(|r| r.0).collect();
        assert_eq!(req, vec![e(6, 0, 2), e(6, 1, 3)]);
        before.apply_claim(Owner::Maker, e(6, 1, 2)).unwrap();
        assert_eq!(before.threats().iter().copied().collect::<Vec<_>>(), vec![e(6, 0, 2), e(6, 1, 3)]);
    }

    #[test]
    fn triangle_detection() {
        let mut s = GameState::new(5, 1).unwrap();
        s.apply_claim(Owner::Maker, e(5, 0, 1)).unwrap();
        s.apply_claim(Owner::Maker, e(5, 1, 2)).unwrap();
        assert_eq!(s.has_maker_triangle(), None);
        s.apply_claim(Owner::Maker, e(5, 0, 2)).unwrap();
        assert_eq!(s.has_maker_triangle(), Some([NodeId(0), NodeId(1), NodeId(2)]));

        let mut c = GameState::new(5, 1).unwrap();
        for i in 0..5 {
            c.apply_claim(Owner::Maker, e(5, i, (i + 1) % 5)).unwrap();
        }
        assert_eq!(c.has_maker_triangle(), None);
        assert_eq!(brute_force_maker_triangle(&c), None);
    }

    #[test]
    fn unclaimed_degree_cases() {
        let mut s = GameState::new(6, 1).unwrap();
        assert_eq!(s.unclaimed_degree(NodeId(0)), 5);
        s.apply_claim(Owner::Maker, e(6, 0, 1)).unwrap();
        s.apply_claim(Owner::Breaker, e(6, 0, 2)).unwrap();
        assert_eq!(s.unclaimed_degree(NodeId(0)), 3);
        s.apply_claim(Owner::Maker, e(6, 0, 3)).unwrap();
        for w in [4, 5] {
            s.apply_claim(Owner::Breaker, e(6, 0, w)).unwrap();
        }
        s.apply_claim(Owner::Breaker, e(6, 1, 2)).unwrap();
        // node 0: deg_M = 2, deg_B = 3
        assert_eq!(s.unclaimed_degree(NodeId(0)), 0);
        assert_eq!(s.open_neighbors(NodeId(0)).count(), 0);
    }

    #[test]
    fn nth_open_edge_walks_in_index_order() {
        let mut s = GameState::new(7, 1).unwrap();
        for (u, v) in [(0, 3), (1, 2), (2, 6), (5, 6)] {
            s.apply_claim(Owner::Breaker, e(7, u, v)).unwrap();
        }
        let open: Vec<EdgeId> =
            (0..pair_count(7) as u32).map(EdgeId).filter(|&x| s.owner(x) == Owner::Unclaimed).collect();
        for (r, &x) in open.iter().enumerate() {
            assert_eq!(s.nth_open_edge(r), Some(x));
        }
        assert_eq!(s.nth_open_edge(open.len()), None);
        assert_eq!(s.first_open_edge_at(NodeId(0)), Some(e(7, 0, 1)));
        assert_eq!(s.first_open_edge_at(NodeId(3)), Some(e(7, 1, 3)));
    }

    #[test]
    fn move_log_round_trip() {
        let moves = vec![
            MoveRecord { turn: 1, player: Owner::Maker, u: NodeId(0), v: NodeId(1) },
            MoveRecord { turn: 1, player: Owner::Breaker, u: NodeId(0), v: NodeId(2) },
        ];
        let mut buf = Vec::new();
        write_move_log(&mut buf, &moves).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "1,M,0,1\n1,B,0,2\n");
        let back = read_move_log(&buf[..]).unwrap();
        assert_eq!(back, moves);
        let s = replay(4, 1, &back).unwrap();
        assert_eq!(s.deg_b(NodeId(2)), 1);
        assert!(read_move_log("1,X,0,1\n".as_bytes()).is_err());
    }
}
