//! Exact minimax for tiny triangle games, used as ground truth.

use std::collections::{HashMap, HashSet};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::board::Board;
use crate::error::{GameError, Result};
use crate::game::{EdgeId, Owner};
use crate::potential::{MuMode, PotentialParams};
use crate::strategy::{BreakerPlayer, StrategyConfig};

pub const MAX_SOLVER_N: u32 = 7;
const MAX_EDGES: usize = 21;

const U: u8 = 0;
const M: u8 = 1;
const B: u8 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveLimits {
    pub max_nodes: u64,
    pub max_seconds: f64,
}

impl Default for SolveLimits {
    fn default() -> Self {
        SolveLimits { max_nodes: u64::MAX, max_seconds: f64::INFINITY }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveOutcome {
    Maker,
    Breaker,
    Unknown,
}

impl SolveOutcome {
    fn of(maker_wins: bool) -> Self {
        if maker_wins {
            SolveOutcome::Maker
        } else {
            SolveOutcome::Breaker
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PvMove {
    pub player: char,
    pub u: u32,
    pub v: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub n: u32,
    pub q: u32,
    pub winner: SolveOutcome,
    pub nodes_expanded: u64,
    pub table_size: usize,
    pub pv: Vec<PvMove>,
    /// Which limit stopped the search, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limit: Option<String>,
}

type Colors = [u8; MAX_EDGES];

/// Edge tables of K_n for n ≤ 7.
#[derive(Clone, Debug)]
struct Geometry {
    n: usize,
    edges: usize,
    idx: [[usize; 7]; 7],
    ends: Vec<(usize, usize)>,
    /// The three edges of every triangle.
    triangles: Vec<[usize; 3]>,
    /// Triangles through each edge, as the other two edges.
    through: Vec<Vec<(usize, usize)>>,
}

impl Geometry {
    #[allow(clippy::needless_range_loop)]
    fn new(n: u32) -> Result<Self> {
        if !(2..=MAX_SOLVER_N).contains(&n) {
            return Err(GameError::InvalidParams(format!("solver supports 2 <= n <= {MAX_SOLVER_N}, got {n}")));
        }
        let n = n as usize;
        let mut idx = [[usize::MAX; 7]; 7];
        let mut ends = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                idx[a][b] = ends.len();
                idx[b][a] = ends.len();
                ends.push((a, b));
            }
        }
        let mut triangles = Vec::new();
        let mut through = vec![Vec::new(); ends.len()];
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    let (x, y, z) = (idx[a][b], idx[a][c], idx[b][c]);
                    triangles.push([x, y, z]);
                    through[x].push((y, z));
                    through[y].push((x, z));
                    through[z].push((x, y));
                }
            }
        }
        Ok(Geometry { n, edges: ends.len(), idx, ends, triangles, through })
    }

    fn threats(&self, c: &Colors) -> Vec<usize> {
        (0..self.edges).filter(|&e| c[e] == U && self.through[e].iter().any(|&(x, y)| c[x] == M && c[y] == M)).collect()
    }

    fn triangle_possible(&self, c: &Colors) -> bool {
        self.triangles.iter().any(|t| t.iter().all(|&e| c[e] != B))
    }

    fn maker_triangle(&self, c: &Colors) -> bool {
        self.triangles.iter().any(|t| t.iter().all(|&e| c[e] == M))
    }

    fn open(&self, c: &Colors) -> impl Iterator<Item = usize> + '_ {
        let c = *c;
        (0..self.edges).filter(move |&e| c[e] == U)
    }

    /// Smallest base-4 code of the coloring over all relabelings that respect
    /// an isomorphism-invariant ordered partition of the nodes.
    fn canonical_code(&self, c: &Colors) -> u64 {
        let n = self.n;
        let color = |a: usize, b: usize| c[self.idx[a][b]];
        let mut label: Vec<u64> = (0..n)
            .map(|v| {
                let (mut m, mut b) = (0, 0);
                for w in 0..n {
                    if w != v {
                        match color(v, w) {
                            M => m += 1,
                            B => b += 1,
                            _ => {}
                        }
                    }
                }
                m * 8 + b
            })
            .collect();
        let mut classes = distinct(&label);
        loop {
            let sigs: Vec<(u64, Vec<(u8, u64)>)> = (0..n)
                .map(|v| {
                    let mut around: Vec<(u8, u64)> =
                        (0..n).filter(|&w| w != v).map(|w| (color(v, w), label[w])).collect();
                    around.sort_unstable();
                    (label[v], around)
                })
                .collect();
            let mut sorted = sigs.clone();
            sorted.sort();
            sorted.dedup();
            label = sigs.iter().map(|s| sorted.binary_search(s).unwrap() as u64).collect();
            let now = distinct(&label);
            if now == classes {
                break;
            }
            classes = now;
        }
        let mut cells: Vec<Vec<usize>> = Vec::new();
        let mut by_label: Vec<usize> = (0..n).collect();
        by_label.sort_by_key(|&v| label[v]);
        for v in by_label {
            match cells.last_mut() {
                Some(cell) if label[cell[0]] == label[v] => cell.push(v),
                _ => cells.push(vec![v]),
            }
        }
        let slots: Vec<usize> =
            cells.iter().enumerate().flat_map(|(i, cell)| std::iter::repeat_n(i, cell.len())).collect();
        let mut search =
            CodeSearch { color: &color, cells, slots, n, best: u64::MAX, total_bits: 2 * self.edges as u32 };
        let mut order = Vec::with_capacity(n);
        let mut used = [false; 7];
        search.run(&mut order, &mut used, 0, 0);
        search.best
    }
}

fn distinct(labels: &[u64]) -> usize {
    labels.iter().collect::<HashSet<_>>().len()
}

struct CodeSearch<'a, F: Fn(usize, usize) -> u8> {
    color: &'a F,
    cells: Vec<Vec<usize>>,
    /// Cell index owning each position.
    slots: Vec<usize>,
    n: usize,
    best: u64,
    total_bits: u32,
}

impl<F: Fn(usize, usize) -> u8> CodeSearch<'_, F> {
    /// Places nodes position by position; pairs are ordered by their larger
    /// position so every placement extends a prefix of the code.
    fn run(&mut self, order: &mut Vec<usize>, used: &mut [bool; 7], code: u64, bits: u32) {
        let k = order.len();
        if k == self.n {
            self.best = self.best.min(code);
            return;
        }
        let cell = self.slots[k];
        for i in 0..self.cells[cell].len() {
            let v = self.cells[cell][i];
            if used[v] {
                continue;
            }
            let mut next = code;
            for &w in order.iter() {
                next = next << 2 | (self.color)(w, v) as u64;
            }
            let nbits = bits + 2 * k as u32;
            if self.best != u64::MAX && next > self.best >> (self.total_bits - nbits) {
                continue;
            }
            used[v] = true;
            order.push(v);
            self.run(order, used, next, nbits);
            order.pop();
            used[v] = false;
        }
    }
}

struct Search {
    g: Geometry,
    q: u32,
    memo: HashMap<u64, bool>,
    nodes: u64,
    limits: SolveLimits,
    deadline: Option<Instant>,
    hit: Option<String>,
    canonical: bool,
}

impl Search {
    fn key(&self, c: &Colors, r: u32) -> u64 {
        let code = if self.canonical {
            self.g.canonical_code(c)
        } else {
            c[..self.g.edges].iter().fold(0, |k, &x| k << 2 | x as u64)
        };
        code | (r as u64) << 48
    }

    fn tick(&mut self) -> bool {
        self.nodes += 1;
        if self.nodes > self.limits.max_nodes {
            self.hit = Some(format!("max_nodes = {}", self.limits.max_nodes));
        } else if self.nodes.is_multiple_of(4096) && self.deadline.is_some_and(|d| Instant::now() > d) {
            self.hit = Some(format!("max_seconds = {}", self.limits.max_seconds));
        }
        self.hit.is_none()
    }

    /// Decided positions: `Some(maker_wins)` without expanding, or `None`.
    /// Also returns the forced reply when Breaker must take a threat.
    fn shortcut(&self, c: &Colors, r: u32) -> (Option<bool>, Option<usize>) {
        let threats = self.g.threats(c);
        if r == 0 {
            if !threats.is_empty() {
                return (Some(true), Some(threats[0]));
            }
        } else if threats.len() > r as usize {
            return (Some(true), None);
        } else if let Some(&t) = threats.first() {
            return (None, Some(t));
        }
        if self.g.open(c).next().is_none() || !self.g.triangle_possible(c) {
            return (Some(false), None);
        }
        (None, None)
    }

    fn next_r(&self, r: u32) -> u32 {
        if r == 0 {
            self.q
        } else {
            r - 1
        }
    }

    /// Whether Maker wins; `r == 0` means Maker to move, otherwise Breaker has
    /// `r` claims left this turn. `None` when a limit was hit.
    fn solve(&mut self, c: &mut Colors, r: u32) -> Option<bool> {
        let (decided, forced) = self.shortcut(c, r);
        if let Some(w) = decided {
            return Some(w);
        }
        if let Some(e) = forced {
            c[e] = B;
            let w = self.solve(c, r - 1);
            c[e] = U;
            return w;
        }
        let key = self.key(c, r);
        if let Some(&w) = self.memo.get(&key) {
            return Some(w);
        }
        if !self.tick() {
            return None;
        }
        let result = if r == 0 {
            let mut moves: Vec<usize> = self.g.open(c).collect();
            let deg = maker_degrees(&self.g, c);
            moves.sort_by_key(|&e| {
                let (a, b) = self.g.ends[e];
                std::cmp::Reverse(deg[a] + deg[b])
            });
            let mut win = false;
            for e in moves {
                c[e] = M;
                let w = self.solve(c, self.q);
                c[e] = U;
                if w? {
                    win = true;
                    break;
                }
            }
            win
        } else {
            let moves: Vec<usize> = self.g.open(c).collect();
            let mut win = true;
            for e in moves {
                c[e] = B;
                let w = self.solve(c, r - 1);
                c[e] = U;
                if !w? {
                    win = false;
                    break;
                }
            }
            win
        };
        self.memo.insert(key, result);
        Some(result)
    }

    /// One line of optimal play, continued until a triangle appears or no
    /// triangle is possible any more.
    fn principal_variation(&mut self, maker_wins: bool) -> Vec<PvMove> {
        let mut c = [U; MAX_EDGES];
        let mut r = 0;
        let mut pv = Vec::new();
        while self.g.open(&c).next().is_some() && self.g.triangle_possible(&c) {
            let player = if r == 0 { M } else { B };
            let threats = self.g.threats(&c);
            let pick = match threats.first() {
                Some(&e) => Some(e),
                None => self.g.open(&c).collect::<Vec<_>>().into_iter().find(|&e| {
                    c[e] = player;
                    let w = self.solve(&mut c, self.next_r(r));
                    c[e] = U;
                    w == Some(maker_wins)
                }),
            };
            let Some(e) = pick else { break };
            c[e] = player;
            let (u, v) = self.g.ends[e];
            pv.push(PvMove { player: if r == 0 { 'M' } else { 'B' }, u: u as u32, v: v as u32 });
            if r == 0 && self.g.maker_triangle(&c) {
                break;
            }
            r = self.next_r(r);
        }
        pv
    }
}

fn maker_degrees(g: &Geometry, c: &Colors) -> [u32; 7] {
    let mut d = [0; 7];
    for (e, &(a, b)) in g.ends.iter().enumerate() {
        if c[e] == M {
            d[a] += 1;
            d[b] += 1;
        }
    }
    d
}

/// Minimax with memoization on isomorphism classes of positions.
pub fn solve_exact(n: u32, q: u32, limits: SolveLimits) -> Result<SolveReport> {
    run_search(n, q, limits, true)
}

fn run_search(n: u32, q: u32, limits: SolveLimits, canonical: bool) -> Result<SolveReport> {
    if q == 0 {
        return Err(GameError::InvalidParams("q must be at least 1".into()));
    }
    let g = Geometry::new(n)?;
    let deadline = limits.max_seconds.is_finite().then(|| Instant::now() + Duration::from_secs_f64(limits.max_seconds));
    let mut s = Search { g, q, memo: HashMap::new(), nodes: 0, limits, deadline, hit: None, canonical };
    let mut c = [U; MAX_EDGES];
    let winner = s.solve(&mut c, 0);
    let pv = match winner {
        Some(w) => s.principal_variation(w),
        None => Vec::new(),
    };
    Ok(SolveReport {
        n,
        q,
        winner: winner.map_or(SolveOutcome::Unknown, SolveOutcome::of),
        nodes_expanded: s.nodes,
        table_size: s.memo.len(),
        pv,
        limit: s.hit,
    })
}

/// Reference minimax on raw colorings: no relabeling and no pruning beyond
/// the game's own end conditions. Only practical for n ≤ 5.
pub fn solve_plain(n: u32, q: u32) -> Result<SolveOutcome> {
    fn go(g: &Geometry, q: u32, c: &mut Colors, r: u32, memo: &mut HashMap<(Colors, u32), bool>) -> bool {
        if let Some(&w) = memo.get(&(*c, r)) {
            return w;
        }
        let open: Vec<usize> = g.open(c).collect();
        let w = if open.is_empty() {
            false
        } else if r == 0 {
            open.iter().any(|&e| {
                c[e] = M;
                let w = g.maker_triangle(c) || go(g, q, c, q, memo);
                c[e] = U;
                w
            })
        } else {
            open.iter().all(|&e| {
                c[e] = B;
                let w = go(g, q, c, r - 1, memo);
                c[e] = U;
                w
            })
        };
        memo.insert((*c, r), w);
        w
    }
    let g = Geometry::new(n)?;
    let mut c = [U; MAX_EDGES];
    Ok(SolveOutcome::of(go(&g, q, &mut c, 0, &mut HashMap::new())))
}

/// Parameters for running a potential strategy on a tiny board.
pub fn scratch_params(n: u32, q: u32) -> Result<PotentialParams<f64>> {
    let beta = (q as f64).powi(2) / n as f64;
    let delta = if beta > 8.0 / 3.0 { ((1.0 - 8.0 / (3.0 * beta)) / 2.0).min(0.05) } else { 0.05 };
    PotentialParams::new(n, q, delta, MuMode::Fixed(1.05))
}

/// Plays every Maker line against the fixed Breaker strategy. `Some(true)`
/// iff Maker never completes a triangle; `None` when the node limit is hit.
pub fn verify_breaker_strategy_exhaustive(
    n: u32,
    q: u32,
    breaker: &StrategyConfig,
    limits: SolveLimits,
) -> Result<Option<bool>> {
    Geometry::new(n)?;
    let player = BreakerPlayer::new(breaker)?;
    verify_breaker_policy(n, q, limits, |board, e| player.respond(board, e).map(|_| ()))
}

/// Exhaustive check of an arbitrary deterministic Breaker policy. The policy
/// makes Breaker's claims for the turn on the board it is given; triangles are
/// detected by the game engine alone.
pub fn verify_breaker_policy<P>(n: u32, q: u32, limits: SolveLimits, mut policy: P) -> Result<Option<bool>>
where
    P: FnMut(&mut Board<f64>, EdgeId) -> Result<()>,
{
    let board = Board::new(scratch_params(n, q)?)?;
    let mut seen = HashSet::new();
    let mut nodes = 0u64;

    fn walk<P: FnMut(&mut Board<f64>, EdgeId) -> Result<()>>(
        board: &Board<f64>,
        policy: &mut P,
        seen: &mut HashSet<Vec<Owner>>,
        nodes: &mut u64,
        limits: &SolveLimits,
    ) -> Result<Option<bool>> {
        *nodes += 1;
        if *nodes > limits.max_nodes {
            return Ok(None);
        }
        for e in 0..board.state().owners().len() as u32 {
            let e = EdgeId(e);
            if board.state().owner(e) != Owner::Unclaimed {
                continue;
            }
            let mut next = board.clone();
            next.claim(Owner::Maker, e)?;
            if next.state().has_maker_triangle().is_some() {
                return Ok(Some(false));
            }
            if next.state().unclaimed_count() > 0 {
                let before = next.state().breaker_edge_count();
                policy(&mut next, e)?;
                let made = next.state().breaker_edge_count() - before;
                let q = next.state().q() as usize;
                if made != q.min(made + next.state().unclaimed_count()) {
                    return Err(GameError::Internal(format!("policy claimed {made} edges, expected {q}")));
                }
            }
            if next.state().unclaimed_count() == 0 || !seen.insert(next.state().owners().to_vec()) {
                continue;
            }
            match walk(&next, policy, seen, nodes, limits)? {
                Some(true) => {}
                other => return Ok(other),
            }
        }
        Ok(Some(true))
    }

    walk(&board, &mut policy, &mut seen, &mut nodes, &limits)
}

/// Confirms a Breaker win reported by the search without trusting its
/// shortcuts: Breaker follows the replies the search proves safe and every
/// Maker line is enumerated by [`verify_breaker_policy`]. A position where the
/// search has no safe reply fails the check.
pub fn certify_breaker_win(n: u32, q: u32, limits: SolveLimits) -> Result<Option<bool>> {
    let g = Geometry::new(n)?;
    let deadline = limits.max_seconds.is_finite().then(|| Instant::now() + Duration::from_secs_f64(limits.max_seconds));
    let mut s = Search { g, q, memo: HashMap::new(), nodes: 0, limits, deadline, hit: None, canonical: true };
    let mut lost = false;
    let verdict = verify_breaker_policy(n, q, limits, |board, _| {
        let mut c = [U; MAX_EDGES];
        for (e, o) in board.state().owners().iter().enumerate() {
            c[e] = match o {
                Owner::Unclaimed => U,
                Owner::Maker => M,
                Owner::Breaker => B,
            };
        }
        for r in (1..=q).rev() {
            if s.g.open(&c).next().is_none() {
                break;
            }
            let open: Vec<usize> = s.g.open(&c).collect();
            let safe = open.iter().copied().find(|&x| {
                c[x] = B;
                let w = s.solve(&mut c, r - 1);
                c[x] = U;
                w == Some(false)
            });
            // without a safe reply any legal claim keeps the walk going
            let x = safe.unwrap_or_else(|| {
                lost = true;
                open[0]
            });
            c[x] = B;
            board.claim(Owner::Breaker, EdgeId(x as u32))?;
        }
        Ok(())
    })?;
    if s.hit.is_some() {
        return Ok(None);
    }
    Ok(verdict.map(|v| v && !lost))
}
