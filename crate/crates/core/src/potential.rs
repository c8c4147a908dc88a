//! Balance, deficit and node potentials, plus the incrementally maintained
//! per-node potential table.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{GameError, Result};
use crate::game::{EdgeId, GameState, NodeId};
use crate::rank::Ranking;
use crate::scalar::{cmp_real, Real};

/// How the potential base μ is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MuMode {
    /// `1 + 6·β·ln(n) / (δ·q)`.
    Asymptotic,
    Fixed(f64),
}

impl std::str::FromStr for MuMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "asymptotic" {
            return Ok(MuMode::Asymptotic);
        }
        if let Some(x) = s.strip_prefix("fixed:") {
            return x.parse::<f64>().map(MuMode::Fixed).map_err(|e| format!("bad mu {x:?}: {e}"));
        }
        Err(format!("expected `asymptotic` or `fixed:<x>`, got {s:?}"))
    }
}

/// Bias rounded up to an integer: `q = ⌈√(β·n)⌉`.
pub fn bias_for_beta(n: u32, beta: f64) -> u32 {
    let exact = (beta * n as f64).sqrt();
    let r = exact.round();
    // guard against sqrt of perfect squares landing a hair above the integer
    if (exact - r).abs() < 1e-9 {
        r as u32
    } else {
        exact.ceil() as u32
    }
}

/// Every constant the potential function needs, derived once.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialParams<R: Real> {
    pub n: u32,
    pub q: u32,
    pub beta_eff: R,
    pub delta: R,
    pub mu_mode: MuMode,
    pub mu: R,
    pub p0: R,
    ln_mu: R,
    /// `q²(1−δ)(3+δ)`
    base_denominator: R,
}

impl<R: Real> PotentialParams<R> {
    pub fn new(n: u32, q: u32, delta: f64, mu_mode: MuMode) -> Result<Self> {
        if n < 2 {
            return Err(GameError::InvalidParams(format!("n = {n} must be at least 2")));
        }
        if q < 1 {
            return Err(GameError::InvalidParams("q must be at least 1".into()));
        }
        let beta_eff = (q as f64).powi(2) / n as f64;
        if !(delta > 0.0 && delta < 1.0) {
            return Err(GameError::InvalidParams(format!("delta = {delta} outside (0, 1)")));
        }
        if beta_eff > 8.0 / 3.0 && delta >= 1.0 - 8.0 / (3.0 * beta_eff) {
            return Err(GameError::InvalidParams(format!(
                "delta = {delta} must be below 1 - 8/(3·beta_eff) = {:.6} (beta_eff = {beta_eff:.6})",
                1.0 - 8.0 / (3.0 * beta_eff)
            )));
        }
        let mu = match mu_mode {
            MuMode::Asymptotic => 1.0 + 6.0 * beta_eff * (n as f64).ln() / (delta * q as f64),
            MuMode::Fixed(m) => m,
        };
        if !mu.is_finite() || mu <= 1.0 {
            return Err(GameError::InvalidParams(format!("mu = {mu} must exceed 1")));
        }
        let qr = R::of_int(q as u64);
        let d = R::of(delta);
        let base_denominator = qr * qr * (R::one() - d) * (R::of(3.0) + d);
        let p0 = R::of(8.0) * R::of_int(n as u64) / base_denominator;
        let mu = R::of(mu);
        Ok(PotentialParams {
            n,
            q,
            beta_eff: R::of(beta_eff),
            delta: d,
            mu_mode,
            mu,
            p0,
            ln_mu: mu.ln(),
            base_denominator,
        })
    }

    pub fn from_beta(n: u32, beta: f64, delta: f64, mu_mode: MuMode) -> Result<Self> {
        Self::new(n, bias_for_beta(n, beta), delta, mu_mode)
    }

    #[inline]
    fn q_r(&self) -> R {
        R::of_int(self.q as u64)
    }

    /// Balanced Breaker-degree as a function of the Maker-degree alone.
    #[inline]
    pub fn deg_star(&self, deg_m: u32) -> R {
        let m = R::of_int(deg_m as u64);
        let half = R::of(0.5);
        R::of_int(self.n as u64) - self.p0 * (self.base_denominator / R::of(8.0) - m * (self.q_r() - m * half))
    }

    #[inline]
    pub fn deficit_of(&self, deg_m: u32, deg_b: u32) -> R {
        self.deg_star(deg_m) - R::of_int(deg_b as u64)
    }

    /// `μ^{d/q}` without the saturation case.
    #[inline]
    pub fn pot_formula(&self, deficit: R) -> R {
        (deficit / self.q_r() * self.ln_mu).exp()
    }

    #[inline]
    pub fn pot_of(&self, deg_m: u32, deg_b: u32) -> R {
        if deg_m + deg_b >= self.n - 1 {
            R::zero()
        } else {
            self.pot_formula(self.deficit_of(deg_m, deg_b))
        }
    }

    /// `μ^{-1/q}`: the exact factor one Breaker edge applies to a node potential.
    pub fn breaker_factor(&self) -> R {
        (-self.ln_mu / self.q_r()).exp()
    }

    pub fn ln_mu(&self) -> R {
        self.ln_mu
    }

    pub fn balance_of(&self, v: u32, deg_m: u32, deg_b: u32) -> Result<R> {
        let m = R::of_int(deg_m as u64);
        let den = self.base_denominator - R::of(4.0) * m * (R::of(2.0) * self.q_r() - m);
        if den == R::zero() {
            return Err(GameError::SingularBalance { node: v, deg_m });
        }
        Ok(R::of(8.0) * (R::of_int(self.n as u64) - R::of_int(deg_b as u64)) / den)
    }

    pub fn header(&self) -> ParamsHeader {
        ParamsHeader {
            n: self.n,
            q: self.q,
            beta_eff: self.beta_eff.as_f64(),
            delta: self.delta.as_f64(),
            mu: self.mu.as_f64(),
            p0: self.p0.as_f64(),
        }
    }
}

/// `8n / (q²(1−δ)(3+δ))`.
pub fn compute_p0<R: Real>(params: &PotentialParams<R>) -> R {
    params.p0
}

/// The three strict inequalities `8/(3β) < p0 < 8/(3β(1−δ)) < 1`.
pub fn check_remark_p0(beta_eff: f64, delta: f64) -> bool {
    if !(delta > 0.0 && beta_eff > 0.0) {
        return false;
    }
    let p0 = 8.0 / (beta_eff * (1.0 - delta) * (3.0 + delta));
    let lower = 8.0 / (3.0 * beta_eff);
    let upper = 8.0 / (3.0 * beta_eff * (1.0 - delta));
    lower < p0 && p0 < upper && upper < 1.0
}

pub fn balance<R: Real>(state: &GameState, params: &PotentialParams<R>, v: NodeId) -> Result<R> {
    params.balance_of(v.0, state.deg_m(v), state.deg_b(v))
}

pub fn balanced_breaker_degree<R: Real>(state: &GameState, params: &PotentialParams<R>, v: NodeId) -> R {
    params.deg_star(state.deg_m(v))
}

pub fn deficit<R: Real>(state: &GameState, params: &PotentialParams<R>, v: NodeId) -> R {
    params.deficit_of(state.deg_m(v), state.deg_b(v))
}

pub fn pot_node<R: Real>(state: &GameState, params: &PotentialParams<R>, v: NodeId) -> R {
    params.pot_of(state.deg_m(v), state.deg_b(v))
}

/// Potential of an unclaimed edge: sum of its endpoint potentials.
pub fn pot_edge<R: Real>(state: &GameState, params: &PotentialParams<R>, e: EdgeId) -> Result<R> {
    let (u, v) = state.endpoints(e);
    let (pu, pv) = (pot_node(state, params, u), pot_node(state, params, v));
    if (state.unclaimed_degree(u) == 0 || state.unclaimed_degree(v) == 0)
        && state.owner(e) == crate::game::Owner::Unclaimed
    {
        return Err(GameError::Internal(format!("unclaimed edge {e:?} has a saturated endpoint")));
    }
    Ok(pu + pv)
}

/// Σ_v pot(v), evaluated from scratch.
pub fn total_potential<R: Real>(state: &GameState, params: &PotentialParams<R>) -> R {
    (0..state.n()).map(|v| pot_node(state, params, NodeId(v))).fold(R::zero(), |a, b| a + b)
}

/// Quantities of the "concentrate on one node" reading of the balance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BalanceInterpretation {
    pub v: u32,
    pub b_v: f64,
    pub b_total: f64,
    pub c_prime: f64,
    pub a_prime: f64,
    pub ratio: f64,
    pub balance: f64,
    /// False when `B_v` or `A'` is non-positive and the ratio loses its meaning.
    pub in_regime: bool,
}

pub fn balance_interpretation_for<R: Real>(
    params: &PotentialParams<R>,
    v: u32,
    deg_m: u32,
    deg_b: u32,
) -> Result<BalanceInterpretation> {
    let q = params.q as f64;
    let delta = params.delta.as_f64();
    let star = q * (1.0 - delta) / 2.0;
    if deg_m as f64 >= star {
        return Err(GameError::OutOfRegime {
            node: v,
            reason: format!("Maker-degree {deg_m} is not below q(1-δ)/2 = {star:.3}"),
        });
    }
    let m = deg_m as f64;
    let b_v = params.n as f64 - star - deg_b as f64;
    let b_total = q * q * (1.0 - delta) / 2.0 - q * m;
    // Σ_{i=m}^{K-1} i with K = ⌈q(1−δ)/2⌉
    let k = star.ceil();
    let c_prime = k * (k - 1.0) / 2.0 - m * (m - 1.0) / 2.0;
    let a_prime = b_total - c_prime;
    let ratio = b_v / a_prime;
    let balance = params.balance_of(v, deg_m, deg_b)?.as_f64();
    Ok(BalanceInterpretation {
        v,
        b_v,
        b_total,
        c_prime,
        a_prime,
        ratio,
        balance,
        in_regime: b_v > 0.0 && a_prime > 0.0,
    })
}

pub fn balance_interpretation<R: Real>(
    state: &GameState,
    params: &PotentialParams<R>,
    v: NodeId,
) -> Result<BalanceInterpretation> {
    balance_interpretation_for(params, v.0, state.deg_m(v), state.deg_b(v))
}

/// Ordering key of a node in the potential ranking: larger potential first,
/// then smaller index.
#[derive(Clone, Copy, Debug)]
pub struct RankKey<R: Real> {
    pub value: R,
    pub node: u32,
}

impl<R: Real> PartialEq for RankKey<R> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<R: Real> Eq for RankKey<R> {}

impl<R: Real> PartialOrd for RankKey<R> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<R: Real> Ord for RankKey<R> {
    fn cmp(&self, other: &Self) -> Ordering {
        cmp_real(other.value, self.value).then(self.node.cmp(&other.node))
    }
}

/// Per-node cached potentials, their ranking, and the running total.
#[derive(Clone, Debug)]
pub struct NodePotentialTable<R: Real> {
    pot: Vec<R>,
    ranking: Ranking<RankKey<R>>,
    total: R,
}

impl<R: Real> NodePotentialTable<R> {
    pub fn new(state: &GameState, params: &PotentialParams<R>) -> Self {
        let pot: Vec<R> = (0..state.n()).map(|v| pot_node(state, params, NodeId(v))).collect();
        let ranking =
            Ranking::new(pot.iter().enumerate().map(|(v, &p)| RankKey { value: p, node: v as u32 }), |k| k.node);
        let total = pot.iter().fold(R::zero(), |a, &b| a + b);
        NodePotentialTable { pot, ranking, total }
    }

    #[inline]
    pub fn pot(&self, v: NodeId) -> R {
        self.pot[v.index()]
    }

    pub fn pots(&self) -> &[R] {
        &self.pot
    }

    pub fn total(&self) -> R {
        self.total
    }

    pub fn ranking(&self) -> &Ranking<RankKey<R>> {
        &self.ranking
    }

    #[inline]
    pub fn key(&self, v: u32) -> RankKey<R> {
        RankKey { value: self.pot[v as usize], node: v }
    }

    /// Re-evaluates `v` from its degrees; returns `(old, new)`.
    pub fn refresh(&mut self, state: &GameState, params: &PotentialParams<R>, v: NodeId) -> (R, R) {
        let old = self.pot[v.index()];
        let new = pot_node(state, params, v);
        if new != old {
            self.ranking.replace(RankKey { value: old, node: v.0 }, RankKey { value: new, node: v.0 });
            self.pot[v.index()] = new;
        }
        self.total = self.total + new - old;
        (old, new)
    }

    /// Replaces the accumulator with an exact sum; returns the drift removed.
    pub fn resync_total(&mut self) -> R {
        let exact = self.pot.iter().fold(R::zero(), |a, &b| a + b);
        let drift = self.total - exact;
        self.total = exact;
        drift
    }

    pub fn max_node(&self) -> Option<RankKey<R>> {
        self.ranking.first().copied()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamsHeader {
    pub n: u32,
    pub q: u32,
    pub beta_eff: f64,
    pub delta: f64,
    pub mu: f64,
    pub p0: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeDump {
    pub v: u32,
    #[serde(rename = "deg_M")]
    pub deg_m: u32,
    #[serde(rename = "deg_B")]
    pub deg_b: u32,
    pub deg_star: f64,
    pub d: f64,
    pub pot: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialDump {
    pub header: ParamsHeader,
    pub nodes: Vec<NodeDump>,
}

/// Diagnostic snapshot of every node's potential state.
pub fn dump<R: Real>(state: &GameState, params: &PotentialParams<R>) -> PotentialDump {
    let nodes = (0..state.n())
        .map(|v| {
            let id = NodeId(v);
            NodeDump {
                v,
                deg_m: state.deg_m(id),
                deg_b: state.deg_b(id),
                deg_star: balanced_breaker_degree(state, params, id).as_f64(),
                d: deficit(state, params, id).as_f64(),
                pot: pot_node(state, params, id).as_f64(),
            }
        })
        .collect();
    PotentialDump { header: params.header(), nodes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::Owner;

    fn params(n: u32, q: u32, delta: f64, mu: MuMode) -> PotentialParams<f64> {
        PotentialParams::new(n, q, delta, mu).unwrap()
    }

    #[test]
    fn p0_matches_closed_form() {
        // q² = 3n exactly: n = 300, q = 30
        let p = params(300, 30, 0.05, MuMode::Fixed(1.05));
        let direct = 8.0 / (3.0 * 0.95 * 3.05);
        assert!((compute_p0(&p) - direct).abs() < 1e-12);
        assert!((direct - 0.920334).abs() < 1e-6);
        assert!((p.p0 - 8.0 / (p.beta_eff * 0.95 * 3.05)).abs() < 1e-12);
    }

    #[test]
    fn remark_guard() {
        assert!(check_remark_p0(3.0, 0.05));
        assert!(check_remark_p0(4.0, 0.3));
        // at beta = 8/3 the legal delta interval is empty
        for d in [1e-6, 0.01, 0.1, 0.5] {
            assert!(!check_remark_p0(8.0 / 3.0, d));
        }
        assert!(PotentialParams::<f64>::new(300, 30, 0.2, MuMode::Fixed(1.05)).is_err());
    }

    #[test]
    fn params_reject_bad_input() {
        assert!(PotentialParams::<f64>::new(100, 20, 0.0, MuMode::Asymptotic).is_err());
        assert!(PotentialParams::<f64>::new(100, 20, 0.05, MuMode::Fixed(1.0)).is_err());
        assert!(PotentialParams::<f64>::new(100, 0, 0.05, MuMode::Fixed(1.1)).is_err());
        let p = params(2000, 78, 0.05, MuMode::Asymptotic);
        let expected = 1.0 + 6.0 * (78.0f64 * 78.0 / 2000.0) * 2000f64.ln() / (0.05 * 78.0);
        assert!((p.mu - expected).abs() < 1e-12);
    }

    #[test]
    fn bias_rounding() {
        assert_eq!(bias_for_beta(2000, 3.0), 78);
        assert_eq!(bias_for_beta(400, 4.0), 40);
        assert_eq!(bias_for_beta(10000, 3.0), 174);
        assert_eq!(bias_for_beta(500, 3.0), 39);
    }

    #[test]
    fn fresh_node_values() {
        let p = params(500, 39, 0.05, MuMode::Fixed(1.05));
        let s = GameState::new(500, 39).unwrap();
        let v = NodeId(7);
        assert!((balance(&s, &p, v).unwrap() - p.p0).abs() < 1e-12);
        assert!(balanced_breaker_degree(&s, &p, v).abs() < 1e-9);
        assert!(deficit(&s, &p, v).abs() < 1e-9);
        assert!((pot_node(&s, &p, v) - 1.0).abs() < 1e-12);
        assert!((total_potential(&s, &p) - 500.0).abs() < 1e-9);
    }

    #[test]
    fn single_maker_edge_deficit() {
        let p = params(500, 39, 0.05, MuMode::Fixed(1.05));
        let mut s = GameState::new(500, 39).unwrap();
        s.apply_claim(Owner::Maker, s.edge(NodeId(0), NodeId(1))).unwrap();
        let want = p.p0 * (39.0 - 0.5);
        assert!((deficit(&s, &p, NodeId(0)) - want).abs() < 1e-9);
        assert!((balanced_breaker_degree(&s, &p, NodeId(1)) - want).abs() < 1e-9);
        let pot1 = p.mu.powf(want / 39.0);
        assert!((total_potential(&s, &p) - (498.0 + 2.0 * pot1)).abs() < 1e-9);
        // k Breaker edges, no Maker edges
        s.apply_claim(Owner::Breaker, s.edge(NodeId(2), NodeId(3))).unwrap();
        s.apply_claim(Owner::Breaker, s.edge(NodeId(2), NodeId(4))).unwrap();
        assert!((deficit(&s, &p, NodeId(2)) + 2.0).abs() < 1e-9);
    }

    #[test]
    fn deg_star_at_q() {
        let p = params(500, 39, 0.05, MuMode::Fixed(1.05));
        let q = 39.0;
        let want = 500.0 - p.p0 * (q * q * 0.95 * 3.05 / 8.0 - q * q / 2.0);
        assert!((p.deg_star(39) - want).abs() < 1e-9);
    }

    #[test]
    fn balance_edge_cases() {
        let p = params(500, 39, 0.05, MuMode::Fixed(1.05));
        assert_eq!(p.balance_of(0, 0, 500).unwrap(), 0.0);
        // the denominator vanishes exactly at Maker-degree q(1-δ)/2 = 19
        let p40 = params(600, 40, 0.05, MuMode::Fixed(1.05));
        assert_eq!(p40.balance_of(0, 19, 0), Err(GameError::SingularBalance { node: 0, deg_m: 19 }));
        let b = p40.balance_of(0, 18, 0).unwrap();
        let den = 1600.0 * 0.95 * 3.05 - 4.0 * 18.0 * (80.0 - 18.0);
        assert!((b - 8.0 * 600.0 / den).abs() < 1e-9);
        assert!(b > p40.p0);
    }

    #[test]
    fn singular_balance_reported() {
        // q = 4, δ = 1/2: q²(1−δ)(3+δ) = 28 = 4·1·(2·4 − 1)
        let p = params(10, 4, 0.5, MuMode::Fixed(1.1));
        assert_eq!(p.balance_of(3, 1, 0), Err(GameError::SingularBalance { node: 3, deg_m: 1 }));
        assert!(p.balance_of(3, 2, 0).is_ok());
    }

    #[test]
    fn saturated_node_has_zero_potential() {
        let p = params(4, 1, 0.05, MuMode::Fixed(1.2));
        let mut s = GameState::new(4, 1).unwrap();
        s.apply_claim(Owner::Maker, s.edge(NodeId(0), NodeId(1))).unwrap();
        s.apply_claim(Owner::Breaker, s.edge(NodeId(0), NodeId(2))).unwrap();
        s.apply_claim(Owner::Breaker, s.edge(NodeId(0), NodeId(3))).unwrap();
        assert_eq!(pot_node(&s, &p, NodeId(0)), 0.0);
        // unclaimed edge at a saturated endpoint cannot exist; a claimed one is fine
        assert!(pot_edge(&s, &p, s.edge(NodeId(0), NodeId(2))).is_ok());
        let fresh = pot_edge(&s, &p, s.edge(NodeId(2), NodeId(3))).unwrap();
        assert!((fresh - 2.0 * p.pot_of(0, 1)).abs() < 1e-12);
    }

    #[test]
    fn pot_is_mu_when_deficit_is_q() {
        let p = params(500, 39, 0.05, MuMode::Fixed(1.05));
        assert!((p.pot_formula(39.0) - 1.05).abs() < 1e-12);
    }

    #[test]
    fn interpretation_fresh_node_converges() {
        let mut errs = Vec::new();
        for n in [10_000u32, 1_000_000] {
            let p = PotentialParams::<f64>::from_beta(n, 3.0, 0.05, MuMode::Fixed(1.05)).unwrap();
            let rec = balance_interpretation_for(&p, 0, 0, 0).unwrap();
            assert!(rec.in_regime);
            errs.push((rec.ratio / rec.balance - 1.0).abs());
        }
        assert!(errs[1] < errs[0]);
        assert!(errs[1] < 0.02);
    }

    #[test]
    fn interpretation_regimes() {
        let p = params(500, 39, 0.05, MuMode::Fixed(1.05));
        assert!(matches!(balance_interpretation_for(&p, 0, 19, 0), Err(GameError::OutOfRegime { .. })));
        let rec = balance_interpretation_for(&p, 0, 0, 500).unwrap();
        assert!(rec.b_v < 0.0 && rec.ratio < 0.0 && !rec.in_regime);
    }

    #[test]
    fn table_tracks_claims() {
        let p = params(30, 8, 0.05, MuMode::Fixed(1.05));
        let mut s = GameState::new(30, 8).unwrap();
        let mut t = NodePotentialTable::new(&s, &p);
        assert!((t.total() - 30.0).abs() < 1e-12);
        let e = s.edge(NodeId(3), NodeId(4));
        s.apply_claim(Owner::Maker, e).unwrap();
        t.refresh(&s, &p, NodeId(3));
        t.refresh(&s, &p, NodeId(4));
        assert_eq!(t.max_node().unwrap().node, 3);
        assert!((t.total() - total_potential(&s, &p)).abs() < 1e-12);
        assert!(t.resync_total().abs() < 1e-12);
    }

    #[test]
    fn dump_has_header_and_nodes() {
        let p = params(10, 6, 0.05, MuMode::Fixed(1.05));
        let s = GameState::new(10, 6).unwrap();
        let d = dump(&s, &p);
        let js = serde_json::to_value(&d).unwrap();
        assert_eq!(js["header"]["n"], 10);
        assert_eq!(js["nodes"].as_array().unwrap().len(), 10);
        assert!(js["nodes"][0].get("deg_M").is_some());
    }

    #[test]
    fn mu_mode_parse() {
        assert_eq!("asymptotic".parse::<MuMode>().unwrap(), MuMode::Asymptotic);
        assert_eq!("fixed:1.05".parse::<MuMode>().unwrap(), MuMode::Fixed(1.05));
        assert!("fixed:x".parse::<MuMode>().is_err());
    }

    #[test]
    fn f32_evaluation_agrees() {
        let p64 = params(200, 25, 0.05, MuMode::Fixed(1.05));
        let p32 = PotentialParams::<f32>::new(200, 25, 0.05, MuMode::Fixed(1.05)).unwrap();
        for m in 0..12 {
            for b in 0..40 {
                let a = p64.pot_of(m, b);
                let c = p32.pot_of(m, b) as f64;
                assert!((a - c).abs() <= 1e-4 * a.max(1.0));
            }
        }
    }
}
