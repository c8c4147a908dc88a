//! Tracking of high-potential episodes: the window that opens when POT first
//! exceeds n and closes at the earliest of three stopping turns.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::board::{Board, ClaimEffect};
use crate::error::{GameError, Result};
use crate::ledger::{compute_c, TurnLedger};
use crate::potential::PotentialParams;
use crate::scalar::{approx_le, Real};

/// Soft tolerance for the end-of-episode comparison.
pub const EPISODE_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeParams {
    pub gamma: f64,
    pub epsilon: f64,
    pub eta: f64,
}

impl EpisodeParams {
    /// `η = (1−μp0)/2`, `γ = 1/2` and the largest `ε = 2^{−k}` within 90% of
    /// the admissible range. `None` when `μp0 ≥ 1`.
    pub fn defaults(mu_p0: f64) -> Option<Self> {
        if !(mu_p0 > 0.0 && mu_p0 < 1.0) {
            return None;
        }
        let eta = (1.0 - mu_p0) / 2.0;
        let room = 0.9 * ((1.0 - eta) / mu_p0 - 1.0);
        let mut epsilon = 1.0;
        while epsilon > room {
            epsilon /= 2.0;
        }
        Some(EpisodeParams { gamma: 0.5, epsilon, eta })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeOutcome {
    pub id: u32,
    pub t0: u32,
    /// `None` if the game ended first.
    pub t_star: Option<u32>,
    /// Which of `t1`, `t2`, `t3` fired at `t*`.
    pub fired: Vec<String>,
    pub anchor: u32,
    pub pot_ref: f64,
    pub pot_star: Option<f64>,
    pub holds: Option<bool>,
    pub critical_turns: u32,
}

#[derive(Clone, Debug)]
struct Active<R: Real> {
    id: u32,
    t0: u32,
    anchor: u32,
    pot_ref: R,
    anchor_ref: R,
    crit: u32,
    inc_sum: R,
    minima: HashMap<u32, R>,
}

/// What happened in one turn.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TurnEvents {
    pub episode_id: Option<u32>,
    pub events: Vec<&'static str>,
    pub crit_stacking: Option<bool>,
    pub crit_increase: Option<bool>,
}

impl TurnEvents {
    pub fn label(&self) -> String {
        self.events.join("|")
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckCount {
    pub checked: u64,
    pub failed: u64,
}

impl CheckCount {
    pub fn record(&mut self, ok: bool) {
        self.checked += 1;
        if !ok {
            self.failed += 1;
        }
    }
}

#[derive(Clone, Debug)]
pub struct EpisodeTracker<R: Real> {
    pub params: EpisodeParams,
    pub c: u32,
    n: u32,
    mu: R,
    mu_p0: R,
    next_id: u32,
    active: Option<Active<R>>,
    pub outcomes: Vec<EpisodeOutcome>,
    pub crit_stacking: CheckCount,
    pub crit_increase: CheckCount,
    pub violations: u32,
}

impl<R: Real> EpisodeTracker<R> {
    pub fn new(potential: &PotentialParams<R>, params: EpisodeParams) -> Result<Self> {
        let mu_p0 = (potential.mu * potential.p0).as_f64();
        if mu_p0 >= 1.0 {
            return Err(GameError::InvalidParams(format!("episode tracking needs mu*p0 < 1, got {mu_p0}")));
        }
        if !(params.eta > 0.0 && params.eta < 1.0 - mu_p0) {
            return Err(GameError::InvalidParams(format!(
                "eta = {} must lie in (0, 1 - mu*p0) = (0, {})",
                params.eta,
                1.0 - mu_p0
            )));
        }
        let c = compute_c(mu_p0, params.eta, params.epsilon, params.gamma)?;
        Ok(EpisodeTracker {
            params,
            c,
            n: potential.n,
            mu: potential.mu,
            mu_p0: potential.mu * potential.p0,
            next_id: 1,
            active: None,
            outcomes: Vec::new(),
            crit_stacking: CheckCount::default(),
            crit_increase: CheckCount::default(),
            violations: 0,
        })
    }

    /// Tracker with default parameters, or `None` when `μp0 ≥ 1`.
    pub fn with_defaults(potential: &PotentialParams<R>) -> Result<Option<Self>> {
        match EpisodeParams::defaults((potential.mu * potential.p0).as_f64()) {
            Some(p) => Self::new(potential, p).map(Some),
            None => Ok(None),
        }
    }

    pub fn is_active(&self) -> bool {
        self.active.is_some()
    }

    /// Feeds one completed turn: its ledger, the claim effects in the order
    /// they were made, and the board after the turn.
    pub fn update(&mut self, ledger: &TurnLedger<R>, effects: &[ClaimEffect<R>], board: &Board<R>) -> TurnEvents {
        let mut ev = TurnEvents::default();
        let t = ledger.turn;
        let n = R::of_int(self.n as u64);
        let opening = self.active.is_none() && ledger.pot_after > n && ledger.pot_before <= n;
        if opening {
            let [a, b] = ledger.ends;
            let anchor =
                if a.pot_before > b.pot_before || (a.pot_before == b.pot_before && a.node < b.node) { a } else { b };
            self.active = Some(Active {
                id: self.next_id,
                t0: t,
                anchor: anchor.node,
                pot_ref: ledger.pot_before,
                anchor_ref: anchor.pot_before,
                crit: 0,
                inc_sum: R::zero(),
                minima: HashMap::new(),
            });
            self.next_id += 1;
            ev.events.push("t0");
        }
        let Some(ep) = self.active.as_mut() else { return ev };
        ev.episode_id = Some(ep.id);

        // t2: some node reached (1+ε) times its minimum since t0
        let grow = R::one() + R::of(self.params.epsilon);
        let mut t2 = false;
        let mut seen: HashMap<u32, R> = HashMap::new();
        for fx in effects {
            for c in &fx.ends {
                seen.entry(c.node.0).or_insert(c.pot_before);
            }
        }
        for (&w, &pre) in &seen {
            let now = board.pot(crate::game::NodeId(w));
            if t > ep.t0 {
                let low = *ep.minima.get(&w).unwrap_or(&pre);
                if now >= grow * low {
                    t2 = true;
                }
                ep.minima.insert(w, low.min(now));
            } else {
                ep.minima.insert(w, now);
            }
        }

        let t1 = board.pot(crate::game::NodeId(ep.anchor)) <= (R::one() - R::of(self.params.gamma)) * ep.anchor_ref;
        if ledger.critical {
            ep.crit += 1;
            ep.inc_sum = ep.inc_sum + ledger.inc;
            let bound = R::of(2.0) * R::of_int(self.c as u64) * (self.mu - R::one()) * ep.anchor_ref;
            let ok = approx_le(ep.inc_sum, bound, R::loose_tolerance());
            self.crit_increase.record(ok);
            ev.crit_increase = Some(ok);
        }
        if !t2 {
            let ratio = grow * self.mu_p0 / (R::one() - R::of(self.params.eta));
            let bound = ratio.powi(ep.crit as i32) * R::of(2.0) * ep.anchor_ref;
            let top = board.max_potential_open_edge().map_or(R::zero(), |e| board.pot_edge(e));
            let ok = ep.crit == 0 || top < bound;
            self.crit_stacking.record(ok);
            ev.crit_stacking = Some(ok);
        }
        let t3 = ep.crit >= self.c;
        for (hit, name) in [(t1, "t1"), (t2, "t2"), (t3, "t3")] {
            if hit {
                ev.events.push(name);
            }
        }
        if t1 || t2 || t3 {
            let holds = approx_le(ledger.pot_after, ep.pot_ref, R::of(EPISODE_TOLERANCE));
            ev.events.push("tstar");
            if !holds {
                ev.events.push("violation");
                self.violations += 1;
            }
            let fired = ev.events.iter().filter(|e| matches!(**e, "t1" | "t2" | "t3")).map(|e| e.to_string()).collect();
            self.outcomes.push(EpisodeOutcome {
                id: ep.id,
                t0: ep.t0,
                t_star: Some(t),
                fired,
                anchor: ep.anchor,
                pot_ref: ep.pot_ref.as_f64(),
                pot_star: Some(ledger.pot_after.as_f64()),
                holds: Some(holds),
                critical_turns: ep.crit,
            });
            self.active = None;
        }
        ev
    }

    /// Records an episode still open when the game ended.
    pub fn finish(&mut self) {
        if let Some(ep) = self.active.take() {
            self.outcomes.push(EpisodeOutcome {
                id: ep.id,
                t0: ep.t0,
                t_star: None,
                fired: Vec::new(),
                anchor: ep.anchor,
                pot_ref: ep.pot_ref.as_f64(),
                pot_star: None,
                holds: None,
                critical_turns: ep.crit,
            });
        }
    }
}
