//! Breaker and Maker strategies. Every strategy is deterministic given its
//! configuration and seed.

mod breaker;
mod maker;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use breaker::{breaker_ce_turn, breaker_potential_turn, ce_bias_sufficient, ce_star_size, preview_breaker_turn};
pub use maker::{maker_ce_star_turn, maker_suite_turn, MakerVariant};

use crate::board::Board;
use crate::error::Result;
use crate::game::{EdgeId, NodeId};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClosingKind {
    /// Closes a new Maker path of length two.
    Path,
    /// Stands in for a path that was already closed; same head.
    Substitute,
    /// Claimed because the head had no unclaimed edge left; neither endpoint
    /// acts as a head.
    Isolation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosingEdge {
    pub edge: EdgeId,
    pub head: NodeId,
    pub tail: NodeId,
    pub kind: ClosingKind,
}

impl ClosingEdge {
    pub fn substitute(&self) -> bool {
        self.kind != ClosingKind::Path
    }
}

/// Breaker's claims for one turn, in the order they were made.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BreakerTurnPlan {
    pub maker_edge: Option<EdgeId>,
    pub closing: Vec<ClosingEdge>,
    pub free: Vec<EdgeId>,
    pub isolation_turn: bool,
    /// Free edges actually claimed.
    pub f: u32,
    /// `q − deg_{M,t−1}(u) − deg_{M,t−1}(v)`.
    pub nominal_f: i64,
    /// Required closing edges left unclaimed because more than q were needed.
    pub shortfall: u32,
    /// Unclaimed edges ran out before q claims were made.
    pub truncated: bool,
}

impl BreakerTurnPlan {
    pub fn claims(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.closing.iter().map(|c| c.edge).chain(self.free.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.closing.len() + self.free.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The turn satisfies every premise of the single-turn analysis.
    pub fn regular(&self) -> bool {
        !self.isolation_turn && !self.truncated && self.shortfall == 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    BreakerPotential,
    BreakerCe,
    MakerCeStar,
    MakerRandom,
    MakerMaxPotential,
    MakerGreedyDegree,
}

impl StrategyKind {
    pub const MAKERS: [StrategyKind; 4] = [
        StrategyKind::MakerCeStar,
        StrategyKind::MakerRandom,
        StrategyKind::MakerMaxPotential,
        StrategyKind::MakerGreedyDegree,
    ];

    pub fn is_maker(self) -> bool {
        !matches!(self, StrategyKind::BreakerPotential | StrategyKind::BreakerCe)
    }

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::BreakerPotential => "breaker-potential",
            StrategyKind::BreakerCe => "breaker-ce",
            StrategyKind::MakerCeStar => "maker-ce-star",
            StrategyKind::MakerRandom => "maker-random",
            StrategyKind::MakerMaxPotential => "maker-max-potential",
            StrategyKind::MakerGreedyDegree => "maker-greedy-degree",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let k = match s {
            "potential" | "breaker-potential" => StrategyKind::BreakerPotential,
            "ce" | "breaker-ce" => StrategyKind::BreakerCe,
            "ce-star" | "maker-ce-star" => StrategyKind::MakerCeStar,
            "random" | "maker-random" => StrategyKind::MakerRandom,
            "max-potential" | "maker-max-potential" => StrategyKind::MakerMaxPotential,
            "greedy-degree" | "maker-greedy-degree" => StrategyKind::MakerGreedyDegree,
            other => return Err(format!("unknown strategy {other:?}")),
        };
        Ok(k)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub kind: StrategyKind,
    #[serde(default)]
    pub seed: u64,
    /// Starting hub of the star Maker.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hub: Option<u32>,
}

impl StrategyConfig {
    pub fn new(kind: StrategyKind) -> Self {
        StrategyConfig { kind, seed: 0, hub: None }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// A Maker strategy together with its private state (hub, generator).
#[derive(Clone, Debug)]
#[allow(clippy::large_enum_variant)]
pub enum MakerPlayer {
    CeStar { hub: NodeId },
    Suite { variant: MakerVariant, rng: ChaCha8Rng },
}

impl MakerPlayer {
    pub fn new(config: &StrategyConfig) -> Result<Self> {
        let variant = match config.kind {
            StrategyKind::MakerCeStar => {
                return Ok(MakerPlayer::CeStar { hub: NodeId(config.hub.unwrap_or(0)) });
            }
            StrategyKind::MakerRandom => MakerVariant::Random,
            StrategyKind::MakerMaxPotential => MakerVariant::MaxPotential,
            StrategyKind::MakerGreedyDegree => MakerVariant::GreedyDegree,
            other => return Err(crate::error::GameError::InvalidParams(format!("{other} is not a Maker strategy"))),
        };
        Ok(MakerPlayer::Suite { variant, rng: ChaCha8Rng::seed_from_u64(config.seed) })
    }

    pub fn choose<R: Real>(&mut self, board: &Board<R>) -> Result<EdgeId> {
        match self {
            MakerPlayer::CeStar { hub } => maker_ce_star_turn(board, hub),
            MakerPlayer::Suite { variant, rng } => maker_suite_turn(board, *variant, rng),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BreakerPlayer {
    Potential,
    Ce,
}

impl BreakerPlayer {
    pub fn new(config: &StrategyConfig) -> Result<Self> {
        match config.kind {
            StrategyKind::BreakerPotential => Ok(BreakerPlayer::Potential),
            StrategyKind::BreakerCe => Ok(BreakerPlayer::Ce),
            other => Err(crate::error::GameError::InvalidParams(format!("{other} is not a Breaker strategy"))),
        }
    }

    /// Claims Breaker's edges for the turn that began with `maker_edge`.
    pub fn respond<R: Real>(&self, board: &mut Board<R>, maker_edge: EdgeId) -> Result<BreakerTurnPlan> {
        match self {
            BreakerPlayer::Potential => breaker_potential_turn(board, maker_edge),
            BreakerPlayer::Ce => breaker_ce_turn(board, maker_edge),
        }
    }
}
