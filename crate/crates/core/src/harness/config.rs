use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::episode::EpisodeParams;
use crate::error::{GameError, Result};
use crate::potential::{bias_for_beta, MuMode, PotentialParams};
use crate::strategy::{StrategyConfig, StrategyKind};

/// Breaker's bias, given directly or through `q = ⌈√(βn)⌉`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BiasSpec {
    Q(u32),
    Beta(f64),
}

impl BiasSpec {
    pub fn resolve(self, n: u32) -> Result<u32> {
        match self {
            BiasSpec::Q(q) => Ok(q),
            BiasSpec::Beta(b) if b > 0.0 && b.is_finite() => Ok(bias_for_beta(n, b)),
            BiasSpec::Beta(b) => Err(GameError::InvalidParams(format!("beta = {b} must be positive"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EpisodeSpec {
    /// Default parameters when `μp0 < 1`, otherwise no tracking.
    #[default]
    Auto,
    Off,
    Manual(EpisodeParams),
}

/// Which runtime assertion suites count towards a match passing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CheckFlags {
    /// Ledger identity and `restdiff ≥ 0` on every turn.
    pub ledger: bool,
    /// Single-claim, single-turn and critical-turn bounds (potential Breaker).
    pub lemmas: bool,
    /// End-of-episode comparison and the in-episode spot checks.
    pub episodes: bool,
    /// Breaker wins, POT stays below 2n and no node reaches Maker-degree ⌈q/2⌉.
    pub theorems: bool,
}

impl Default for CheckFlags {
    fn default() -> Self {
        CheckFlags { ledger: true, lemmas: true, episodes: true, theorems: false }
    }
}

fn default_delta() -> f64 {
    0.05
}

fn default_mu() -> MuMode {
    MuMode::Fixed(1.05)
}

fn default_reps() -> u32 {
    1
}

fn default_maker() -> StrategyConfig {
    StrategyConfig::new(StrategyKind::MakerRandom)
}

fn default_breaker() -> StrategyConfig {
    StrategyConfig::new(StrategyKind::BreakerPotential)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n: u32,
    pub bias: BiasSpec,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_mu")]
    pub mu: MuMode,
    #[serde(default)]
    pub episode: EpisodeSpec,
    #[serde(default = "default_maker")]
    pub maker: StrategyConfig,
    #[serde(default = "default_breaker")]
    pub breaker: StrategyConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_reps")]
    pub repetitions: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ledger: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moves: Option<PathBuf>,
    #[serde(default)]
    pub checks: CheckFlags,
}

impl RunConfig {
    pub fn new(n: u32, bias: BiasSpec) -> Self {
        RunConfig {
            n,
            bias,
            delta: default_delta(),
            mu: default_mu(),
            episode: EpisodeSpec::Auto,
            maker: default_maker(),
            breaker: default_breaker(),
            seed: 0,
            repetitions: 1,
            ledger: None,
            out: None,
            moves: None,
            checks: CheckFlags::default(),
        }
    }

    pub fn with_players(mut self, maker: StrategyKind, breaker: StrategyKind) -> Self {
        self.maker = StrategyConfig { kind: maker, ..self.maker };
        self.breaker = StrategyConfig { kind: breaker, ..self.breaker };
        self
    }

    pub fn with_mu(mut self, mu: MuMode) -> Self {
        self.mu = mu;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Checks the whole configuration and builds the potential parameters.
    pub fn resolve(&self) -> Result<PotentialParams<f64>> {
        if !self.maker.kind.is_maker() {
            return Err(GameError::InvalidParams(format!("maker strategy {} belongs to Breaker", self.maker.kind)));
        }
        if self.breaker.kind.is_maker() {
            return Err(GameError::InvalidParams(format!("breaker strategy {} belongs to Maker", self.breaker.kind)));
        }
        if self.n < 3 {
            return Err(GameError::InvalidParams(format!("n = {} must be at least 3", self.n)));
        }
        let q = self.bias.resolve(self.n)?;
        PotentialParams::new(self.n, q, self.delta, self.mu)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| GameError::InvalidParams(format!("config: {e}")))
    }
}
