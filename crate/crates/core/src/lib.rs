//! Simulation and verification tools for the biased (n, q) Maker-Breaker
//! triangle game on K_n.
//!
//! The potential machinery is generic over the floating point type ([`Real`]);
//! the aliases at the crate root fix it to `f64`, which is what the harness
//! and the CLI use.

pub mod board;
pub mod episode;
pub mod error;
pub mod game;
pub mod harness;
pub mod ledger;
pub mod potential;
pub mod rank;
pub mod scalar;
pub mod solver;
pub mod strategy;

pub use error::{GameError, Result};
pub use game::{EdgeId, GameState, MoveRecord, NodeId, Owner};
pub use potential::MuMode;
pub use scalar::Real;
pub use strategy::{BreakerTurnPlan, StrategyConfig, StrategyKind};

pub type PotentialParams = potential::PotentialParams<f64>;
pub type PotentialParamsF32 = potential::PotentialParams<f32>;
pub type NodePotentialTable = potential::NodePotentialTable<f64>;
pub type Board = board::Board<f64>;
pub type BoardF32 = board::Board<f32>;
pub type TurnLedger = ledger::TurnLedger<f64>;
pub type TurnLedgerF32 = ledger::TurnLedger<f32>;
pub type EpisodeTracker = episode::EpisodeTracker<f64>;
