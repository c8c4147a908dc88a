use thiserror::Error;

use crate::game::{NodeId, Owner};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("invalid node pair ({u}, {v}) for n = {n}")]
    InvalidNode { u: u32, v: u32, n: u32 },
    #[error("edge index {0} out of range")]
    InvalidEdge(u32),
    #[error("illegal move: edge {edge:?} already owned by {owner:?}")]
    IllegalMove { edge: (NodeId, NodeId), owner: Owner },
    #[error("cannot claim an edge for {0:?}")]
    InvalidPlayer(Owner),
    #[error("no unclaimed edges remain")]
    Exhausted,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("balance of node {node} is singular at Maker-degree {deg_m}")]
    SingularBalance { node: u32, deg_m: u32 },
    #[error("node {node} outside the interpretation regime: {reason}")]
    OutOfRegime { node: u32, reason: String },
    #[error("turn replay mismatch: {0}")]
    Replay(String),
    #[error("malformed move log line {line}: {reason}")]
    MoveLog { line: usize, reason: String },
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T, E = GameError> = std::result::Result<T, E>;
