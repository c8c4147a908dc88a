use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::board::Board;
use crate::error::{GameError, Result};
use crate::game::{EdgeId, NodeId};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MakerVariant {
    Random,
    MaxPotential,
    GreedyDegree,
}

/// Smallest unclaimed edge that completes a Maker triangle, if any.
fn winning_edge<R: Real>(board: &Board<R>) -> Option<EdgeId> {
    board.state().threats().first().copied()
}

/// Star strategy: claim edges at a fixed hub, completing a triangle as soon as
/// an open path allows it. When the hub saturates, the node of largest
/// Maker-degree that still has unclaimed edges becomes the new hub.
pub fn maker_ce_star_turn<R: Real>(board: &Board<R>, hub: &mut NodeId) -> Result<EdgeId> {
    if let Some(e) = winning_edge(board) {
        return Ok(e);
    }
    let s = board.state();
    if hub.0 >= s.n() || s.unclaimed_degree(*hub) == 0 {
        *hub = board.max_maker_degree_open_node().ok_or(GameError::Exhausted)?;
    }
    s.first_open_edge_at(*hub).ok_or(GameError::Exhausted)
}

pub fn maker_suite_turn<R: Real>(board: &Board<R>, variant: MakerVariant, rng: &mut ChaCha8Rng) -> Result<EdgeId> {
    if let Some(e) = winning_edge(board) {
        return Ok(e);
    }
    let s = board.state();
    if s.unclaimed_count() == 0 {
        return Err(GameError::Exhausted);
    }
    let pick = match variant {
        MakerVariant::Random => s.nth_open_edge(rng.gen_range(0..s.unclaimed_count())),
        MakerVariant::MaxPotential => board.max_potential_open_edge(),
        MakerVariant::GreedyDegree => board.max_maker_degree_open_edge(),
    };
    pick.ok_or(GameError::Exhausted)
}
