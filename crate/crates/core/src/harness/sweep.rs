use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GameError, Result};
use crate::potential::MuMode;
use crate::strategy::{StrategyConfig, StrategyKind};

use super::config::{BiasSpec, CheckFlags, EpisodeSpec, RunConfig};
use super::run::{run_match_with, MatchRecord, MatchSinks, Winner};
use super::seed::match_seed;

fn default_delta() -> f64 {
    0.05
}

fn default_mu() -> MuMode {
    MuMode::Fixed(1.05)
}

fn default_reps() -> u32 {
    1
}

/// A grid of matches. Every combination of `n`, bias, Maker and Breaker is
/// one cell; biases come from `q`, `beta` and `q_over_sqrt_n` (rounded up).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    #[serde(default)]
    pub n: Vec<u32>,
    #[serde(default)]
    pub q: Vec<u32>,
    #[serde(default)]
    pub beta: Vec<f64>,
    #[serde(default)]
    pub q_over_sqrt_n: Vec<f64>,
    #[serde(default)]
    pub makers: Vec<StrategyKind>,
    #[serde(default)]
    pub breakers: Vec<StrategyKind>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_mu")]
    pub mu: MuMode,
    #[serde(default = "default_reps")]
    pub reps: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub checks: CheckFlags,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            n: Vec::new(),
            q: Vec::new(),
            beta: Vec::new(),
            q_over_sqrt_n: Vec::new(),
            makers: Vec::new(),
            breakers: Vec::new(),
            delta: default_delta(),
            mu: default_mu(),
            reps: default_reps(),
            seed: 0,
            checks: CheckFlags::default(),
        }
    }
}

/// One grid cell before its games are played.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub index: u64,
    pub n: u32,
    pub q: u32,
    pub maker: StrategyKind,
    pub breaker: StrategyKind,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| GameError::InvalidParams(format!("sweep config: {e}")))
    }

    /// Cells in grid order; duplicate biases for one `n` are merged.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        let mut cells = Vec::new();
        for &n in &self.n {
            let mut qs: Vec<u32> = self.q.clone();
            for &b in &self.beta {
                qs.push(BiasSpec::Beta(b).resolve(n)?);
            }
            for &r in &self.q_over_sqrt_n {
                if !(r > 0.0 && r.is_finite()) {
                    return Err(GameError::InvalidParams(format!("q/sqrt(n) = {r} must be positive")));
                }
                qs.push((r * (n as f64).sqrt() - 1e-9).ceil().max(1.0) as u32);
            }
            let mut seen = Vec::new();
            qs.retain(|q| {
                let fresh = !seen.contains(q);
                seen.push(*q);
                fresh
            });
            for &q in &qs {
                for &maker in &self.makers {
                    for &breaker in &self.breakers {
                        cells.push(Cell { index: cells.len() as u64, n, q, maker, breaker });
                    }
                }
            }
        }
        Ok(cells)
    }

    fn run_config(&self, cell: &Cell, rep: u32) -> RunConfig {
        let seed = match_seed(self.seed, cell.index, rep as u64);
        RunConfig {
            delta: self.delta,
            mu: self.mu,
            episode: EpisodeSpec::Auto,
            maker: StrategyConfig::new(cell.maker).with_seed(seed),
            breaker: StrategyConfig::new(cell.breaker).with_seed(seed),
            seed,
            checks: self.checks,
            ..RunConfig::new(cell.n, BiasSpec::Q(cell.q))
        }
    }
}

/// One row of the sweep summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: u32,
    pub q: u32,
    pub q_over_sqrt_n: f64,
    pub maker: StrategyKind,
    pub breaker: StrategyKind,
    pub games: u32,
    pub breaker_wins: u32,
    pub win_rate: f64,
    pub max_pot_over_n: f64,
    pub failed_checks: u64,
    pub errors: u32,
}

#[derive(Clone, Debug, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub records: Vec<MatchRecord>,
    /// `(cell index, repetition, message)` for games that could not be played.
    pub errors: Vec<(u64, u32, String)>,
}

impl SweepResult {
    pub fn failed_checks(&self) -> u64 {
        self.rows.iter().map(|r| r.failed_checks).sum()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        w.write_record([
            "n",
            "q",
            "q_over_sqrt_n",
            "maker",
            "breaker",
            "games",
            "breaker_wins",
            "win_rate",
            "max_pot_over_n",
            "failed_checks",
            "errors",
        ])?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()
    }
}

/// Plays every game of the grid, in parallel across games. Results do not
/// depend on scheduling: each game's seed is derived from its cell and
/// repetition.
pub fn sweep(config: &SweepConfig) -> Result<SweepResult> {
    let cells = config.cells()?;
    let jobs: Vec<(usize, u32)> = (0..cells.len()).flat_map(|c| (0..config.reps).map(move |r| (c, r))).collect();
    let outcomes: Vec<Result<MatchRecord>> = jobs
        .par_iter()
        .map(|&(c, r)| run_match_with(&config.run_config(&cells[c], r), MatchSinks::default()))
        .collect();

    let mut result = SweepResult::default();
    let mut per_cell: Vec<Vec<MatchRecord>> = vec![Vec::new(); cells.len()];
    let mut errors = vec![0u32; cells.len()];
    for (&(c, r), outcome) in jobs.iter().zip(outcomes) {
        match outcome {
            Ok(rec) => per_cell[c].push(rec),
            Err(e) => {
                errors[c] += 1;
                result.errors.push((cells[c].index, r, e.to_string()));
            }
        }
    }
    for (cell, records) in cells.iter().zip(per_cell) {
        let games = records.len() as u32;
        let breaker_wins = records.iter().filter(|r| r.winner == Winner::Breaker).count() as u32;
        result.rows.push(SweepRow {
            n: cell.n,
            q: cell.q,
            q_over_sqrt_n: cell.q as f64 / (cell.n as f64).sqrt(),
            maker: cell.maker,
            breaker: cell.breaker,
            games,
            breaker_wins,
            win_rate: if games == 0 { 0.0 } else { breaker_wins as f64 / games as f64 },
            max_pot_over_n: records.iter().map(|r| r.max_pot_over_n).fold(0.0, f64::max),
            failed_checks: records.iter().map(|r| r.failures()).sum(),
            errors: errors[cell.index as usize],
        });
        result.records.extend(records);
    }
    Ok(result)
}
