//! Match runner, sweeps and the verification suite.

pub mod config;
pub mod run;
pub mod seed;
pub mod sweep;
pub mod verify;

pub use config::{BiasSpec, CheckFlags, EpisodeSpec, RunConfig};
pub use run::{play_position, run_match, run_match_with, MatchRecord, MatchSinks, Winner};
pub use seed::match_seed;
pub use sweep::{sweep, SweepConfig, SweepResult, SweepRow};
pub use verify::{interpret, verify, Snapshot, VerifyOptions, VerifyReport};
