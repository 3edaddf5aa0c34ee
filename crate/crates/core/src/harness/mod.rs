//! Experiment plumbing: configuration, the online learning loop, logs,
//! parameter sweeps and exact analysis reports.

pub mod analyze;
pub mod config;
pub mod log;
pub mod run;
pub mod sweep;

pub use config::RunConfig;
pub use log::{LogRow, RunLog};
pub use run::{run, run_detailed, RunOutcome};
pub use sweep::{sweep, sweep_in_memory, RankBy, SweepSpec, SweepSummary};

use thiserror::Error;

use crate::actors::ActorError;
use crate::critics::CriticError;
use crate::emphasis::EmphasisError;
use crate::env::EnvError;
use crate::features::FeatureError;
use crate::mdp::MdpError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("log: {0}")]
    Log(String),
    #[error("sweep: {0}")]
    Sweep(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Mdp(#[from] MdpError),
    #[error(transparent)]
    Actor(#[from] ActorError),
    #[error(transparent)]
    Critic(#[from] CriticError),
    #[error(transparent)]
    Emphasis(#[from] EmphasisError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
