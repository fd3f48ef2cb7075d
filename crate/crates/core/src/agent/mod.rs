//! Signal controllers: a Q-learning agent trained from scratch and the
//! fixed-time and random baselines it is compared against.

mod baseline;
mod checkpoint;
mod dqn;
mod mlp;
mod replay;

use thiserror::Error;

pub use baseline::{FixedTimePolicy, RandomPolicy, Stage};
pub use checkpoint::{config_hash, Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use dqn::{
    greedy_score, masked_argmax, select_action, td_loss, td_loss_with_grad, td_target, train, DqnPolicy, EpisodeStats,
    GreedyScore, QNetwork, TrainConfig, TrainOutcome,
};
pub use mlp::{Dense, Mlp, Sgd, Trace};
pub use replay::{ReplayBuffer, Transition};

use crate::metrics::MetricsError;
use crate::sim::SimError;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("Q-network produced a non-finite output")]
    NonFiniteOutput,
    #[error("training diverged at step {step}")]
    Divergence { step: u64 },
    #[error("no valid action to choose from")]
    NoValidAction,
    #[error("invalid agent config: {0}")]
    Config(String),
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PartialEq for AgentError {
    fn eq(&self, other: &Self) -> bool {
        self.to_string() == other.to_string()
    }
}
