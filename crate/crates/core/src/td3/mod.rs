//! Twin delayed deep deterministic policy gradient, written directly on
//! `ndarray`.

mod adam;
mod agent;
mod buffer;
mod mlp;
mod train;

pub use adam::Adam;
pub use agent::{
    bootstrap_target, smoothed_action, ActionCritic, Batch, Checkpoint, Td3Agent, Td3Config,
    CHECKPOINT_FORMAT,
};
pub use buffer::{ReplayBuffer, Transition};
pub use mlp::{Dense, ForwardCache, LayerRecord, Mlp, MlpGrads, MlpRecord, OutputActivation};
pub use train::{
    greedy_episode, train, train_with, EnvStep, Environment, EpisodeLog, TrainBudget, TrainError, TrainingLog,
};

#[derive(Debug, thiserror::Error)]
pub enum Td3Error {
    #[error("shape mismatch for {what}: expected {expected}, got {got}")]
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid td3 config field `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),
}
