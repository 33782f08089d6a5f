//! Minimal differentiable function approximation for the actor-critic
//! stack: tanh MLPs with exact reverse-mode gradients, Adam updates, and
//! the squashed-Gaussian policy head.

mod adam;
mod checkpoint;
mod gaussian;
mod mlp;

pub use adam::AdamState;
pub use checkpoint::{load_mlp, read_mlp, save_mlp, write_mlp};
pub use gaussian::{
    log_prob_of,
    sample_action, squash_mean, SquashedSample, LOG_STD_MAX, LOG_STD_MIN, SQUASH_EPS,
};
pub use mlp::{BackwardScratch, ForwardTrace, Mlp, MlpGradients};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite gradient encountered")]
    NonFiniteGradient,
    #[error("checkpoint parse error: {0}")]
    CheckpointFormat(String),
    #[error("checkpoint io error: {0}")]
    CheckpointIo(#[from] std::io::Error),
}
