use polyroute_core::CoreError;
use polyroute_diff::DiffError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Core(#[from] CoreError),

    #[error(transparent)]
    Diff(#[from] DiffError),

    #[error("config error: {0}")]
    Config(String),

    #[error("no feasible node at step {step} of rollout {rollout}")]
    NoFeasibleNode { rollout: usize, step: usize },

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, ModelError>;
