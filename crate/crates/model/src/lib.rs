//! Two-stage routing policy over multigraphs: a pre-encoding aggregation
//! compresses parallel edges into a latent distance matrix, an
//! edge-attention encoder plus transformer layers produce node encodings,
//! a multi-pointer decoder emits node permutations (with an auxiliary
//! recurrent state estimator where the true rollout state depends on
//! later edge choices), and a light non-autoregressive stage scores each
//! position's parallel edges. Preference conditioning for bi-objective
//! variants runs through per-stage hypernetworks. Training couples the
//! stages with hierarchical REINFORCE.

pub mod config;
pub mod decoder;
pub mod edge_stage;
pub mod encoder;
pub mod error;
pub mod hypernet;
pub mod policy;
pub mod train;

pub use config::ModelConfig;
pub use error::ModelError;
pub use policy::Policy;
pub use train::{evaluate, reward, train, EvalOptions, TrainConfig};
