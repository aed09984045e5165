//! Minimal dense-tensor substrate with reverse-mode gradients.
//!
//! All tensors are two-dimensional `[rows, cols]` matrices of `f64`
//! (scalars are `[1, 1]`, row vectors `[1, d]`). Operations execute
//! eagerly and record themselves on a shared tape; [`Tape::backward`]
//! walks the tape in reverse and accumulates parameter gradients into a
//! [`ParamStore`], which also owns the Adam moments and the checkpoint
//! format. Every operation checks its output for NaN/Inf and errors
//! instead of propagating poison.

pub mod adam;
pub mod checkpoint;
pub mod error;
pub mod gradcheck;
pub mod nn;
pub mod params;
pub mod tape;

pub use adam::AdamConfig;
pub use error::DiffError;
pub use params::{ParamId, ParamStore};
pub use tape::{Tape, Tensor};
