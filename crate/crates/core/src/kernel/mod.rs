//! Dense rank-2 tensors with tape-based reverse-mode differentiation, the
//! Adam optimizer, a finite-difference gradient checker and parameter
//! checkpoints.

mod adam;
mod gradcheck;
mod graph;
mod params;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use gradcheck::{check_gradients, GradCheckConfig, GradCheckReport};
pub use graph::{Gradients, Graph, Var};
pub use params::{load_params, params_from_json, params_to_json, save_params, ParamSet, CHECKPOINT_VERSION};
pub use tensor::Tensor;

use thiserror::Error;

pub type Shape = (usize, usize);

#[derive(Debug, Error, PartialEq)]
pub enum KernelError {
    #[error("{op}: incompatible shapes {left:?} and {right:?}")]
    ShapeMismatch { op: &'static str, left: Shape, right: Shape },
    #[error("tensor shape {rows}x{cols} does not match {len} values")]
    InvalidShape { rows: usize, cols: usize, len: usize },
    #[error("{op}: {msg}")]
    InvalidArgument { op: &'static str, msg: String },
    #[error("backward needs a scalar loss, got shape {0:?}")]
    NonScalarLoss(Shape),
    #[error("backward already ran on this tape; reset it first")]
    BackwardAlreadyRun,
    #[error("variable {0} does not belong to this tape")]
    UnknownVar(usize),
    #[error("gradient count {grads} does not match parameter count {params}")]
    ParamCount { params: usize, grads: usize },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}
