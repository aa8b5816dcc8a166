//! Insight extraction from multi-dimensional tables, weak labeling against
//! report text, and a memory-network ranker with significance baselines.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the common instantiations.

pub mod baselines;
pub mod config;
pub mod error;
pub mod eval;
pub mod extract;
pub mod io;
pub mod kernel;
pub mod model;
pub mod pipeline;
pub mod scalar;
pub mod split;
pub mod stats;
pub mod synth;
pub mod table;
pub mod text;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Tensor64 = kernel::Tensor<f64>;
pub type Tensor32 = kernel::Tensor<f32>;
pub type Graph64 = kernel::Graph<f64>;
pub type Graph32 = kernel::Graph<f32>;
pub type RankModel64 = model::RankModel<f64>;
pub type RankModel32 = model::RankModel<f32>;
