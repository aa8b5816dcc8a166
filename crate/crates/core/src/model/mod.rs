//! Neural insight ranker: a four-part insight encoder, a key-value memory
//! over all insights of a table, an MLP scorer and per-table training.

mod network;
mod train;
mod vocab;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernel::KernelError;

pub use network::{
    attend, bag_features, mlp_scores, normalize_sequence, significance_features, softmax_list_loss, subspace_features,
    summed_l2_loss, EncodedInsight, Forward, ModelVars, RankModel, RankedInsight, TableBatch, TableMemory, PARAM_NAMES,
};
pub(crate) use network::rank_scores;
pub use train::{fit, train, EpochRecord, StepUnit, TrainConfig, TrainLog};
pub use vocab::Vocabulary;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("token `{0}` is not in the vocabulary")]
    UnknownToken(String),
    #[error("subspace value sequence is empty")]
    EmptySequence,
    #[error("memory has no slots")]
    EmptyMemory,
    #[error("memory has {keys} keys but {values} values")]
    MemoryMismatch { keys: usize, values: usize },
    #[error("table has no insights")]
    EmptyTable,
    #[error("insights of tables `{0}` and `{1}` in one group")]
    MixedTables(String, String),
    #[error("training split has no tables")]
    EmptyTrainingSet,
    #[error("expected {expected} gold scores, got {got}")]
    GoldCount { expected: usize, got: usize },
    #[error("invalid model config: {0}")]
    Config(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("{path}: {msg}")]
    Checkpoint { path: PathBuf, msg: String },
}

impl ModelError {
    pub(crate) fn checkpoint(path: &Path, err: impl std::fmt::Display) -> Self {
        ModelError::Checkpoint {
            path: path.to_path_buf(),
            msg: err.to_string(),
        }
    }

    pub fn is_data_error(&self) -> bool {
        !matches!(self, ModelError::Kernel(_))
    }
}

/// Which parts of the network are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Significance, type and subspace features scored directly.
    Cnn,
    /// Adds header semantics to the representation; no memory read.
    Semantics,
    /// Full model: semantics-keyed memory read over the table.
    Memory,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Cnn, Variant::Semantics, Variant::Memory];

    pub fn method_name(self) -> &'static str {
        match self {
            Variant::Cnn => "TAR_cnn",
            Variant::Semantics => "TAR_semantics",
            Variant::Memory => "TAR_memory",
        }
    }

    pub fn uses_semantics(self) -> bool {
        self != Variant::Cnn
    }

    pub fn uses_memory(self) -> bool {
        self == Variant::Memory
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "cnn" => Ok(Variant::Cnn),
            "semantics" => Ok(Variant::Semantics),
            "memory" => Ok(Variant::Memory),
            other => Err(format!("unknown variant `{other}` (cnn, semantics, memory)")),
        }
    }
}

/// Per-table loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ListLoss {
    /// `1/2 * sum (score - gold)^2`.
    #[default]
    SummedL2,
    /// Cross-entropy between softmax(gold) and softmax(score) over the table.
    SoftmaxList,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub variant: Variant,
    /// Embedding size `d`.
    pub dim: usize,
    pub filters: usize,
    pub window: usize,
    /// Fixed subspace sequence length after padding or truncation.
    pub seq_len: usize,
    pub hidden: usize,
    /// Parameters start uniform in `[-init_range, init_range]`.
    pub init_range: f64,
    pub list_loss: ListLoss,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            variant: Variant::Memory,
            dim: 64,
            filters: 64,
            window: 3,
            seq_len: 16,
            hidden: 64,
            init_range: 0.1,
            list_loss: ListLoss::SummedL2,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = [
            ("dim", self.dim),
            ("filters", self.filters),
            ("window", self.window),
            ("seq_len", self.seq_len),
            ("hidden", self.hidden),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(ModelError::Config(format!("{name} must be positive")));
        }
        if self.seq_len < self.window {
            return Err(ModelError::Config(format!(
                "seq_len {} is shorter than window {}",
                self.seq_len, self.window
            )));
        }
        if !self.init_range.is_finite() || self.init_range < 0.0 {
            return Err(ModelError::Config("init_range must be finite and non-negative".into()));
        }
        Ok(())
    }

    /// Number of convolution positions over one sequence.
    pub fn offsets(&self) -> usize {
        self.seq_len - self.window + 1
    }
}
