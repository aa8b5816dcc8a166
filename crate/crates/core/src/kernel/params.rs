use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{KernelError, Tensor};
use crate::Scalar;

pub const CHECKPOINT_VERSION: u32 = 1;

/// Named parameter tensors in a fixed order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamSet<T> {
    entries: Vec<(String, Tensor<T>)>,
}

impl<T: Scalar> ParamSet<T> {
    pub fn new() -> Self {
        ParamSet { entries: Vec::new() }
    }

    /// Appends a parameter; returns its position.
    pub fn insert(&mut self, name: impl Into<String>, value: Tensor<T>) -> usize {
        self.entries.push((name.into(), value));
        self.entries.len() - 1
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<T>> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor<T>> {
        self.entries.iter_mut().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|(n, _)| n == name)
    }

    pub fn tensor(&self, i: usize) -> &Tensor<T> {
        &self.entries[i].1
    }

    pub fn tensor_mut(&mut self, i: usize) -> &mut Tensor<T> {
        &mut self.entries[i].1
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<T>)> {
        self.entries.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn shapes(&self) -> Vec<(usize, usize)> {
        self.entries.iter().map(|(_, t)| t.shape()).collect()
    }
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    version: u32,
    params: Vec<ParamEntry>,
}

#[derive(Serialize, Deserialize)]
struct ParamEntry {
    name: String,
    shape: [usize; 2],
    values: Vec<f64>,
}

const FORMAT: &str = "insight-params";

/// Structured-text checkpoint: name, shape and row-major values per
/// parameter. Values round-trip bit-exactly.
pub fn params_to_json<T: Scalar>(params: &ParamSet<T>) -> String {
    let file = CheckpointFile {
        format: FORMAT.into(),
        version: CHECKPOINT_VERSION,
        params: params
            .iter()
            .map(|(name, t)| ParamEntry {
                name: name.to_string(),
                shape: [t.rows(), t.cols()],
                values: t.data().iter().map(|v| v.to_f64_lossy()).collect(),
            })
            .collect(),
    };
    serde_json::to_string(&file).expect("checkpoint serializes")
}

pub fn params_from_json<T: Scalar>(text: &str) -> Result<ParamSet<T>, KernelError> {
    let file: CheckpointFile = serde_json::from_str(text).map_err(|e| KernelError::Checkpoint(e.to_string()))?;
    if file.format != FORMAT {
        return Err(KernelError::Checkpoint(format!("unknown format `{}`", file.format)));
    }
    if file.version != CHECKPOINT_VERSION {
        return Err(KernelError::Checkpoint(format!("unsupported version {}", file.version)));
    }
    let mut set = ParamSet::new();
    for p in file.params {
        let values = p.values.into_iter().map(T::of).collect();
        let t = Tensor::new(p.shape[0], p.shape[1], values)
            .map_err(|e| KernelError::Checkpoint(format!("parameter `{}`: {e}", p.name)))?;
        set.insert(p.name, t);
    }
    Ok(set)
}

pub fn save_params<T: Scalar>(params: &ParamSet<T>, path: impl AsRef<Path>) -> Result<(), KernelError> {
    fs::write(path.as_ref(), params_to_json(params)).map_err(|e| KernelError::Checkpoint(e.to_string()))
}

pub fn load_params<T: Scalar>(path: impl AsRef<Path>) -> Result<ParamSet<T>, KernelError> {
    let text = fs::read_to_string(path.as_ref()).map_err(|e| KernelError::Checkpoint(e.to_string()))?;
    params_from_json(&text)
}
