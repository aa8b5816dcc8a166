use std::path::PathBuf;

use thiserror::Error;

use crate::baselines::BaselineError;
use crate::eval::EvalError;
use crate::kernel::KernelError;
use crate::model::ModelError;
use crate::table::TableError;
use crate::text::TextError;

/// Top-level error for pipeline stages and file-backed operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error("metric: {0}")]
    Metric(String),
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Record {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// True for errors caused by bad input data or files rather than by a
    /// defect in the program.
    pub fn is_data_error(&self) -> bool {
        match self {
            Error::Stage { source, .. } => source.is_data_error(),
            Error::Table(_) | Error::Text(_) | Error::Io { .. } | Error::Record { .. } => true,
            Error::Config(_) | Error::Baseline(_) | Error::Metric(_) | Error::Eval(_) => true,
            Error::Model(e) => e.is_data_error(),
            Error::Kernel(_) => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
