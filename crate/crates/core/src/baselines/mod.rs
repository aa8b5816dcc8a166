//! Rule-based rankers that re-score each insight's significance against a
//! pooled reference distribution: the insight's table, the whole corpus, or
//! its header cluster.

mod kmeans;
mod pooling;
mod tfidf;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use kmeans::{assign, kmeans, lloyd, ClusterModel, KMeansConfig, KMeansResult};
pub use pooling::{
    insight_statistic, pooled_significance, rank_by_scores, rank_sig_cluster, rank_sig_dataset, rank_sig_table,
    tail_significance, Statistic,
};
pub use tfidf::{embedding_features, load_embeddings, parse_embeddings, TfIdf};

use crate::extract::PointSeries;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("k must be positive")]
    ZeroK,
    #[error("k = {k} exceeds the {n} points to cluster")]
    KTooLarge { k: usize, n: usize },
    #[error("points have inconsistent dimensions {0} and {1}")]
    Dimension(usize, usize),
    #[error("embedding file line {line}: {msg}")]
    Embedding { line: usize, msg: String },
}

/// Header features used for clustering.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind", content = "path")]
pub enum HeaderFeatures {
    #[default]
    Tfidf,
    /// Mean of external token vectors read from a whitespace-separated file
    /// of `token v1 v2 ...` lines.
    Embeddings(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub point_series: PointSeries,
    pub kmeans: KMeansConfig,
    pub features: HeaderFeatures,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            point_series: PointSeries::ChangeRatio,
            kmeans: KMeansConfig::default(),
            features: HeaderFeatures::Tfidf,
        }
    }
}
