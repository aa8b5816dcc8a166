use std::collections::BTreeMap;

use super::{embedding_features, load_embeddings, BaselineConfig, ClusterModel, HeaderFeatures, TfIdf};
use crate::extract::{point_series, trend_fit, Insight, PointSeries};
use crate::model::{rank_scores, RankedInsight};
use crate::stats::{mean_and_sample_std, normal_cdf, normal_sf};
use crate::table::Subspace;

/// The quantity compared across insights. Only like kinds are pooled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Statistic {
    RawValue,
    ChangeRatio,
    /// Least-squares slope divided by the mean absolute value.
    RelativeSlope,
}

fn relative_slope(sub: &Subspace) -> Option<f64> {
    let values = sub.values();
    let fit = trend_fit(&values)?;
    let scale = values.iter().map(|v| v.abs()).sum::<f64>() / values.len() as f64;
    Some(if scale > 0.0 { fit.slope / scale } else { fit.slope })
}

fn point_kind(sub: &Subspace, mode: PointSeries) -> Statistic {
    if mode == PointSeries::ChangeRatio && sub.is_temporal() {
        Statistic::ChangeRatio
    } else {
        Statistic::RawValue
    }
}

/// The insight's own statistic: its point value (on the series it was
/// extracted from) or its relative slope.
pub fn insight_statistic(insight: &Insight, mode: PointSeries) -> Option<(Statistic, f64)> {
    if insight.itype.is_shape() {
        return relative_slope(&insight.subspace).map(|s| (Statistic::RelativeSlope, s));
    }
    let idx = insight.point_index?;
    let value = point_series(&insight.subspace, mode)
        .into_iter()
        .find(|(i, _)| *i == idx)?
        .1;
    Some((point_kind(&insight.subspace, mode), value))
}

/// Every value of `kind` a subspace contributes to a pool, keyed by cell
/// index (0 for the single slope).
fn contributions(sub: &Subspace, kind: Statistic, mode: PointSeries) -> Vec<(usize, f64)> {
    match kind {
        Statistic::RelativeSlope => relative_slope(sub).map(|s| (0, s)).into_iter().collect(),
        _ => point_series(sub, mode),
    }
}

/// `1 - p` for the normal tail beyond `x` on its side of the pool mean,
/// with the pool's sample standard deviation. `None` for pools of fewer than
/// two values or a zero-spread pool that `x` does not deviate from.
pub fn tail_significance(x: f64, pool: &[f64]) -> Option<f64> {
    if pool.len() < 2 {
        return None;
    }
    let (mean, std) = mean_and_sample_std(pool);
    if std == 0.0 || !std.is_finite() {
        return (x != mean).then_some(1.0);
    }
    let z = (x - mean) / std;
    let p = if x >= mean { normal_sf(z) } else { normal_cdf(z) };
    Some((1.0 - p).clamp(0.0, 1.0))
}

type SubspaceKey = (String, Vec<(usize, String)>, usize);

/// Re-scores every insight against the pool formed by the distinct
/// subspaces of the insights sharing its group label, restricted to values
/// of its own statistic kind and excluding the insight's own data point.
/// Falls back to the stored significance when no usable pool exists.
pub fn pooled_significance(insights: &[Insight], groups: &[usize], mode: PointSeries) -> Vec<f64> {
    assert_eq!(insights.len(), groups.len(), "one group label per insight");
    let stats: Vec<Option<(Statistic, f64)>> = insights.iter().map(|i| insight_statistic(i, mode)).collect();
    let mut pools: BTreeMap<(usize, Statistic), BTreeMap<SubspaceKey, Vec<(usize, f64)>>> = BTreeMap::new();
    for ((ins, &g), stat) in insights.iter().zip(groups).zip(&stats) {
        if let Some((kind, _)) = stat {
            pools
                .entry((g, *kind))
                .or_default()
                .entry(ins.subspace_key())
                .or_insert_with(|| contributions(&ins.subspace, *kind, mode));
        }
    }
    insights
        .iter()
        .zip(groups)
        .zip(&stats)
        .map(|((ins, &g), stat)| {
            let Some((kind, x)) = *stat else {
                return ins.significance;
            };
            let own = ins.subspace_key();
            let own_index = if kind == Statistic::RelativeSlope { 0 } else { ins.point_index.unwrap_or(0) };
            let pool: Vec<f64> = pools[&(g, kind)]
                .iter()
                .flat_map(|(key, values)| {
                    let is_own = *key == own;
                    values
                        .iter()
                        .filter(move |(i, _)| !(is_own && *i == own_index))
                        .map(|(_, v)| *v)
                })
                .collect();
            tail_significance(x, &pool).unwrap_or(ins.significance)
        })
        .collect()
}

/// Per-table descending ranking of `scores`; tables in id order.
pub fn rank_by_scores(insights: &[Insight], scores: &[f64]) -> Vec<RankedInsight> {
    let mut tables: BTreeMap<&str, (Vec<String>, Vec<f64>)> = BTreeMap::new();
    for (ins, s) in insights.iter().zip(scores) {
        let entry = tables.entry(ins.table_id.as_str()).or_default();
        entry.0.push(ins.id.clone());
        entry.1.push(*s);
    }
    tables
        .into_iter()
        .flat_map(|(table, (ids, s))| rank_scores(table, &ids, &s))
        .collect()
}

fn table_groups(insights: &[Insight]) -> Vec<usize> {
    let mut ids: BTreeMap<&str, usize> = BTreeMap::new();
    for ins in insights {
        let next = ids.len();
        ids.entry(ins.table_id.as_str()).or_insert(next);
    }
    insights.iter().map(|i| ids[i.table_id.as_str()]).collect()
}

/// Pools within each insight's own table.
pub fn rank_sig_table(insights: &[Insight], mode: PointSeries) -> Vec<RankedInsight> {
    let scores = pooled_significance(insights, &table_groups(insights), mode);
    rank_by_scores(insights, &scores)
}

/// Pools over the whole corpus.
pub fn rank_sig_dataset(insights: &[Insight], mode: PointSeries) -> Vec<RankedInsight> {
    let scores = pooled_significance(insights, &vec![0; insights.len()], mode);
    rank_by_scores(insights, &scores)
}

/// Clusters insights by their header features and pools within clusters.
pub fn rank_sig_cluster(
    insights: &[Insight],
    config: &BaselineConfig,
) -> crate::Result<(Vec<RankedInsight>, ClusterModel)> {
    let docs: Vec<Vec<String>> = insights.iter().map(Insight::header_tokens).collect();
    let features = match &config.features {
        HeaderFeatures::Tfidf => {
            let tfidf = TfIdf::fit(&docs);
            docs.iter().map(|d| tfidf.transform(d)).collect()
        }
        HeaderFeatures::Embeddings(path) => embedding_features(&docs, &load_embeddings(path)?),
    };
    let result = super::kmeans(&features, &config.kmeans)?;
    let scores = pooled_significance(insights, &result.assignment, config.point_series);
    let model = ClusterModel {
        k: config.kmeans.k,
        centroids: result.centroids,
        assignment: insights
            .iter()
            .zip(&result.assignment)
            .map(|(i, &c)| (i.id.clone(), c))
            .collect(),
    };
    Ok((rank_by_scores(insights, &scores), model))
}
