//! Ranking metrics: Precision@k, mAP@k and NDCG@k with corpus aggregation.
//!
//! By default the relevant set of a table is its gold top-k (descending gold
//! score, ties by id). In binary mode the relevant set is every item with a
//! positive gold score. NDCG uses exponential gain `2^g - 1` with a
//! `log2(i + 1)` discount and is 1 when the ideal DCG is 0.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("k = {k} outside 1..={n}")]
    KOutOfRange { k: usize, n: usize },
    #[error("table `{0}`: prediction is not a permutation of the gold ids")]
    NotPermutation(String),
    #[error("no ranking pairs to evaluate")]
    Empty,
}

/// Orders `(id, score)` items by descending score, ties by ascending id.
pub fn order_descending<T: Scalar>(items: &[(&str, T)]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..items.len()).collect();
    idx.sort_by(|&a, &b| {
        let (ia, sa) = items[a];
        let (ib, sb) = items[b];
        sb.partial_cmp(&sa).unwrap_or(Ordering::Equal).then_with(|| ia.cmp(ib))
    });
    idx
}

/// 1-based rank of each item under [`order_descending`].
pub fn ranks_descending<T: Scalar>(items: &[(&str, T)]) -> Vec<usize> {
    let mut ranks = vec![0; items.len()];
    for (r, i) in order_descending(items).into_iter().enumerate() {
        ranks[i] = r + 1;
    }
    ranks
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelevanceMode {
    #[default]
    GoldTopK,
    Binary,
}

/// A predicted ordering of one table's insights and their gold scores.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingPair<T> {
    pub table_id: String,
    pub predicted: Vec<String>,
    pub gold_scores: BTreeMap<String, T>,
}

impl<T: Scalar> RankingPair<T> {
    pub fn new(
        table_id: impl Into<String>,
        predicted: Vec<String>,
        gold_scores: BTreeMap<String, T>,
    ) -> Result<Self, EvalError> {
        let table_id = table_id.into();
        let unique: HashSet<&String> = predicted.iter().collect();
        if unique.len() != predicted.len()
            || predicted.len() != gold_scores.len()
            || !predicted.iter().all(|id| gold_scores.contains_key(id))
        {
            return Err(EvalError::NotPermutation(table_id));
        }
        Ok(RankingPair {
            table_id,
            predicted,
            gold_scores,
        })
    }

    pub fn len(&self) -> usize {
        self.predicted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predicted.is_empty()
    }

    /// Ids by descending gold score, ties by id.
    pub fn gold_order(&self) -> Vec<&str> {
        let items: Vec<(&str, T)> = self.gold_scores.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        order_descending(&items).into_iter().map(|i| items[i].0).collect()
    }

    fn check_k(&self, k: usize) -> Result<(), EvalError> {
        if k == 0 || k > self.len() {
            return Err(EvalError::KOutOfRange { k, n: self.len() });
        }
        Ok(())
    }

    fn relevant(&self, k: usize, mode: RelevanceMode) -> BTreeSet<&str> {
        match mode {
            RelevanceMode::GoldTopK => self.gold_order().into_iter().take(k).collect(),
            RelevanceMode::Binary => self
                .gold_scores
                .iter()
                .filter(|(_, g)| **g > T::zero())
                .map(|(id, _)| id.as_str())
                .collect(),
        }
    }
}

pub fn precision_at_k<T: Scalar>(pair: &RankingPair<T>, k: usize, mode: RelevanceMode) -> Result<T, EvalError> {
    pair.check_k(k)?;
    let relevant = pair.relevant(k, mode);
    let hits = pair.predicted[..k].iter().filter(|id| relevant.contains(id.as_str())).count();
    Ok(T::of(hits as f64) / T::of(k as f64))
}

/// Average precision over the first k predictions.
pub fn average_precision_at_k<T: Scalar>(pair: &RankingPair<T>, k: usize, mode: RelevanceMode) -> Result<T, EvalError> {
    pair.check_k(k)?;
    let relevant = pair.relevant(k, mode);
    let denom = k.min(relevant.len());
    if denom == 0 {
        return Ok(T::zero());
    }
    let mut hits = 0usize;
    let mut sum = T::zero();
    for (i, id) in pair.predicted[..k].iter().enumerate() {
        if relevant.contains(id.as_str()) {
            hits += 1;
            sum += T::of(hits as f64) / T::of((i + 1) as f64);
        }
    }
    Ok(sum / T::of(denom as f64))
}

/// Mean of per-table average precision.
pub fn map_at_k<T: Scalar>(pairs: &[RankingPair<T>], k: usize, mode: RelevanceMode) -> Result<T, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut total = T::zero();
    for p in pairs {
        total += average_precision_at_k(p, k, mode)?;
    }
    Ok(total / T::of(pairs.len() as f64))
}

fn dcg<T: Scalar>(gains: impl Iterator<Item = T>) -> T {
    let two = T::of(2.0);
    gains
        .enumerate()
        .map(|(i, g)| (two.powf(g) - T::one()) / T::of((i + 2) as f64).log2())
        .sum()
}

pub fn ndcg_at_k<T: Scalar>(pair: &RankingPair<T>, k: usize) -> Result<T, EvalError> {
    pair.check_k(k)?;
    let gain = |id: &str| pair.gold_scores[id];
    let actual = dcg(pair.predicted[..k].iter().map(|id| gain(id)));
    let mut ideal_gains: Vec<T> = pair.gold_scores.values().copied().collect();
    ideal_gains.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    let ideal = dcg(ideal_gains.into_iter().take(k));
    if ideal <= T::zero() {
        return Ok(T::one());
    }
    Ok(actual / ideal)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMetrics {
    pub k: usize,
    pub precision: f64,
    pub map: f64,
    pub ndcg: f64,
    pub tables: usize,
    /// Tables with fewer than k insights, left out of the means.
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub method: String,
    pub metrics: Vec<KMetrics>,
}

impl MetricReport {
    pub fn at(&self, k: usize) -> Option<&KMetrics> {
        self.metrics.iter().find(|m| m.k == k)
    }
}

/// Averages each metric over the tables with at least k items.
pub fn evaluate_corpus<T: Scalar>(
    method: &str,
    pairs: &[RankingPair<T>],
    ks: &[usize],
    mode: RelevanceMode,
) -> Result<MetricReport, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut metrics = Vec::with_capacity(ks.len());
    for &k in ks {
        let (mut p, mut ap, mut nd) = (0.0, 0.0, 0.0);
        let mut tables = 0;
        for pair in pairs.iter().filter(|p| p.len() >= k && k > 0) {
            p += precision_at_k(pair, k, mode)?.to_f64_lossy();
            ap += average_precision_at_k(pair, k, mode)?.to_f64_lossy();
            nd += ndcg_at_k(pair, k)?.to_f64_lossy();
            tables += 1;
        }
        let mean = |x: f64| if tables == 0 { 0.0 } else { x / tables as f64 };
        metrics.push(KMetrics {
            k,
            precision: mean(p),
            map: mean(ap),
            ndcg: mean(nd),
            tables,
            skipped: pairs.len() - tables,
        });
    }
    Ok(MetricReport {
        method: method.to_string(),
        metrics,
    })
}

/// Aligned console table: one row per method, columns grouped by metric.
pub fn render_table(reports: &[MetricReport]) -> String {
    let ks: Vec<usize> = reports
        .first()
        .map(|r| r.metrics.iter().map(|m| m.k).collect())
        .unwrap_or_default();
    let mut headers = vec!["Method".to_string()];
    for name in ["Precision", "mAP", "NDCG"] {
        headers.extend(ks.iter().map(|k| format!("{name}@{k}")));
    }
    let mut rows = vec![headers];
    for r in reports {
        let mut row = vec![r.method.clone()];
        for pick in [|m: &KMetrics| m.precision, |m: &KMetrics| m.map, |m: &KMetrics| m.ndcg] {
            row.extend(ks.iter().map(|&k| r.at(k).map_or("-".into(), |m| format!("{:.3}", pick(m)))));
        }
        rows.push(row);
    }
    let widths: Vec<usize> = (0..rows[0].len())
        .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (cell, w))| if c == 0 { format!("{cell:<w$}") } else { format!("{cell:>w$}") })
            .collect();
        let _ = writeln!(out, "{}", line.join("  "));
        if i == 0 {
            let _ = writeln!(out, "{}", "-".repeat(line.join("  ").len()));
        }
    }
    out
}
