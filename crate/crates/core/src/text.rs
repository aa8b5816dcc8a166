//! Description-text preprocessing and the weak-supervision similarity scores.
//!
//! Word overlap `Count(a, b)` is the multiset intersection size
//! `sum_w min(count_a(w), count_b(w))`, so it never exceeds either length and
//! a token list is maximally similar to itself.

use std::collections::HashMap;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::ranks_descending;
use crate::extract::{Insight, InsightRecord};
use crate::table::DocumentText;

#[derive(Debug, Error, PartialEq)]
pub enum TextError {
    #[error("similarity needs non-empty token lists")]
    EmptyTokens,
    #[error("insights from different tables in one group: `{0}` and `{1}`")]
    MixedTables(String, String),
    #[error("similarity weights must be finite and non-negative, got ({0}, {1})")]
    Weights(f64, f64),
}

static TOKEN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\d+(?:\.\d+)?|[^\W_]+").unwrap());
static NUMBER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\d+(?:\.\d+)?").unwrap());
static THOUSANDS: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(\d),(\d{3})").unwrap());
static MARKUP: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"<[^>]*>|&[A-Za-z#0-9]+;").unwrap());
static SPECIAL: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[^\w\s.,!?%$'()\-:;]|_").unwrap());

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TextConfig {
    pub min_chars: usize,
    pub min_tokens: usize,
    /// Keywords admitting a sentence without numbers, in addition to the
    /// header tokens of the paired table.
    pub keywords: Vec<String>,
    pub sentence_weight: f64,
    pub header_weight: f64,
}

impl Default for TextConfig {
    fn default() -> Self {
        TextConfig {
            min_chars: 50,
            min_tokens: 10,
            keywords: [
                "increase", "increased", "increasing", "decrease", "decreased", "decreasing", "growth", "grew",
                "decline", "declined", "million", "billion", "percent", "outstanding",
            ]
            .map(String::from)
            .to_vec(),
            sentence_weight: 0.5,
            header_weight: 0.5,
        }
    }
}

/// Applies the text normalization rules: drops markup and special
/// characters, joins digit groups ("1,234" -> "1234") and replaces the report
/// year with "this year" and the year before with "last year".
pub fn normalize(text: &str, report_year: Option<i64>) -> String {
    let text = MARKUP.replace_all(text, " ");
    let text = SPECIAL.replace_all(&text, " ");
    let mut text = text.into_owned();
    while THOUSANDS.is_match(&text) {
        text = THOUSANDS.replace_all(&text, "$1$2").into_owned();
    }
    let Some(year) = report_year else {
        return text;
    };
    NUMBER
        .replace_all(&text, |caps: &regex::Captures| {
            let m = &caps[0];
            match m.parse::<i64>() {
                Ok(y) if m.len() == 4 && y == year => "this year".to_string(),
                Ok(y) if m.len() == 4 && y == year - 1 => "last year".to_string(),
                _ => m.to_string(),
            }
        })
        .into_owned()
}

/// Lowercase word tokens; decimal numbers stay whole.
pub fn tokenize(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    TOKEN.find_iter(&lower).map(|m| m.as_str().to_string()).collect()
}

pub fn tokenize_normalized(text: &str, report_year: Option<i64>) -> Vec<String> {
    tokenize(&normalize(text, report_year))
}

fn is_number(token: &str) -> bool {
    token.starts_with(|c: char| c.is_ascii_digit())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TokenizedSentence {
    /// Position of the sentence in the document.
    pub position: usize,
    pub raw: String,
    pub tokens: Vec<String>,
    pub has_number: bool,
}

/// Normalizes, tokenizes and filters the document sentences.
///
/// A sentence survives when its normalized text has at least `min_chars`
/// characters and `min_tokens` tokens, and it contains a number or a keyword
/// (configured keywords plus `header_keywords`).
pub fn preprocess(doc: &DocumentText, header_keywords: &[String], config: &TextConfig) -> Vec<TokenizedSentence> {
    let keywords: std::collections::HashSet<String> = config
        .keywords
        .iter()
        .map(|k| k.to_lowercase())
        .chain(header_keywords.iter().cloned())
        .collect();
    let year = doc.report_year();
    doc.sentences
        .iter()
        .enumerate()
        .filter_map(|(position, raw)| {
            let normalized = normalize(raw, year);
            let tokens = tokenize(&normalized);
            if normalized.trim().chars().count() < config.min_chars || tokens.len() < config.min_tokens {
                return None;
            }
            let has_number = tokens.iter().any(|t| is_number(t));
            if !has_number && !tokens.iter().any(|t| keywords.contains(t)) {
                return None;
            }
            Some(TokenizedSentence {
                position,
                raw: raw.clone(),
                tokens,
                has_number,
            })
        })
        .collect()
}

/// Multiset overlap between two token lists.
pub fn shared_count(a: &[String], b: &[String]) -> usize {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in a {
        *counts.entry(t).or_default() += 1;
    }
    let mut shared = 0;
    for t in b {
        if let Some(c) = counts.get_mut(t.as_str()) {
            if *c > 0 {
                *c -= 1;
                shared += 1;
            }
        }
    }
    shared
}

/// `Count(d, s)^2 / (|d| |s|)`.
pub fn sim_sentence(d_tokens: &[String], s_tokens: &[String]) -> Result<f64, TextError> {
    if d_tokens.is_empty() || s_tokens.is_empty() {
        return Err(TextError::EmptyTokens);
    }
    let c = shared_count(d_tokens, s_tokens) as f64;
    Ok(c * c / (d_tokens.len() as f64 * s_tokens.len() as f64))
}

/// `Count(h, s)/|h| * Count(h, s)/max_k Count(h_k, s)`, zero when no header
/// overlaps the sentence.
pub fn sim_header(h_tokens: &[String], s_tokens: &[String], all_headers: &[Vec<String>]) -> f64 {
    let own = shared_count(h_tokens, s_tokens);
    let best = all_headers
        .iter()
        .map(|h| shared_count(h, s_tokens))
        .max()
        .unwrap_or(0)
        .max(own);
    if best == 0 || h_tokens.is_empty() {
        return 0.0;
    }
    let own = own as f64;
    (own / h_tokens.len() as f64) * (own / best as f64)
}

/// Weighted sum of the sentence and header similarities.
pub fn sim_combined(
    d_tokens: &[String],
    h_tokens: &[String],
    s_tokens: &[String],
    all_headers: &[Vec<String>],
    weights: (f64, f64),
) -> Result<f64, TextError> {
    let (ws, wh) = weights;
    if !(ws.is_finite() && wh.is_finite() && ws >= 0.0 && wh >= 0.0) {
        return Err(TextError::Weights(ws, wh));
    }
    let s = sim_sentence(d_tokens, s_tokens)?;
    Ok(ws * s + wh * sim_header(h_tokens, s_tokens, all_headers))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledInsight {
    pub insight: Insight,
    pub gold_score: f64,
    /// Document position of the best-matching sentence.
    pub best_sentence_index: Option<usize>,
    pub gold_rank: usize,
}

impl LabeledInsight {
    pub fn to_record(&self) -> LabeledRecord {
        LabeledRecord {
            insight: self.insight.to_record(),
            gold_score: self.gold_score,
            gold_rank: self.gold_rank,
            best_sentence_index: self.best_sentence_index,
        }
    }

    pub fn from_record(rec: LabeledRecord) -> Result<Self, String> {
        if !(0.0..=1.0).contains(&rec.gold_score) {
            return Err(format!("gold_score {} outside [0, 1]", rec.gold_score));
        }
        if rec.gold_rank == 0 {
            return Err("gold_rank starts at 1".into());
        }
        Ok(LabeledInsight {
            insight: Insight::from_record(rec.insight)?,
            gold_score: rec.gold_score,
            best_sentence_index: rec.best_sentence_index,
            gold_rank: rec.gold_rank,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledRecord {
    #[serde(flatten)]
    pub insight: InsightRecord,
    pub gold_score: f64,
    pub gold_rank: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_sentence_index: Option<usize>,
}

/// Scores every insight of one table against the filtered sentences.
///
/// The gold score is the best combined similarity over all sentences (first
/// sentence wins ties); headers compete within the table's insight set.
/// Output keeps the input order; ranks follow descending gold score with
/// ties broken by ascending id.
pub fn label_insights(
    insights: &[Insight],
    sentences: &[TokenizedSentence],
    config: &TextConfig,
) -> Result<Vec<LabeledInsight>, TextError> {
    if let Some(first) = insights.first() {
        if let Some(other) = insights.iter().find(|i| i.table_id != first.table_id) {
            return Err(TextError::MixedTables(first.table_id.clone(), other.table_id.clone()));
        }
    }
    let headers: Vec<Vec<String>> = insights.iter().map(Insight::header_tokens).collect();
    let weights = (config.sentence_weight, config.header_weight);
    let mut scored = Vec::with_capacity(insights.len());
    for (insight, header) in insights.iter().zip(&headers) {
        let d = insight.description_tokens();
        let mut best: Option<(usize, f64)> = None;
        for sentence in sentences {
            let score = sim_combined(&d, header, &sentence.tokens, &headers, weights)?;
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((sentence.position, score));
            }
        }
        let gold = best.map_or(0.0, |(_, s)| s.clamp(0.0, 1.0));
        scored.push((best.map(|(p, _)| p), gold));
    }
    let keyed: Vec<(&str, f64)> = insights.iter().zip(&scored).map(|(i, (_, g))| (i.id.as_str(), *g)).collect();
    let ranks = ranks_descending(&keyed);
    Ok(insights
        .iter()
        .zip(scored)
        .zip(ranks)
        .map(|((insight, (best_sentence_index, gold_score)), gold_rank)| LabeledInsight {
            insight: insight.clone(),
            gold_score,
            best_sentence_index,
            gold_rank,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimilarityGroup {
    High,
    Medium,
    Low,
}

/// Splits scores into three similarity groups. Boundaries default to the
/// score terciles; a score at or above the upper boundary is `High`.
pub fn similarity_groups(scores: &[f64], bounds: Option<(f64, f64)>) -> Vec<SimilarityGroup> {
    let (low, high) = bounds.unwrap_or_else(|| {
        let mut sorted = scores.to_vec();
        sorted.sort_by(f64::total_cmp);
        let q = |f: f64| {
            if sorted.is_empty() {
                0.0
            } else {
                sorted[((sorted.len() as f64 * f) as usize).min(sorted.len() - 1)]
            }
        };
        (q(1.0 / 3.0), q(2.0 / 3.0))
    });
    scores
        .iter()
        .map(|&s| {
            if s >= high {
                SimilarityGroup::High
            } else if s >= low {
                SimilarityGroup::Medium
            } else {
                SimilarityGroup::Low
            }
        })
        .collect()
}
