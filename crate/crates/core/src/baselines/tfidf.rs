use std::collections::{BTreeMap, BTreeSet};

use super::BaselineError;

/// TF-IDF weighting fitted on a token-list corpus, with the smoothed idf
/// `ln((1 + N) / (1 + df)) + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TfIdf {
    index: BTreeMap<String, usize>,
    idf: Vec<f64>,
}

impl TfIdf {
    pub fn fit(docs: &[Vec<String>]) -> Self {
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for doc in docs {
            for t in doc.iter().collect::<BTreeSet<_>>() {
                *df.entry(t.clone()).or_insert(0) += 1;
            }
        }
        let n = docs.len() as f64;
        let mut index = BTreeMap::new();
        let mut idf = Vec::with_capacity(df.len());
        for (i, (t, count)) in df.into_iter().enumerate() {
            index.insert(t, i);
            idf.push(((1.0 + n) / (1.0 + count as f64)).ln() + 1.0);
        }
        TfIdf { index, idf }
    }

    pub fn dim(&self) -> usize {
        self.idf.len()
    }

    pub fn idf(&self, token: &str) -> Option<f64> {
        self.index.get(token).map(|&i| self.idf[i])
    }

    /// L2-normalized dense vector; unknown tokens are ignored and an empty
    /// document maps to zeros.
    pub fn transform(&self, doc: &[String]) -> Vec<f64> {
        let mut v = vec![0.0; self.dim()];
        for t in doc {
            if let Some(&i) = self.index.get(t) {
                v[i] += self.idf[i];
            }
        }
        normalize(&mut v);
        v
    }
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

/// Parses `token v1 v2 ...` lines. Blank lines and lines starting with `#`
/// are skipped; all vectors must share one dimension.
pub fn parse_embeddings(text: &str) -> Result<BTreeMap<String, Vec<f64>>, BaselineError> {
    let mut out = BTreeMap::new();
    let mut dim = None;
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| BaselineError::Embedding { line: n + 1, msg };
        let mut parts = line.split_whitespace();
        let token = parts.next().expect("non-empty line").to_lowercase();
        let values = parts
            .map(|p| p.parse::<f64>().map_err(|e| err(format!("`{p}`: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        if values.is_empty() {
            return Err(err("no vector components".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(err("non-finite component".into()));
        }
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => return Err(err(format!("expected {d} components, got {}", values.len()))),
            _ => {}
        }
        out.insert(token, values);
    }
    Ok(out)
}

pub fn load_embeddings(path: &std::path::Path) -> crate::Result<BTreeMap<String, Vec<f64>>> {
    let text = std::fs::read_to_string(path).map_err(|e| crate::Error::io(path, e))?;
    Ok(parse_embeddings(&text)?)
}

/// L2-normalized mean of the known token vectors of each document.
pub fn embedding_features(docs: &[Vec<String>], table: &BTreeMap<String, Vec<f64>>) -> Vec<Vec<f64>> {
    let dim = table.values().next().map_or(0, Vec::len);
    docs.iter()
        .map(|doc| {
            let mut v = vec![0.0; dim];
            for t in doc {
                if let Some(e) = table.get(t) {
                    v.iter_mut().zip(e).for_each(|(a, b)| *a += b);
                }
            }
            normalize(&mut v);
            v
        })
        .collect()
}
