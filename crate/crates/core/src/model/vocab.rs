use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::extract::{Insight, InsightType};

/// Dense token index over insight semantic tokens plus one token per
/// insight type. Type tokens occupy the first indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: BTreeMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabFile {
    tokens: Vec<String>,
}

impl Vocabulary {
    /// Type tokens followed by the sorted distinct `words`.
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut tokens: Vec<String> = InsightType::ALL.iter().map(|t| t.token().to_string()).collect();
        let types: BTreeSet<String> = tokens.iter().cloned().collect();
        let words: BTreeSet<String> = words.into_iter().map(Into::into).filter(|w| !types.contains(w)).collect();
        tokens.extend(words);
        Self::from_tokens(tokens).expect("type tokens present and distinct")
    }

    pub fn from_insights<'a>(insights: impl IntoIterator<Item = &'a Insight>) -> Self {
        Self::new(insights.into_iter().flat_map(Insight::semantic_tokens))
    }

    /// Uses `tokens` in the given order. Fails on duplicates or missing type
    /// tokens.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self, ModelError> {
        let mut index = BTreeMap::new();
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(ModelError::Config(format!("duplicate vocabulary token `{t}`")));
            }
        }
        for t in InsightType::ALL {
            if !index.contains_key(t.token()) {
                return Err(ModelError::UnknownToken(t.token().to_string()));
            }
        }
        Ok(Vocabulary { tokens, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn type_index(&self, itype: InsightType) -> Result<usize, ModelError> {
        self.get(itype.token())
            .ok_or_else(|| ModelError::UnknownToken(itype.token().to_string()))
    }

    /// Count bag over in-vocabulary tokens, sorted by index. Unknown tokens
    /// are dropped.
    pub fn bag(&self, tokens: &[String]) -> Vec<(usize, usize)> {
        let mut counts = BTreeMap::new();
        for t in tokens {
            if let Some(i) = self.get(t) {
                *counts.entry(i).or_insert(0) += 1;
            }
        }
        counts.into_iter().collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&VocabFile {
            tokens: self.tokens.clone(),
        })
        .expect("vocabulary serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let file: VocabFile = serde_json::from_str(text).map_err(|e| ModelError::Config(format!("vocabulary: {e}")))?;
        Self::from_tokens(file.tokens)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| ModelError::checkpoint(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ModelError::checkpoint(path, e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type_tokens_come_first() {
        let v = Vocabulary::new(["sales", "brand", "sales"]);
        assert_eq!(v.len(), 5);
        assert_eq!(v.get("<point_outstanding>"), Some(0));
        assert_eq!(v.get("brand"), Some(3));
        assert_eq!(v.get("sales"), Some(4));
    }

    #[test]
    fn bag_counts_and_drops_unknown() {
        let v = Vocabulary::new(["a", "b"]);
        let toks: Vec<String> = ["b", "zzz", "b", "a"].iter().map(|s| s.to_string()).collect();
        assert_eq!(v.bag(&toks), vec![(3, 1), (4, 2)]);
    }

    #[test]
    fn json_roundtrip() {
        let v = Vocabulary::new(["x", "y"]);
        assert_eq!(Vocabulary::from_json(&v.to_json()).unwrap(), v);
        assert!(Vocabulary::from_tokens(vec!["x".into()]).is_err());
    }
}
