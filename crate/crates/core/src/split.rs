//! Seeded table-level train/validation/test splits.

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::io::{read_json, write_json};
use crate::table::{DatasetDir, DocumentText, Table};
use crate::{Error, Result};

pub const MANIFEST_FILE: &str = "split.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "train" => Ok(Split::Train),
            "val" | "valid" | "validation" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split `{other}` (train, val, test)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    /// Train, validation and test fractions.
    pub ratios: [f64; 3],
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            ratios: [0.6, 0.2, 0.2],
            seed: 0,
        }
    }
}

/// Table ids per split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

impl SplitManifest {
    pub fn ids(&self, split: Split) -> &[String] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }

    pub fn all_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = Split::ALL.iter().flat_map(|s| self.ids(*s).iter().cloned()).collect();
        ids.sort();
        ids
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let m: SplitManifest = read_json(path)?;
        let mut seen = BTreeSet::new();
        if let Some(dup) = m.all_ids().into_iter().find(|id| !seen.insert(id.clone())) {
            return Err(Error::Config(format!("{}: table `{dup}` appears in two splits", path.display())));
        }
        Ok(m)
    }

    /// Read access limited to the tables of `split`.
    pub fn scope<'a>(&'a self, dataset: &'a DatasetDir, split: Split) -> ScopedDataset<'a> {
        ScopedDataset {
            dataset,
            split,
            ids: self.ids(split),
        }
    }
}

/// Shuffles the sorted ids with `seed` and cuts them at
/// `round(n * r_train)` and `round(n * r_val)`; the rest is test.
pub fn split_tables(ids: &[String], config: &SplitConfig) -> Result<SplitManifest> {
    let r = config.ratios;
    if r.iter().any(|x| !x.is_finite() || *x < 0.0) || (r.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("split ratios {r:?} must be non-negative and sum to 1")));
    }
    let mut ids: Vec<String> = ids.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed));
    let n = ids.len();
    let n_train = ((n as f64 * r[0]).round() as usize).min(n);
    let n_val = ((n as f64 * r[1]).round() as usize).min(n - n_train);
    let sorted = |slice: &[String]| {
        let mut v = slice.to_vec();
        v.sort();
        v
    };
    Ok(SplitManifest {
        train: sorted(&ids[..n_train]),
        val: sorted(&ids[n_train..n_train + n_val]),
        test: sorted(&ids[n_train + n_val..]),
    })
}

/// A dataset view that refuses tables outside one split.
#[derive(Debug, Clone, Copy)]
pub struct ScopedDataset<'a> {
    dataset: &'a DatasetDir,
    split: Split,
    ids: &'a [String],
}

impl ScopedDataset<'_> {
    pub fn ids(&self) -> &[String] {
        self.ids
    }

    fn check(&self, id: &str) -> Result<()> {
        if self.ids.iter().any(|x| x == id) {
            Ok(())
        } else {
            Err(Error::Config(format!("table `{id}` is not in the {} split", self.split)))
        }
    }

    pub fn load_table(&self, id: &str) -> Result<Table> {
        self.check(id)?;
        Ok(self.dataset.load_table(id)?)
    }

    pub fn load_document(&self, id: &str) -> Result<DocumentText> {
        self.check(id)?;
        Ok(self.dataset.load_document(id)?)
    }
}
