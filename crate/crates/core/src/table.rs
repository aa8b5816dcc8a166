//! Multi-dimensional tables, subspaces and the companion description text.
//!
//! A table is a set of cells, each carrying one label per dimension plus a
//! numeric value. A subspace fixes every dimension but one and lets the
//! remaining dimension vary over the cells present in the table. Cells inside
//! a subspace are ordered by the varying label: integer labels (years) sort
//! numerically, everything else lexicographically, with integers first.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("{path}: parse error at line {line}, column {column}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        msg: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("table has no cells")]
    Empty,
    #[error("table must have at least one dimension")]
    NoDimensions,
    #[error("cell {index}: expected {expected} dimension labels, found {found}")]
    DimCount {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("cell {index}: duplicate cell {dims:?}")]
    DuplicateCell { index: usize, dims: Vec<String> },
    #[error("cell {index}: non-finite value {value}")]
    NonFinite { index: usize, value: f64 },
    #[error("meta field `{0}` must be a string, number or boolean")]
    MetaValue(String),
    #[error("document has no table_id")]
    MissingTableId,
    #[error("document for table `{0}` has no matching table")]
    UnknownTable(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub dims: Vec<String>,
    pub value: f64,
}

impl Cell {
    pub fn new<S: Into<String>>(dims: impl IntoIterator<Item = S>, value: f64) -> Self {
        Cell {
            dims: dims.into_iter().map(Into::into).collect(),
            value,
        }
    }
}

/// A validated multi-dimensional table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    id: String,
    dim_names: Vec<String>,
    cells: Vec<Cell>,
    meta: BTreeMap<String, String>,
}

/// Meta key holding the name of the measured quantity ("Sales").
pub const MEASURE_KEY: &str = "measure";
/// Meta key holding the reporting year of a table or document.
pub const REPORT_YEAR_KEY: &str = "report_year";

impl Table {
    pub fn new(
        id: impl Into<String>,
        dim_names: Vec<String>,
        cells: Vec<Cell>,
        meta: BTreeMap<String, String>,
    ) -> Result<Self, TableError> {
        if dim_names.is_empty() {
            return Err(TableError::NoDimensions);
        }
        if cells.is_empty() {
            return Err(TableError::Empty);
        }
        let mut seen = BTreeSet::new();
        for (index, cell) in cells.iter().enumerate() {
            if cell.dims.len() != dim_names.len() {
                return Err(TableError::DimCount {
                    index,
                    expected: dim_names.len(),
                    found: cell.dims.len(),
                });
            }
            if !cell.value.is_finite() {
                return Err(TableError::NonFinite {
                    index,
                    value: cell.value,
                });
            }
            if !seen.insert(cell.dims.clone()) {
                return Err(TableError::DuplicateCell {
                    index,
                    dims: cell.dims.clone(),
                });
            }
        }
        Ok(Table {
            id: id.into(),
            dim_names,
            cells,
            meta,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim_names(&self) -> &[String] {
        &self.dim_names
    }

    pub fn dim_count(&self) -> usize {
        self.dim_names.len()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn meta(&self) -> &BTreeMap<String, String> {
        &self.meta
    }

    /// Name of the measured quantity, used by description templates.
    pub fn measure(&self) -> Option<&str> {
        self.meta
            .get(MEASURE_KEY)
            .map(String::as_str)
            .filter(|m| !m.trim().is_empty())
    }

    pub fn report_year(&self) -> Option<i64> {
        self.meta.get(REPORT_YEAR_KEY)?.trim().parse().ok()
    }

    pub fn from_json_str(text: &str, path: &Path) -> Result<Self, TableError> {
        let file: TableFile = serde_json::from_str(text).map_err(|e| parse_error(path, &e))?;
        let meta = meta_to_strings(file.meta)?;
        Table::new(file.id, file.dim_names, file.cells, meta)
    }

    pub fn to_json_string(&self) -> String {
        let file = TableFileOut {
            id: &self.id,
            dim_names: &self.dim_names,
            cells: &self.cells,
            meta: &self.meta,
        };
        serde_json::to_string_pretty(&file).expect("table serializes")
    }
}

#[derive(Deserialize)]
struct TableFile {
    id: String,
    dim_names: Vec<String>,
    cells: Vec<Cell>,
    #[serde(default)]
    meta: BTreeMap<String, Value>,
}

#[derive(Serialize)]
struct TableFileOut<'a> {
    id: &'a str,
    dim_names: &'a [String],
    cells: &'a [Cell],
    meta: &'a BTreeMap<String, String>,
}

fn parse_error(path: &Path, e: &serde_json::Error) -> TableError {
    TableError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    }
}

fn meta_to_strings(meta: BTreeMap<String, Value>) -> Result<BTreeMap<String, String>, TableError> {
    meta.into_iter()
        .map(|(k, v)| {
            let s = match v {
                Value::String(s) => s,
                Value::Number(n) => n.to_string(),
                Value::Bool(b) => b.to_string(),
                _ => return Err(TableError::MetaValue(k)),
            };
            Ok((k, s))
        })
        .collect()
}

fn read(path: &Path) -> Result<String, TableError> {
    fs::read_to_string(path).map_err(|source| TableError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads and validates a table file.
pub fn load_table(path: impl AsRef<Path>) -> Result<Table, TableError> {
    let path = path.as_ref();
    Table::from_json_str(&read(path)?, path)
}

pub fn save_table(table: &Table, path: impl AsRef<Path>) -> Result<(), TableError> {
    let path = path.as_ref();
    fs::write(path, table.to_json_string() + "\n").map_err(|source| TableError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Compares dimension labels: integers numerically and before any
/// non-integer label, which compare lexicographically.
pub fn compare_labels(a: &str, b: &str) -> Ordering {
    match (a.trim().parse::<i64>(), b.trim().parse::<i64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y).then_with(|| a.cmp(b)),
        (Ok(_), Err(_)) => Ordering::Less,
        (Err(_), Ok(_)) => Ordering::Greater,
        (Err(_), Err(_)) => a.cmp(b),
    }
}

/// Cells sharing every dimension label except the varying one.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    cells: Vec<Cell>,
    fixed: Vec<(usize, String)>,
    varying_dim_index: usize,
}

impl Subspace {
    /// Builds a subspace, sorting the cells by their varying label.
    ///
    /// Returns `None` when `cells` is empty or a cell disagrees with the
    /// fixed labels.
    pub fn new(mut cells: Vec<Cell>, fixed: Vec<(usize, String)>, varying_dim_index: usize) -> Option<Self> {
        if cells.is_empty() || fixed.is_empty() {
            return None;
        }
        let ok = cells.iter().all(|c| {
            varying_dim_index < c.dims.len()
                && fixed
                    .iter()
                    .all(|(i, v)| *i != varying_dim_index && c.dims.get(*i) == Some(v))
        });
        if !ok {
            return None;
        }
        cells.sort_by(|a, b| compare_labels(&a.dims[varying_dim_index], &b.dims[varying_dim_index]));
        Some(Subspace {
            cells,
            fixed,
            varying_dim_index,
        })
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// All fixed (dimension index, label) pairs, ascending by index.
    pub fn fixed(&self) -> &[(usize, String)] {
        &self.fixed
    }

    pub fn fixed_dim_index(&self) -> usize {
        self.fixed[0].0
    }

    pub fn fixed_dim_value(&self) -> &str {
        &self.fixed[0].1
    }

    /// Fixed labels joined with ", ", as used in descriptions.
    pub fn fixed_label(&self) -> String {
        self.fixed
            .iter()
            .map(|(_, v)| v.as_str())
            .collect::<Vec<_>>()
            .join(", ")
    }

    pub fn varying_dim_index(&self) -> usize {
        self.varying_dim_index
    }

    pub fn labels(&self) -> Vec<&str> {
        self.cells
            .iter()
            .map(|c| c.dims[self.varying_dim_index].as_str())
            .collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.value).collect()
    }

    /// True when every varying label is an integer (a time axis).
    pub fn is_temporal(&self) -> bool {
        self.cells
            .iter()
            .all(|c| c.dims[self.varying_dim_index].trim().parse::<i64>().is_ok())
    }

    /// Re-checks the shared-dimension predicate over the cells.
    pub fn shares_dimension(&self) -> bool {
        let d = self.cells[0].dims.len();
        (0..d).any(|k| self.cells.iter().all(|c| c.dims[k] == self.cells[0].dims[k]))
    }
}

/// Enumerates every subspace that fixes all dimensions but one.
///
/// Order: by first fixed dimension index, then fixed labels, then varying
/// dimension index. Subspaces with fewer than `min_len` cells are dropped.
/// One-dimensional tables have no subspaces.
pub fn enumerate_subspaces(table: &Table, min_len: usize) -> Vec<Subspace> {
    let d = table.dim_count();
    if d < 2 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for varying in 0..d {
        let mut groups: BTreeMap<Vec<String>, Vec<Cell>> = BTreeMap::new();
        for cell in table.cells() {
            let key = (0..d)
                .filter(|&i| i != varying)
                .map(|i| cell.dims[i].clone())
                .collect();
            groups.entry(key).or_default().push(cell.clone());
        }
        for (key, cells) in groups {
            if cells.len() < min_len.max(1) {
                continue;
            }
            let fixed = (0..d).filter(|&i| i != varying).zip(key).collect();
            out.extend(Subspace::new(cells, fixed, varying));
        }
    }
    out.sort_by(|a, b| {
        a.fixed_dim_index()
            .cmp(&b.fixed_dim_index())
            .then_with(|| {
                a.fixed
                    .iter()
                    .zip(&b.fixed)
                    .map(|((_, x), (_, y))| compare_labels(x, y))
                    .find(|o| o.is_ne())
                    .unwrap_or(Ordering::Equal)
            })
            .then_with(|| a.varying_dim_index.cmp(&b.varying_dim_index))
    });
    out
}

/// Raw sentences of the description text paired with a table.
#[derive(Debug, Clone, PartialEq)]
pub struct DocumentText {
    pub table_id: String,
    pub sentences: Vec<String>,
    pub meta: BTreeMap<String, String>,
}

impl DocumentText {
    pub fn report_year(&self) -> Option<i64> {
        self.meta.get(REPORT_YEAR_KEY)?.trim().parse().ok()
    }
}

#[derive(Deserialize)]
struct DocumentFile {
    table_id: Option<String>,
    #[serde(default)]
    meta: BTreeMap<String, Value>,
    text: String,
}

/// Serialized form of a document. `report_year` is written as an integer
/// when it parses as one.
pub fn document_json(table_id: &str, meta: &BTreeMap<String, String>, text: &str) -> String {
    let meta: serde_json::Map<String, Value> = meta
        .iter()
        .map(|(k, v)| {
            let value = match v.parse::<i64>() {
                Ok(n) if k == REPORT_YEAR_KEY => Value::from(n),
                _ => Value::from(v.clone()),
            };
            (k.clone(), value)
        })
        .collect();
    let doc = serde_json::json!({ "table_id": table_id, "meta": meta, "text": text });
    serde_json::to_string_pretty(&doc).expect("document serializes")
}

pub fn parse_document(text: &str, path: &Path) -> Result<DocumentText, TableError> {
    let file: DocumentFile = serde_json::from_str(text).map_err(|e| parse_error(path, &e))?;
    let table_id = file
        .table_id
        .filter(|id| !id.is_empty())
        .ok_or(TableError::MissingTableId)?;
    Ok(DocumentText {
        table_id,
        sentences: split_sentences(&file.text),
        meta: meta_to_strings(file.meta)?,
    })
}

pub fn load_document(path: impl AsRef<Path>) -> Result<DocumentText, TableError> {
    let path = path.as_ref();
    parse_document(&read(path)?, path)
}

/// Splits text on '.', '!' or '?' followed by whitespace. A period with a
/// digit on both sides never ends a sentence.
pub fn split_sentences(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut current = String::new();
    for (i, &c) in chars.iter().enumerate() {
        current.push(c);
        if !matches!(c, '.' | '!' | '?') {
            continue;
        }
        let prev = i.checked_sub(1).map(|j| chars[j]);
        let next = chars.get(i + 1).copied();
        let decimal = c == '.'
            && prev.is_some_and(|p| p.is_ascii_digit())
            && next.is_some_and(|n| n.is_ascii_digit());
        if !decimal && next.is_none_or(char::is_whitespace) {
            push_trimmed(&mut out, &mut current);
        }
    }
    push_trimmed(&mut out, &mut current);
    out
}

fn push_trimmed(out: &mut Vec<String>, current: &mut String) {
    let s = current.trim();
    if !s.is_empty() {
        out.push(s.to_string());
    }
    current.clear();
}

/// A dataset directory: `tables/<id>.json` and `texts/<id>.json`.
#[derive(Debug, Clone)]
pub struct DatasetDir {
    root: PathBuf,
}

impl DatasetDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        DatasetDir { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn tables_dir(&self) -> PathBuf {
        self.root.join("tables")
    }

    pub fn texts_dir(&self) -> PathBuf {
        self.root.join("texts")
    }

    pub fn table_path(&self, id: &str) -> PathBuf {
        self.tables_dir().join(format!("{id}.json"))
    }

    pub fn text_path(&self, id: &str) -> PathBuf {
        self.texts_dir().join(format!("{id}.json"))
    }

    /// Table ids present under `tables/`, sorted.
    pub fn table_ids(&self) -> Result<Vec<String>, TableError> {
        let dir = self.tables_dir();
        let entries = fs::read_dir(&dir).map_err(|source| TableError::Io {
            path: dir.clone(),
            source,
        })?;
        let mut ids = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|source| TableError::Io {
                path: dir.clone(),
                source,
            })?;
            let path = entry.path();
            if path.extension().is_some_and(|e| e == "json") {
                if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                    ids.push(stem.to_string());
                }
            }
        }
        ids.sort();
        Ok(ids)
    }

    pub fn load_table(&self, id: &str) -> Result<Table, TableError> {
        load_table(self.table_path(id))
    }

    /// Loads the document for `id`; its `table_id` must name an existing table.
    pub fn load_document(&self, id: &str) -> Result<DocumentText, TableError> {
        let doc = load_document(self.text_path(id))?;
        if !self.table_path(&doc.table_id).is_file() {
            return Err(TableError::UnknownTable(doc.table_id));
        }
        Ok(doc)
    }
}
