//! File-backed stages shared by the command line and the end-to-end run.
//!
//! A run directory holds `insights.jsonl`, `significance.json`,
//! `labels/<split>.jsonl`, `models/<variant>/`, `predictions/<split>/<method>.jsonl`,
//! `metrics.json` and `report.txt`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::{rank_sig_cluster, rank_sig_dataset, rank_sig_table, BaselineConfig, ClusterModel};
use crate::config::{Config, SignificanceSource};
use crate::eval::{evaluate_corpus, render_table, MetricReport, RankingPair};
use crate::extract::{extract_all, Insight, InsightRecord};
use crate::io::{read_json, read_jsonl, write_json, write_jsonl, write_text};
use crate::model::{fit, RankModel, RankedInsight, TrainLog, Variant};
use crate::split::{split_tables, Split, SplitManifest, MANIFEST_FILE};
use crate::table::DatasetDir;
use crate::text::{label_insights, preprocess, LabeledInsight, LabeledRecord};
use crate::{Error, Result};

/// A ranking method compared in the report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    SigTable,
    SigDataset,
    SigCluster,
    Tar(Variant),
}

impl Method {
    pub const BASELINES: [Method; 3] = [Method::SigTable, Method::SigDataset, Method::SigCluster];

    pub fn name(self) -> &'static str {
        match self {
            Method::SigTable => "Sig_table",
            Method::SigDataset => "Sig_dataset",
            Method::SigCluster => "Sig_cluster",
            Method::Tar(v) => v.method_name(),
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "sig_table" => Ok(Method::SigTable),
            "sig_dataset" => Ok(Method::SigDataset),
            "sig_cluster" => Ok(Method::SigCluster),
            "tar" | "tar_memory" => Ok(Method::Tar(Variant::Memory)),
            "tar_semantics" => Ok(Method::Tar(Variant::Semantics)),
            "tar_cnn" => Ok(Method::Tar(Variant::Cnn)),
            other => Err(format!(
                "unknown method `{other}` (tar, tar_cnn, tar_semantics, tar_memory, sig_table, sig_dataset, sig_cluster)"
            )),
        }
    }
}

/// One line of a prediction file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub method: String,
    pub table_id: String,
    pub insight_id: String,
    pub score: f64,
    pub rank: usize,
}

impl PredictionRecord {
    fn new(method: Method, r: RankedInsight) -> Self {
        PredictionRecord {
            method: method.name().to_string(),
            table_id: r.table_id,
            insight_id: r.insight_id,
            score: r.score,
            rank: r.rank,
        }
    }
}

/// Paths inside a run directory.
#[derive(Debug, Clone)]
pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        RunDir { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn insights(&self) -> PathBuf {
        self.root.join("insights.jsonl")
    }

    pub fn significance(&self) -> PathBuf {
        self.root.join("significance.json")
    }

    pub fn clusters(&self) -> PathBuf {
        self.root.join("clusters.json")
    }

    pub fn labels(&self, split: Split) -> PathBuf {
        self.root.join("labels").join(format!("{split}.jsonl"))
    }

    pub fn model(&self, variant: Variant) -> PathBuf {
        self.root.join("models").join(variant.method_name())
    }

    pub fn train_log(&self, variant: Variant) -> PathBuf {
        self.model(variant).join("train_log.json")
    }

    pub fn predictions(&self, split: Split, method: Method) -> PathBuf {
        self.root
            .join("predictions")
            .join(split.as_str())
            .join(format!("{}.jsonl", method.name()))
    }

    pub fn metrics(&self) -> PathBuf {
        self.root.join("metrics.json")
    }

    pub fn report(&self) -> PathBuf {
        self.root.join("report.txt")
    }
}

pub fn group_by_table<T>(items: Vec<T>, table: impl Fn(&T) -> &str) -> BTreeMap<String, Vec<T>> {
    let mut out: BTreeMap<String, Vec<T>> = BTreeMap::new();
    for item in items {
        out.entry(table(&item).to_string()).or_default().push(item);
    }
    out
}

fn record_error(path: &Path, msg: String) -> Error {
    Error::Record {
        path: path.to_path_buf(),
        line: 0,
        msg,
    }
}

pub fn load_insights(path: &Path) -> Result<Vec<Insight>> {
    read_jsonl::<InsightRecord>(path)?
        .into_iter()
        .map(|r| Insight::from_record(r).map_err(|m| record_error(path, m)))
        .collect()
}

pub fn load_labels(path: &Path) -> Result<Vec<LabeledInsight>> {
    read_jsonl::<LabeledRecord>(path)?
        .into_iter()
        .map(|r| LabeledInsight::from_record(r).map_err(|m| record_error(path, m)))
        .collect()
}

/// Seeded split of every table in the dataset, saved as `split.json`.
pub fn stage_split(dataset: &DatasetDir, config: &Config) -> Result<SplitManifest> {
    let manifest = split_tables(&dataset.table_ids()?, &config.split)?;
    manifest.save(&dataset.root().join(MANIFEST_FILE))?;
    Ok(manifest)
}

pub fn load_manifest(dataset: &DatasetDir) -> Result<SplitManifest> {
    SplitManifest::load(&dataset.root().join(MANIFEST_FILE))
}

/// Insight significance as the neural rankers see it.
pub fn input_significance(
    insights: &[Insight],
    source: SignificanceSource,
    baselines: &BaselineConfig,
) -> Result<(BTreeMap<String, f64>, Option<ClusterModel>)> {
    let from_ranked = |r: Vec<RankedInsight>| r.into_iter().map(|x| (x.insight_id, x.score)).collect();
    Ok(match source {
        SignificanceSource::Extracted => (insights.iter().map(|i| (i.id.clone(), i.significance)).collect(), None),
        SignificanceSource::Table => (from_ranked(rank_sig_table(insights, baselines.point_series)), None),
        SignificanceSource::Dataset => (from_ranked(rank_sig_dataset(insights, baselines.point_series)), None),
        SignificanceSource::Cluster => {
            let (ranked, model) = rank_sig_cluster(insights, baselines)?;
            (from_ranked(ranked), Some(model))
        }
    })
}

/// Extracts insights from every table of the manifest and records the
/// significance fed to the neural rankers.
pub fn stage_extract(dataset: &DatasetDir, run: &RunDir, config: &Config) -> Result<Vec<Insight>> {
    let manifest = load_manifest(dataset)?;
    let mut insights = Vec::new();
    for id in manifest.all_ids() {
        insights.extend(extract_all(&dataset.load_table(&id)?, &config.extract));
    }
    write_jsonl(&run.insights(), insights.iter().map(Insight::to_record).collect::<Vec<_>>().iter())?;
    let (significance, clusters) = input_significance(&insights, config.pipeline.significance_source, &config.baselines)?;
    write_json(&run.significance(), &significance)?;
    if let Some(c) = clusters {
        write_json(&run.clusters(), &c)?;
    }
    Ok(insights)
}

/// Labels the insights of one split against that split's texts only.
pub fn stage_label(dataset: &DatasetDir, run: &RunDir, split: Split, config: &Config) -> Result<Vec<LabeledInsight>> {
    let manifest = load_manifest(dataset)?;
    let scope = manifest.scope(dataset, split);
    let by_table = group_by_table(load_insights(&run.insights())?, |i| &i.table_id);
    let mut labeled = Vec::new();
    for id in scope.ids() {
        let Some(insights) = by_table.get(id) else { continue };
        let doc = scope.load_document(id)?;
        let mut keywords: Vec<String> = insights.iter().flat_map(Insight::header_tokens).collect();
        keywords.sort();
        keywords.dedup();
        let sentences = preprocess(&doc, &keywords, &config.text);
        labeled.extend(label_insights(insights, &sentences, &config.text)?);
    }
    write_jsonl(&run.labels(split), labeled.iter().map(LabeledInsight::to_record).collect::<Vec<_>>().iter())?;
    Ok(labeled)
}

fn apply_significance(insight: &mut Insight, significance: &BTreeMap<String, f64>) {
    if let Some(s) = significance.get(&insight.id) {
        insight.significance = *s;
    }
}

fn labeled_tables(run: &RunDir, split: Split, significance: &BTreeMap<String, f64>) -> Result<Vec<Vec<LabeledInsight>>> {
    let mut labels = load_labels(&run.labels(split))?;
    labels.iter_mut().for_each(|l| apply_significance(&mut l.insight, significance));
    Ok(group_by_table(labels, |l| &l.insight.table_id).into_values().collect())
}

/// Trains one variant on the train labels with validation-based selection.
pub fn stage_train(run: &RunDir, variant: Variant, config: &Config) -> Result<TrainLog> {
    let significance: BTreeMap<String, f64> = read_json(&run.significance())?;
    let train = labeled_tables(run, Split::Train, &significance)?;
    let val = labeled_tables(run, Split::Val, &significance)?;
    let model_config = crate::model::ModelConfig {
        variant,
        ..config.model.clone()
    };
    let (model, log) = fit::<f64>(model_config, &train, &val, &config.train, config.seed)?;
    model.save(run.model(variant))?;
    write_json(&run.train_log(variant), &log)?;
    Ok(log)
}

fn split_insights(dataset: &DatasetDir, run: &RunDir, split: Split) -> Result<Vec<Insight>> {
    let manifest = load_manifest(dataset)?;
    let ids: std::collections::BTreeSet<&String> = manifest.ids(split).iter().collect();
    Ok(load_insights(&run.insights())?
        .into_iter()
        .filter(|i| ids.contains(&i.table_id))
        .collect())
}

fn write_predictions(run: &RunDir, split: Split, method: Method, ranked: Vec<RankedInsight>) -> Result<Vec<PredictionRecord>> {
    let records: Vec<PredictionRecord> = ranked.into_iter().map(|r| PredictionRecord::new(method, r)).collect();
    write_jsonl(&run.predictions(split, method), records.iter())?;
    Ok(records)
}

/// Ranks the insights of `split` with a trained variant.
pub fn stage_rank(dataset: &DatasetDir, run: &RunDir, variant: Variant, split: Split) -> Result<Vec<PredictionRecord>> {
    let model: RankModel<f64> = RankModel::load(run.model(variant))?;
    let significance: BTreeMap<String, f64> = read_json(&run.significance())?;
    let mut insights = split_insights(dataset, run, split)?;
    insights.iter_mut().for_each(|i| apply_significance(i, &significance));
    let mut ranked = Vec::new();
    for table in group_by_table(insights, |i| &i.table_id).into_values() {
        ranked.extend(model.predict_ranking(&table)?);
    }
    write_predictions(run, split, Method::Tar(variant), ranked)
}

/// Runs a significance baseline over the whole corpus and keeps the tables
/// of `split`.
pub fn stage_baseline(
    dataset: &DatasetDir,
    run: &RunDir,
    method: Method,
    split: Split,
    config: &Config,
) -> Result<Vec<PredictionRecord>> {
    let insights = load_insights(&run.insights())?;
    let cfg = &config.baselines;
    let ranked = match method {
        Method::SigTable => rank_sig_table(&insights, cfg.point_series),
        Method::SigDataset => rank_sig_dataset(&insights, cfg.point_series),
        Method::SigCluster => rank_sig_cluster(&insights, cfg)?.0,
        Method::Tar(_) => return Err(Error::Config(format!("{} is not a baseline", method.name()))),
    };
    let manifest = load_manifest(dataset)?;
    let keep: std::collections::BTreeSet<&String> = manifest.ids(split).iter().collect();
    let ranked = ranked.into_iter().filter(|r| keep.contains(&r.table_id)).collect();
    write_predictions(run, split, method, ranked)
}

/// Metrics of one method's predictions against the gold labels.
pub fn evaluate_predictions(
    method: &str,
    predictions: &[PredictionRecord],
    gold: &[LabeledInsight],
    config: &Config,
) -> Result<MetricReport> {
    let mut predicted: BTreeMap<&str, Vec<&PredictionRecord>> = BTreeMap::new();
    for p in predictions {
        predicted.entry(p.table_id.as_str()).or_default().push(p);
    }
    let mut gold_tables: BTreeMap<&str, BTreeMap<String, f64>> = BTreeMap::new();
    for g in gold {
        gold_tables
            .entry(g.insight.table_id.as_str())
            .or_default()
            .insert(g.insight.id.clone(), g.gold_score);
    }
    let mut pairs = Vec::with_capacity(gold_tables.len());
    for (table, scores) in gold_tables {
        let mut preds = predicted.remove(table).unwrap_or_default();
        preds.sort_by_key(|p| p.rank);
        let order = preds.iter().map(|p| p.insight_id.clone()).collect();
        pairs.push(RankingPair::new(table, order, scores)?);
    }
    if let Some(extra) = predicted.keys().next() {
        return Err(Error::Config(format!("{method}: predictions for table `{extra}` without gold labels")));
    }
    Ok(evaluate_corpus(method, &pairs, &config.eval.ks, config.eval.relevance)?)
}

/// Evaluates every method with a prediction file for `split` and writes
/// `metrics.json` and `report.txt`.
pub fn stage_eval(run: &RunDir, methods: &[Method], split: Split, config: &Config) -> Result<Vec<MetricReport>> {
    let gold = load_labels(&run.labels(split))?;
    let mut reports = Vec::new();
    for &m in methods {
        let preds: Vec<PredictionRecord> = read_jsonl(&run.predictions(split, m))?;
        reports.push(evaluate_predictions(m.name(), &preds, &gold, config)?);
    }
    write_json(&run.metrics(), &reports)?;
    write_text(&run.report(), &render_table(&reports))?;
    Ok(reports)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineReport {
    pub reports: Vec<MetricReport>,
    pub train_logs: BTreeMap<String, TrainLog>,
}

impl PipelineReport {
    pub fn ndcg(&self, method: Method, k: usize) -> Option<f64> {
        self.reports
            .iter()
            .find(|r| r.method == method.name())
            .and_then(|r| r.at(k))
            .map(|m| m.ndcg)
    }

    pub fn table(&self) -> String {
        render_table(&self.reports)
    }
}

/// All methods in report order: baselines, then the configured variants.
pub fn pipeline_methods(config: &Config) -> Vec<Method> {
    let mut methods = Method::BASELINES.to_vec();
    methods.extend(config.pipeline.variants.iter().map(|v| Method::Tar(*v)));
    methods
}

/// Split (when no manifest exists), extract, label, train, rank, run the
/// baselines and evaluate on the test split.
pub fn run_pipeline(dataset: &DatasetDir, run: &RunDir, config: &Config) -> Result<PipelineReport> {
    config.validate()?;
    if !dataset.root().join(MANIFEST_FILE).is_file() {
        stage_split(dataset, config).map_err(|e| e.in_stage("split"))?;
    }
    stage_extract(dataset, run, config).map_err(|e| e.in_stage("extract"))?;
    for split in Split::ALL {
        stage_label(dataset, run, split, config).map_err(|e| e.in_stage("label"))?;
    }
    let mut train_logs = BTreeMap::new();
    for &variant in &config.pipeline.variants {
        let log = stage_train(run, variant, config).map_err(|e| e.in_stage("train"))?;
        train_logs.insert(variant.method_name().to_string(), log);
        stage_rank(dataset, run, variant, Split::Test).map_err(|e| e.in_stage("rank"))?;
    }
    for method in Method::BASELINES {
        stage_baseline(dataset, run, method, Split::Test, config).map_err(|e| e.in_stage("baseline"))?;
    }
    let reports = stage_eval(run, &pipeline_methods(config), Split::Test, config).map_err(|e| e.in_stage("eval"))?;
    Ok(PipelineReport { reports, train_logs })
}
