use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ModelConfig, ModelError, RankModel, TableBatch, Variant, Vocabulary};
use crate::eval::{ndcg_at_k, RankingPair};
use crate::kernel::{AdamConfig, AdamState};
use crate::text::LabeledInsight;
use crate::Scalar;

/// What one optimizer step consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StepUnit {
    /// All insights of one table.
    Table,
    /// A single insight.
    Insight,
    /// Tables for the memory variant, single insights otherwise.
    #[default]
    Auto,
}

impl StepUnit {
    pub fn resolve(self, variant: Variant) -> StepUnit {
        match self {
            StepUnit::Auto if variant.uses_memory() => StepUnit::Table,
            StepUnit::Auto => StepUnit::Insight,
            other => other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub adam: AdamConfig,
    pub max_epochs: usize,
    /// Epochs without a validation improvement before stopping.
    pub patience: usize,
    /// Cutoff of the NDCG used for model selection.
    pub select_k: usize,
    /// Seeds the visiting order.
    pub seed: u64,
    pub step_unit: StepUnit,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            adam: AdamConfig::default(),
            max_epochs: 50,
            patience: 5,
            select_k: 5,
            seed: 0,
            step_unit: StepUnit::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean per-table loss after the epoch.
    pub train_loss: f64,
    pub val_ndcg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub initial_loss: f64,
    pub initial_val_ndcg: f64,
    pub epochs: Vec<EpochRecord>,
    /// 0 when no epoch beat the untrained parameters.
    pub best_epoch: usize,
    pub best_val_ndcg: f64,
    pub stopped_early: bool,
}

impl TrainLog {
    pub fn final_loss(&self) -> f64 {
        self.epochs.last().map_or(self.initial_loss, |e| e.train_loss)
    }

    pub fn min_loss(&self) -> f64 {
        self.epochs.iter().map(|e| e.train_loss).fold(self.initial_loss, f64::min)
    }
}

fn batches<T: Scalar>(model: &RankModel<T>, tables: &[Vec<LabeledInsight>]) -> Result<Vec<TableBatch<T>>, ModelError> {
    tables
        .iter()
        .filter(|t| !t.is_empty())
        .map(|t| model.labeled_batch(t))
        .collect()
}

fn mean_loss<T: Scalar>(model: &RankModel<T>, batches: &[TableBatch<T>]) -> Result<f64, ModelError> {
    let mut total = 0.0;
    for b in batches {
        total += model.batch_loss(b)?.to_f64_lossy();
    }
    Ok(total / batches.len() as f64)
}

/// Mean NDCG@min(k, n) of the model's ranking against gold scores.
pub(crate) fn mean_ndcg<T: Scalar>(model: &RankModel<T>, batches: &[TableBatch<T>], k: usize) -> Result<f64, ModelError> {
    if batches.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for b in batches {
        let ranked = model.rank_batch(b)?;
        let gold = b.gold().expect("labeled batch");
        let gold: BTreeMap<String, f64> = b
            .insight_ids
            .iter()
            .cloned()
            .zip(gold.iter().map(|g| g.to_f64_lossy()))
            .collect();
        let predicted = ranked.into_iter().map(|r| r.insight_id).collect();
        let pair = RankingPair::new(b.table_id.clone(), predicted, gold).map_err(|e| ModelError::Config(e.to_string()))?;
        total += ndcg_at_k(&pair, k.min(b.len())).map_err(|e| ModelError::Config(e.to_string()))?;
    }
    Ok(total / batches.len() as f64)
}

/// Adam training with one step per table (or per insight, see
/// [`StepUnit`]) in a seeded shuffled order. Returns the parameters with
/// the best validation NDCG, starting from the untrained ones. Training
/// tables select the model when `val` is empty.
pub fn train<T: Scalar>(
    mut model: RankModel<T>,
    train_set: &[Vec<LabeledInsight>],
    val: &[Vec<LabeledInsight>],
    config: &TrainConfig,
) -> Result<(RankModel<T>, TrainLog), ModelError> {
    let train_batches = batches(&model, train_set)?;
    if train_batches.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    let val_batches = batches(&model, val)?;
    let selection = if val_batches.is_empty() { &train_batches } else { &val_batches };
    let steps: Vec<TableBatch<T>> = match config.step_unit.resolve(model.config().variant) {
        StepUnit::Insight => train_batches
            .iter()
            .flat_map(|b| (0..b.len()).map(move |i| b.select(&[i])))
            .collect(),
        _ => train_batches.clone(),
    };

    let mut adam = AdamState::new(config.adam, model.params());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let initial_loss = mean_loss(&model, &train_batches)?;
    let initial_val_ndcg = mean_ndcg(&model, selection, config.select_k)?;
    let mut log = TrainLog {
        initial_loss,
        initial_val_ndcg,
        epochs: Vec::new(),
        best_epoch: 0,
        best_val_ndcg: initial_val_ndcg,
        stopped_early: false,
    };
    let mut best = model.clone();
    let mut stale = 0;
    let mut order: Vec<usize> = (0..steps.len()).collect();
    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let (_, grads) = model.loss_and_gradients(&steps[i])?;
            adam.step(model.params_mut(), &grads)?;
        }
        let train_loss = mean_loss(&model, &train_batches)?;
        let val_ndcg = mean_ndcg(&model, selection, config.select_k)?;
        log.epochs.push(EpochRecord {
            epoch,
            train_loss,
            val_ndcg,
        });
        if val_ndcg > log.best_val_ndcg {
            log.best_val_ndcg = val_ndcg;
            log.best_epoch = epoch;
            best = model.clone();
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                log.stopped_early = true;
                break;
            }
        }
    }
    Ok((best, log))
}

/// Builds the vocabulary from the training insights, initializes a model
/// with `init_seed` and trains it.
pub fn fit<T: Scalar>(
    model_config: ModelConfig,
    train_set: &[Vec<LabeledInsight>],
    val: &[Vec<LabeledInsight>],
    config: &TrainConfig,
    init_seed: u64,
) -> Result<(RankModel<T>, TrainLog), ModelError> {
    let vocab = Vocabulary::from_insights(train_set.iter().flatten().map(|l| &l.insight));
    let model = RankModel::new(model_config, vocab, init_seed)?;
    train(model, train_set, val, config)
}
