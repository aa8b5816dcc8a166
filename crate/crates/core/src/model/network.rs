use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ListLoss, ModelConfig, ModelError, Vocabulary};
use crate::eval::order_descending;
use crate::extract::{Insight, InsightType};
use crate::kernel::{load_params, save_params, Graph, KernelError, ParamSet, Tensor, Var};
use crate::text::LabeledInsight;
use crate::Scalar;

/// Parameter order inside every [`RankModel`] parameter set.
pub const PARAM_NAMES: [&str; 10] = [
    "embedding",
    "sig_w",
    "sig_b",
    "conv_w",
    "conv_b",
    "proj",
    "mlp_w1",
    "mlp_b1",
    "mlp_w2",
    "mlp_b2",
];

const PARAMS_FILE: &str = "params.json";
const VOCAB_FILE: &str = "vocab.json";
const CONFIG_FILE: &str = "model.json";

fn param_shapes(config: &ModelConfig, vocab_len: usize) -> [(usize, usize); 10] {
    let (d, f, r, h) = (config.dim, config.filters, config.window, config.hidden);
    [
        (d, vocab_len),
        (d, 1),
        (d, 1),
        (f, r),
        (f, 1),
        (d, f),
        (h, d),
        (h, 1),
        (1, h),
        (1, 1),
    ]
}

/// Z-scores `values` with the population standard deviation, keeps the last
/// `len` of them and right-pads with zeros. Constant input maps to zeros.
pub fn normalize_sequence<T: Scalar>(values: &[f64], len: usize) -> Result<Vec<T>, ModelError> {
    let first = *values.first().ok_or(ModelError::EmptySequence)?;
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    let constant = values.iter().all(|v| *v == first) || !(std > 0.0);
    let tail = &values[values.len().saturating_sub(len)..];
    let mut out: Vec<T> = tail
        .iter()
        .map(|v| if constant { T::zero() } else { T::of((v - mean) / std) })
        .collect();
    out.resize(len, T::zero());
    Ok(out)
}

/// `window x (M * offsets)`: column `m * offsets + o` holds
/// `seq[m][o..o + window]`.
fn patch_matrix<T: Scalar>(sequences: &[Vec<T>], window: usize) -> Tensor<T> {
    let len = sequences[0].len();
    let offsets = len - window + 1;
    let mut out = Tensor::zeros(window, sequences.len() * offsets);
    for (m, seq) in sequences.iter().enumerate() {
        for o in 0..offsets {
            for t in 0..window {
                out.set(t, m * offsets + o, seq[o + t]);
            }
        }
    }
    out
}

/// Model inputs for the insights of one table, independent of parameter
/// values.
#[derive(Debug, Clone, PartialEq)]
pub struct TableBatch<T> {
    pub table_id: String,
    pub insight_ids: Vec<String>,
    significance: Vec<T>,
    type_index: Vec<usize>,
    semantic_bags: Vec<Vec<(usize, T)>>,
    sequences: Vec<Vec<T>>,
    gold: Option<Vec<T>>,
}

impl<T: Scalar> TableBatch<T> {
    pub fn len(&self) -> usize {
        self.insight_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.insight_ids.is_empty()
    }

    pub fn gold(&self) -> Option<&[T]> {
        self.gold.as_deref()
    }

    /// The sub-batch made of the insights at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let pick = |v: &Vec<_>| indices.iter().map(|&i| v[i]).collect::<Vec<_>>();
        TableBatch {
            table_id: self.table_id.clone(),
            insight_ids: indices.iter().map(|&i| self.insight_ids[i].clone()).collect(),
            significance: pick(&self.significance),
            type_index: indices.iter().map(|&i| self.type_index[i]).collect(),
            semantic_bags: indices.iter().map(|&i| self.semantic_bags[i].clone()).collect(),
            sequences: indices.iter().map(|&i| self.sequences[i].clone()).collect(),
            gold: self.gold.as_ref().map(pick),
        }
    }
}

/// Tape handles of the model parameters, in [`PARAM_NAMES`] order.
#[derive(Debug, Clone, Copy)]
pub struct ModelVars {
    pub embedding: Var,
    pub sig_w: Var,
    pub sig_b: Var,
    pub conv_w: Var,
    pub conv_b: Var,
    pub proj: Var,
    pub mlp_w1: Var,
    pub mlp_b1: Var,
    pub mlp_w2: Var,
    pub mlp_b2: Var,
}

impl ModelVars {
    /// Records every parameter as a leaf; `trainable` selects param vs
    /// constant leaves.
    pub fn attach<T: Scalar>(g: &mut Graph<T>, params: &ParamSet<T>, trainable: bool) -> Self {
        let mut leaf = |i: usize| {
            let t = params.tensor(i).clone();
            if trainable {
                g.param(t)
            } else {
                g.constant(t)
            }
        };
        ModelVars {
            embedding: leaf(0),
            sig_w: leaf(1),
            sig_b: leaf(2),
            conv_w: leaf(3),
            conv_b: leaf(4),
            proj: leaf(5),
            mlp_w1: leaf(6),
            mlp_b1: leaf(7),
            mlp_w2: leaf(8),
            mlp_b2: leaf(9),
        }
    }

    pub fn all(&self) -> [Var; 10] {
        [
            self.embedding,
            self.sig_w,
            self.sig_b,
            self.conv_w,
            self.conv_b,
            self.proj,
            self.mlp_w1,
            self.mlp_b1,
            self.mlp_w2,
            self.mlp_b2,
        ]
    }
}

/// `W_sig * sig + b_sig` for a `1 x M` significance row.
pub fn significance_features<T: Scalar>(g: &mut Graph<T>, w: Var, b: Var, sig: Var) -> Result<Var, KernelError> {
    let x = g.matmul(w, sig)?;
    g.add_bias(x, b)
}

/// `A * Phi` with `Phi` given column-wise as sparse count bags.
pub fn bag_features<T: Scalar>(g: &mut Graph<T>, embedding: Var, bags: Vec<Vec<(usize, T)>>) -> Result<Var, KernelError> {
    g.embed_bags(embedding, bags)
}

/// Convolution over the patch matrix, tanh, max over the `offsets`
/// positions of each sequence, then projection to `d`.
pub fn subspace_features<T: Scalar>(
    g: &mut Graph<T>,
    conv_w: Var,
    conv_b: Var,
    proj: Var,
    patches: Var,
    offsets: usize,
) -> Result<Var, KernelError> {
    let z = g.matmul(conv_w, patches)?;
    let z = g.add_bias(z, conv_b)?;
    let z = g.tanh(z)?;
    let pooled = g.segment_max_cols(z, offsets)?;
    g.matmul(proj, pooled)
}

/// Key-value read: `alpha = softmax_rows(Q^T K)` and `out = V alpha^T`, so
/// output column `i` is `sum_k alpha[i][k] * V[:, k]`. Returns `(out, alpha)`.
pub fn attend<T: Scalar>(g: &mut Graph<T>, queries: Var, keys: Var, values: Var) -> Result<(Var, Var), KernelError> {
    let qt = g.transpose(queries)?;
    let logits = g.matmul(qt, keys)?;
    let alpha = g.softmax_rows(logits)?;
    let at = g.transpose(alpha)?;
    let out = g.matmul(values, at)?;
    Ok((out, alpha))
}

/// `sigmoid(w2 * tanh(w1 * o + b1) + b2)`, one score per column of `o`.
pub fn mlp_scores<T: Scalar>(g: &mut Graph<T>, w1: Var, b1: Var, w2: Var, b2: Var, o: Var) -> Result<Var, KernelError> {
    let h = g.matmul(w1, o)?;
    let h = g.add_bias(h, b1)?;
    let h = g.tanh(h)?;
    let s = g.matmul(w2, h)?;
    let s = g.add_bias(s, b2)?;
    g.sigmoid(s)
}

/// `1/2 * sum (scores - gold)^2`.
pub fn summed_l2_loss<T: Scalar>(g: &mut Graph<T>, scores: Var, gold: Var) -> Result<Var, KernelError> {
    let diff = g.sub(scores, gold)?;
    let sq = g.mul(diff, diff)?;
    let total = g.sum(sq)?;
    g.scale(total, T::of(0.5))
}

/// `-sum softmax(gold)_i * ln softmax(scores)_i` over a `1 x M` score row.
pub fn softmax_list_loss<T: Scalar>(g: &mut Graph<T>, scores: Var, gold: &[T]) -> Result<Var, KernelError> {
    let max = gold.iter().copied().fold(T::neg_infinity(), T::max);
    let exp: Vec<T> = gold.iter().map(|v| (*v - max).exp()).collect();
    let total: T = exp.iter().copied().sum();
    let target = g.constant(Tensor::row(exp.into_iter().map(|e| e / total).collect()));
    let p = g.softmax_rows(scores)?;
    let lp = g.ln(p)?;
    let weighted = g.mul(lp, target)?;
    let sum = g.sum(weighted)?;
    g.scale(sum, -T::one())
}

/// Tape handles produced by [`RankModel::forward`]; feature matrices are
/// `d x M`, `scores` is `1 x M`.
#[derive(Debug, Clone, Copy)]
pub struct Forward {
    pub f_sig: Var,
    pub f_type: Var,
    pub f_subspace: Var,
    /// Absent when the variant leaves semantics out of the representation.
    pub f_semantics: Option<Var>,
    pub semantics: Var,
    pub representation: Var,
    pub attention: Option<Var>,
    pub output: Var,
    pub scores: Var,
}

/// Feature vectors of one insight, each `d x 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedInsight<T> {
    pub f_sig: Tensor<T>,
    pub f_type: Tensor<T>,
    pub f_subspace: Tensor<T>,
    /// Zero when the variant leaves semantics out of the representation.
    pub f_semantics: Tensor<T>,
    pub representation: Tensor<T>,
    /// Memory key and query.
    pub semantics: Tensor<T>,
}

/// Aligned key and value columns of one table's insights.
#[derive(Debug, Clone, PartialEq)]
pub struct TableMemory<T> {
    keys: Vec<Tensor<T>>,
    values: Vec<Tensor<T>>,
}

impl<T: Scalar> TableMemory<T> {
    pub fn new(keys: Vec<Tensor<T>>, values: Vec<Tensor<T>>) -> Result<Self, ModelError> {
        if keys.len() != values.len() {
            return Err(ModelError::MemoryMismatch {
                keys: keys.len(),
                values: values.len(),
            });
        }
        let first = keys.first().ok_or(ModelError::EmptyMemory)?;
        let d = first.rows();
        for t in keys.iter().chain(&values) {
            if t.shape() != (d, 1) {
                return Err(KernelError::ShapeMismatch {
                    op: "memory slot",
                    left: (d, 1),
                    right: t.shape(),
                }
                .into());
            }
        }
        Ok(TableMemory { keys, values })
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Attention of `q` over the keys and the weighted sum of the values.
    pub fn read(&self, q: &Tensor<T>) -> Result<(Tensor<T>, Vec<T>), ModelError> {
        let mut g = Graph::new();
        let stack = |g: &mut Graph<T>, cols: &[Tensor<T>]| -> Result<Var, KernelError> {
            let vars: Vec<Var> = cols.iter().map(|c| g.constant(c.clone())).collect();
            g.concat_cols(&vars)
        };
        let keys = stack(&mut g, &self.keys)?;
        let values = stack(&mut g, &self.values)?;
        let q = g.constant(q.clone());
        let (out, alpha) = attend(&mut g, q, keys, values)?;
        Ok((g.value(out).clone(), g.value(alpha).data().to_vec()))
    }
}

/// One line of a prediction file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedInsight {
    pub table_id: String,
    pub insight_id: String,
    pub score: f64,
    pub rank: usize,
}

/// Ranks `scores` descending with ties broken by id.
pub(crate) fn rank_scores<T: Scalar>(table_id: &str, ids: &[String], scores: &[T]) -> Vec<RankedInsight> {
    let items: Vec<(&str, T)> = ids.iter().map(String::as_str).zip(scores.iter().copied()).collect();
    order_descending(&items)
        .into_iter()
        .enumerate()
        .map(|(pos, i)| RankedInsight {
            table_id: table_id.to_string(),
            insight_id: ids[i].clone(),
            score: scores[i].to_f64_lossy(),
            rank: pos + 1,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankModel<T> {
    config: ModelConfig,
    vocab: Vocabulary,
    params: ParamSet<T>,
}

impl<T: Scalar> RankModel<T> {
    /// Fresh parameters drawn uniformly from `[-init_range, init_range]`.
    pub fn new(config: ModelConfig, vocab: Vocabulary, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::new();
        for (name, (r, c)) in PARAM_NAMES.iter().zip(param_shapes(&config, vocab.len())) {
            params.insert(*name, Tensor::uniform(r, c, config.init_range, &mut rng));
        }
        Ok(RankModel { config, vocab, params })
    }

    pub fn from_parts(config: ModelConfig, vocab: Vocabulary, params: ParamSet<T>) -> Result<Self, ModelError> {
        config.validate()?;
        let names = params.names();
        if names != PARAM_NAMES {
            return Err(ModelError::Config(format!("parameter names {names:?} do not match {PARAM_NAMES:?}")));
        }
        for ((name, expected), got) in PARAM_NAMES.iter().zip(param_shapes(&config, vocab.len())).zip(params.shapes()) {
            if expected != got {
                return Err(ModelError::Config(format!("parameter `{name}` has shape {got:?}, expected {expected:?}")));
            }
        }
        Ok(RankModel { config, vocab, params })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn params(&self) -> &ParamSet<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet<T> {
        &mut self.params
    }

    fn param(&self, i: usize) -> &Tensor<T> {
        self.params.tensor(i)
    }

    /// Inputs for one table's insights, without gold scores.
    pub fn batch(&self, insights: &[Insight]) -> Result<TableBatch<T>, ModelError> {
        let first = insights.first().ok_or(ModelError::EmptyTable)?;
        let mut batch = TableBatch {
            table_id: first.table_id.clone(),
            insight_ids: Vec::with_capacity(insights.len()),
            significance: Vec::with_capacity(insights.len()),
            type_index: Vec::with_capacity(insights.len()),
            semantic_bags: Vec::with_capacity(insights.len()),
            sequences: Vec::with_capacity(insights.len()),
            gold: None,
        };
        for ins in insights {
            if ins.table_id != first.table_id {
                return Err(ModelError::MixedTables(first.table_id.clone(), ins.table_id.clone()));
            }
            batch.insight_ids.push(ins.id.clone());
            batch.significance.push(T::of(ins.significance));
            batch.type_index.push(self.vocab.type_index(ins.itype)?);
            batch.semantic_bags.push(self.semantic_bag(&ins.semantic_tokens()));
            batch
                .sequences
                .push(normalize_sequence(&ins.subspace.values(), self.config.seq_len)?);
        }
        Ok(batch)
    }

    /// Inputs plus gold scores.
    pub fn labeled_batch(&self, labeled: &[LabeledInsight]) -> Result<TableBatch<T>, ModelError> {
        let insights: Vec<Insight> = labeled.iter().map(|l| l.insight.clone()).collect();
        let mut batch = self.batch(&insights)?;
        batch.gold = Some(labeled.iter().map(|l| T::of(l.gold_score)).collect());
        Ok(batch)
    }

    fn semantic_bag(&self, tokens: &[String]) -> Vec<(usize, T)> {
        self.vocab
            .bag(tokens)
            .into_iter()
            .map(|(i, c)| (i, T::of(c as f64)))
            .collect()
    }

    /// Records the full network for `batch` on `g`.
    pub fn forward(&self, g: &mut Graph<T>, vars: &ModelVars, batch: &TableBatch<T>) -> Result<Forward, ModelError> {
        if batch.is_empty() {
            return Err(ModelError::EmptyTable);
        }
        let variant = self.config.variant;
        let sig = g.constant(Tensor::row(batch.significance.clone()));
        let f_sig = significance_features(g, vars.sig_w, vars.sig_b, sig)?;
        let type_bags = batch.type_index.iter().map(|&i| vec![(i, T::one())]).collect();
        let f_type = bag_features(g, vars.embedding, type_bags)?;
        let patches = g.constant(patch_matrix(&batch.sequences, self.config.window));
        let f_subspace = subspace_features(g, vars.conv_w, vars.conv_b, vars.proj, patches, self.config.offsets())?;
        let semantics = bag_features(g, vars.embedding, batch.semantic_bags.clone())?;
        let rep = g.add(f_sig, f_type)?;
        let mut representation = g.add(rep, f_subspace)?;
        let f_semantics = if variant.uses_semantics() {
            representation = g.add(representation, semantics)?;
            Some(semantics)
        } else {
            None
        };
        let (output, attention) = if variant.uses_memory() {
            let (o, a) = attend(g, semantics, semantics, representation)?;
            (o, Some(a))
        } else {
            (representation, None)
        };
        let scores = mlp_scores(g, vars.mlp_w1, vars.mlp_b1, vars.mlp_w2, vars.mlp_b2, output)?;
        Ok(Forward {
            f_sig,
            f_type,
            f_subspace,
            f_semantics,
            semantics,
            representation,
            attention,
            output,
            scores,
        })
    }

    /// Records the configured per-table loss on top of `fwd`.
    pub fn loss(&self, g: &mut Graph<T>, fwd: &Forward, batch: &TableBatch<T>) -> Result<Var, ModelError> {
        let gold = batch.gold.as_ref().ok_or(ModelError::GoldCount {
            expected: batch.len(),
            got: 0,
        })?;
        Ok(match self.config.list_loss {
            ListLoss::SummedL2 => {
                let gold = g.constant(Tensor::row(gold.clone()));
                summed_l2_loss(g, fwd.scores, gold)?
            }
            ListLoss::SoftmaxList => softmax_list_loss(g, fwd.scores, gold)?,
        })
    }

    fn eval_graph(&self) -> (Graph<T>, ModelVars) {
        let mut g = Graph::new();
        let vars = ModelVars::attach(&mut g, &self.params, false);
        (g, vars)
    }

    pub fn batch_scores(&self, batch: &TableBatch<T>) -> Result<Vec<T>, ModelError> {
        let (mut g, vars) = self.eval_graph();
        let fwd = self.forward(&mut g, &vars, batch)?;
        Ok(g.value(fwd.scores).data().to_vec())
    }

    pub fn batch_loss(&self, batch: &TableBatch<T>) -> Result<T, ModelError> {
        let (mut g, vars) = self.eval_graph();
        let fwd = self.forward(&mut g, &vars, batch)?;
        let loss = self.loss(&mut g, &fwd, batch)?;
        Ok(g.value(loss).data()[0])
    }

    /// Loss and parameter gradients (in [`PARAM_NAMES`] order) for one batch.
    pub fn loss_and_gradients(&self, batch: &TableBatch<T>) -> Result<(T, Vec<Tensor<T>>), ModelError> {
        let mut g = Graph::new();
        let vars = ModelVars::attach(&mut g, &self.params, true);
        let fwd = self.forward(&mut g, &vars, batch)?;
        let loss = self.loss(&mut g, &fwd, batch)?;
        let value = g.value(loss).data()[0];
        let mut grads = g.backward(loss)?;
        let grads = vars
            .all()
            .iter()
            .map(|v| grads.take(*v).ok_or(KernelError::UnknownVar(v.index())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok((value, grads))
    }

    pub fn table_loss(&self, labeled: &[LabeledInsight]) -> Result<T, ModelError> {
        self.batch_loss(&self.labeled_batch(labeled)?)
    }

    pub fn predict_ranking(&self, insights: &[Insight]) -> Result<Vec<RankedInsight>, ModelError> {
        self.rank_batch(&self.batch(insights)?)
    }

    pub fn rank_batch(&self, batch: &TableBatch<T>) -> Result<Vec<RankedInsight>, ModelError> {
        let scores = self.batch_scores(batch)?;
        Ok(rank_scores(&batch.table_id, &batch.insight_ids, &scores))
    }

    /// `W_sig * v + b_sig`.
    pub fn encode_significance(&self, v: T) -> Tensor<T> {
        self.param(1).zip_map(self.param(2), |w, b| w * v + b)
    }

    /// The embedding column of the type token.
    pub fn encode_type(&self, itype: InsightType) -> Result<Tensor<T>, ModelError> {
        let j = self.vocab.type_index(itype)?;
        let a = self.param(0);
        Ok(Tensor::column((0..a.rows()).map(|r| a.get(r, j)).collect()))
    }

    pub fn encode_subspace(&self, values: &[f64]) -> Result<Tensor<T>, ModelError> {
        let seq = normalize_sequence(values, self.config.seq_len)?;
        let (mut g, vars) = self.eval_graph();
        let patches = g.constant(patch_matrix(&[seq], self.config.window));
        let out = subspace_features(&mut g, vars.conv_w, vars.conv_b, vars.proj, patches, self.config.offsets())?;
        Ok(g.value(out).clone())
    }

    /// `A * Phi(tokens)`; out-of-vocabulary tokens are dropped, so an all-OOV
    /// list gives the zero vector.
    pub fn encode_semantics(&self, tokens: &[String]) -> Tensor<T> {
        let a = self.param(0);
        let mut out = Tensor::zeros(a.rows(), 1);
        for (j, c) in self.semantic_bag(tokens) {
            for r in 0..a.rows() {
                out.set(r, 0, out.get(r, 0) + c * a.get(r, j));
            }
        }
        out
    }

    pub fn encode(&self, insight: &Insight) -> Result<EncodedInsight<T>, ModelError> {
        let batch = self.batch(std::slice::from_ref(insight))?;
        let (mut g, vars) = self.eval_graph();
        let fwd = self.forward(&mut g, &vars, &batch)?;
        let d = self.config.dim;
        let enc = EncodedInsight {
            f_sig: g.value(fwd.f_sig).clone(),
            f_type: g.value(fwd.f_type).clone(),
            f_subspace: g.value(fwd.f_subspace).clone(),
            f_semantics: fwd
                .f_semantics
                .map_or_else(|| Tensor::zeros(d, 1), |v| g.value(v).clone()),
            representation: g.value(fwd.representation).clone(),
            semantics: g.value(fwd.semantics).clone(),
        };
        debug_assert!({
            let mut sum = enc.f_sig.clone();
            sum.add_assign(&enc.f_type);
            sum.add_assign(&enc.f_subspace);
            sum.add_assign(&enc.f_semantics);
            sum == enc.representation
        });
        Ok(enc)
    }

    /// Memory of a table built from its encoded insights.
    pub fn memory(&self, encoded: &[EncodedInsight<T>]) -> Result<TableMemory<T>, ModelError> {
        TableMemory::new(
            encoded.iter().map(|e| e.semantics.clone()).collect(),
            encoded.iter().map(|e| e.representation.clone()).collect(),
        )
    }

    /// MLP score of a `d x 1` representation.
    pub fn score(&self, o: &Tensor<T>) -> Result<T, ModelError> {
        let (mut g, vars) = self.eval_graph();
        let o = g.constant(o.clone());
        let s = mlp_scores(&mut g, vars.mlp_w1, vars.mlp_b1, vars.mlp_w2, vars.mlp_b2, o)?;
        let value = g.value(s);
        if value.shape() != (1, 1) {
            return Err(KernelError::ShapeMismatch {
                op: "score",
                left: (self.config.dim, 1),
                right: value.shape(),
            }
            .into());
        }
        Ok(value.data()[0])
    }

    /// Writes parameters, vocabulary and config into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<(), ModelError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| ModelError::checkpoint(dir, e))?;
        let params = dir.join(PARAMS_FILE);
        save_params(&self.params, &params).map_err(|e| ModelError::checkpoint(&params, e))?;
        self.vocab.save(dir.join(VOCAB_FILE))?;
        let config = dir.join(CONFIG_FILE);
        let text = serde_json::to_string_pretty(&self.config).expect("config serializes");
        std::fs::write(&config, text).map_err(|e| ModelError::checkpoint(&config, e))
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self, ModelError> {
        let dir = dir.as_ref();
        let config_path = dir.join(CONFIG_FILE);
        let text = std::fs::read_to_string(&config_path).map_err(|e| ModelError::checkpoint(&config_path, e))?;
        let config: ModelConfig = serde_json::from_str(&text).map_err(|e| ModelError::checkpoint(&config_path, e))?;
        let vocab = Vocabulary::load(dir.join(VOCAB_FILE))?;
        let params_path = dir.join(PARAMS_FILE);
        let params = load_params(&params_path).map_err(|e| ModelError::checkpoint(&params_path, e))?;
        Self::from_parts(config, vocab, params)
    }
}
