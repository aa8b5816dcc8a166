//! Finite-difference checks of every network block on random inputs.

use insight_core::kernel::{check_gradients, GradCheckConfig, GradCheckReport, Graph, KernelError, Tensor, Var};
use insight_core::model::{
    attend, bag_features, mlp_scores, significance_features, softmax_list_loss, subspace_features, summed_l2_loss,
    ListLoss, ModelConfig, ModelVars, RankModel, Variant, Vocabulary,
};
use insight_core::text::LabeledInsight;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const D: usize = 5;

fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor<f64> {
    Tensor::uniform(rows, cols, 1.0, rng)
}

/// Random weights turning a `rows x cols` output into a scalar, so that
/// every output entry gets a distinct upstream gradient.
fn project(g: &mut Graph<f64>, out: Var, weights: &Tensor<f64>) -> Result<Var, KernelError> {
    let w = g.constant(weights.clone());
    let prod = g.mul(out, w)?;
    g.sum(prod)
}

fn check(inputs: &[Tensor<f64>], out_shape: (usize, usize), rng: &mut ChaCha8Rng, f: impl Fn(&mut Graph<f64>, &[Var]) -> Result<Var, KernelError>) -> GradCheckReport {
    let weights = uniform(rng, out_shape.0, out_shape.1);
    check_gradients(inputs, |g, v| {
        let out = f(g, v)?;
        project(g, out, &weights)
    }, GradCheckConfig::default())
    .unwrap()
}

fn labeled(insights: Vec<insight_core::extract::Insight>, rng: &mut ChaCha8Rng) -> Vec<LabeledInsight> {
    insights
        .into_iter()
        .map(|insight| LabeledInsight {
            insight,
            gold_score: rng.random::<f64>(),
            best_sentence_index: None,
            gold_rank: 1,
        })
        .collect()
}

fn model_config(variant: Variant, list_loss: ListLoss) -> ModelConfig {
    ModelConfig {
        variant,
        dim: D,
        filters: 3,
        window: 3,
        seq_len: 5,
        hidden: 4,
        init_range: 0.5,
        list_loss,
    }
}

/// Full `table_loss` of a model, checked with respect to every parameter.
fn check_table_loss(variant: Variant, list_loss: ListLoss, seed: u64, rng: &mut ChaCha8Rng) -> GradCheckReport {
    let insights = super::random_insights(seed, 3, 5);
    let data = labeled(insights, rng);
    let model = RankModel::<f64>::new(model_config(variant, list_loss), Vocabulary::from_insights(data.iter().map(|l| &l.insight)), seed).unwrap();
    let batch = model.labeled_batch(&data).unwrap();
    let inputs: Vec<Tensor<f64>> = model.params().iter().map(|(_, t)| t.clone()).collect();
    let report = check_gradients(&inputs, |g, v| {
        let vars = ModelVars {
            embedding: v[0],
            sig_w: v[1],
            sig_b: v[2],
            conv_w: v[3],
            conv_b: v[4],
            proj: v[5],
            mlp_w1: v[6],
            mlp_b1: v[7],
            mlp_w2: v[8],
            mlp_b2: v[9],
        };
        let fwd = model.forward(g, &vars, &batch).expect("forward");
        Ok(model.loss(g, &fwd, &batch).expect("loss"))
    }, GradCheckConfig::default())
    .unwrap();
    // The tape-built loss must also agree with the model's own entry points.
    let (value, grads) = model.loss_and_gradients(&batch).unwrap();
    assert!((value - model.table_loss(&data).unwrap()).abs() < 1e-12);
    assert_eq!(grads.len(), 10);
    report
}

/// Runs every check for one seed and returns `(block, report)` pairs.
pub fn suite(seed: u64) -> Vec<(&'static str, GradCheckReport)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rng = &mut rng;
    let m = 3;
    let mut out = Vec::new();

    let (w, b, sig) = (uniform(rng, D, 1), uniform(rng, D, 1), uniform(rng, 1, m).map(|x| x.abs()));
    out.push(("significance", check(&[w, b, sig], (D, m), rng, |g, v| significance_features(g, v[0], v[1], v[2]))));

    let vocab = 7;
    let bags: Vec<Vec<(usize, f64)>> = (0..m)
        .map(|_| (0..3).map(|_| (rng.random_range(0..vocab), rng.random_range(1..3) as f64)).collect())
        .collect();
    let a = uniform(rng, D, vocab);
    out.push(("embedding", check(&[a], (D, m), rng, |g, v| bag_features(g, v[0], bags.clone()))));

    let (window, offsets, filters) = (3, 4, 3);
    let patches = uniform(rng, window, m * offsets);
    let (cw, cb, proj) = (uniform(rng, filters, window), uniform(rng, filters, 1), uniform(rng, D, filters));
    out.push((
        "subspace",
        check(&[cw, cb, proj, patches], (D, m), rng, |g, v| subspace_features(g, v[0], v[1], v[2], v[3], offsets)),
    ));

    let (q, k, values) = (uniform(rng, D, m), uniform(rng, D, m), uniform(rng, D, m));
    out.push(("memory read", check(&[q.clone(), k, values], (D, m), rng, |g, v| Ok(attend(g, v[0], v[1], v[2])?.0))));
    out.push((
        "self-keyed memory read",
        check(&[q], (D, m), rng, |g, v| Ok(attend(g, v[0], v[0], v[0])?.0)),
    ));

    let h = 4;
    let (w1, b1, w2, b2, o) = (uniform(rng, h, D), uniform(rng, h, 1), uniform(rng, 1, h), uniform(rng, 1, 1), uniform(rng, D, m));
    out.push(("mlp", check(&[w1, b1, w2, b2, o], (1, m), rng, |g, v| mlp_scores(g, v[0], v[1], v[2], v[3], v[4]))));

    let (scores, gold) = (uniform(rng, 1, m), uniform(rng, 1, m));
    out.push((
        "summed l2",
        check_gradients(&[scores.clone(), gold.clone()], |g, v| summed_l2_loss(g, v[0], v[1]), GradCheckConfig::default()).unwrap(),
    ));
    let gold_row = gold.data().to_vec();
    out.push((
        "softmax list",
        check_gradients(&[scores], |g, v| softmax_list_loss(g, v[0], &gold_row), GradCheckConfig::default()).unwrap(),
    ));

    out.push(("table loss (cnn)", check_table_loss(Variant::Cnn, ListLoss::SummedL2, seed, rng)));
    out.push(("table loss (semantics)", check_table_loss(Variant::Semantics, ListLoss::SummedL2, seed, rng)));
    out.push(("table loss (memory)", check_table_loss(Variant::Memory, ListLoss::SummedL2, seed, rng)));
    out.push(("table loss (memory, softmax list)", check_table_loss(Variant::Memory, ListLoss::SoftmaxList, seed, rng)));
    out
}
