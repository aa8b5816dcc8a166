mod common;

use std::collections::{BTreeMap, HashMap};

use insight_core::baselines::{lloyd, rank_sig_cluster, rank_sig_dataset, rank_sig_table, BaselineConfig, KMeansConfig};
use insight_core::eval::{
    average_precision_at_k, ndcg_at_k, order_descending, precision_at_k, ranks_descending, RankingPair, RelevanceMode,
};
use insight_core::extract::{extract_all, point_significance, trend_fit, ExtractConfig, InsightType, PointSeries};
use insight_core::kernel::{Graph, Tensor};
use insight_core::model::{attend, ModelConfig, RankModel, TableMemory, Variant, Vocabulary};
use insight_core::split::{split_tables, SplitConfig};
use insight_core::table::{enumerate_subspaces, Cell, Table};
use insight_core::text::{label_insights, sim_combined, sim_header, sim_sentence, TokenizedSentence, TextConfig};
use proptest::prelude::*;
use proptest::sample::subsequence;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const WORDS: [&str; 10] = ["net", "income", "revenue", "grew", "cost", "fell", "sales", "2015", "total", "margin"];

fn words(max: usize) -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(prop::sample::select(WORDS.to_vec()).prop_map(String::from), 0..max)
}

fn nonempty_words(max: usize) -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(prop::sample::select(WORDS.to_vec()).prop_map(String::from), 1..max)
}

fn series(min: usize, max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1e6..1e6f64, min..max)
}

fn pair_from(perm: &[usize], gold: &[f64]) -> RankingPair<f64> {
    let ids: Vec<String> = (0..gold.len()).map(|i| format!("i{i}")).collect();
    let scores = ids.iter().cloned().zip(gold.iter().copied()).collect();
    RankingPair::new("t", perm.iter().map(|&i| ids[i].clone()).collect(), scores).unwrap()
}

fn small_model(variant: Variant, insights: &[insight_core::extract::Insight], seed: u64) -> RankModel<f64> {
    let config = ModelConfig {
        variant,
        dim: 6,
        filters: 4,
        window: 3,
        seq_len: 6,
        hidden: 5,
        init_range: 0.5,
        ..ModelConfig::default()
    };
    RankModel::new(config, Vocabulary::from_insights(insights), seed).unwrap()
}

proptest! {
    #[test]
    fn full_grid_has_rows_plus_columns_subspaces(r in 1usize..6, c in 1usize..6, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cells = Vec::new();
        for i in 0..r {
            for j in 0..c {
                cells.push(Cell::new([format!("row{i}"), format!("{}", 2000 + j)], rand::Rng::random::<f64>(&mut rng)));
            }
        }
        let table = Table::new("g", vec!["Item".into(), "Year".into()], cells, BTreeMap::new()).unwrap();
        let subspaces = enumerate_subspaces(&table, 1);
        prop_assert_eq!(subspaces.len(), r + c);
        for s in &subspaces {
            prop_assert!(s.shares_dimension());
        }
    }

    #[test]
    fn table_json_round_trip(items in 1usize..6, years in 1usize..8, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let table = common::random_table("rt", &mut rng, items, years);
        let text = table.to_json_string();
        let back = Table::from_json_str(&text, std::path::Path::new("rt.json")).unwrap();
        prop_assert_eq!(back, table);
    }

    #[test]
    fn significance_lies_in_unit_interval(values in series(0, 20)) {
        if let Some((i, sig)) = point_significance(&values) {
            prop_assert!(i < values.len());
            prop_assert!((0.0..=1.0).contains(&sig));
        }
        if let Some(fit) = trend_fit(&values) {
            prop_assert!((0.0..=1.0).contains(&fit.significance));
            prop_assert!((1e-12..=1.0).contains(&fit.p_value));
        }
    }

    #[test]
    fn reversal_flips_trend_and_keeps_significance(values in series(3, 16)) {
        let mut rev = values.clone();
        rev.reverse();
        let (a, b) = (trend_fit(&values), trend_fit(&rev));
        prop_assert_eq!(a.is_some(), b.is_some());
        if let (Some(a), Some(b)) = (a, b) {
            prop_assert_eq!(a.significance, b.significance);
            prop_assert_eq!(a.slope, -b.slope);
        }
    }

    #[test]
    fn extracted_trends_flip_type_on_reversal(values in prop::collection::vec(1.0..1e4f64, 3..10)) {
        let mut rev = values.clone();
        rev.reverse();
        let shape = |v: &[f64]| {
            let table = common::grid("s", &[("net income", v.to_vec())], 2010);
            extract_all(&table, &ExtractConfig { threshold: 0.0, ..ExtractConfig::default() })
                .into_iter()
                .find(|i| i.itype.is_shape())
        };
        match (shape(&values), shape(&rev)) {
            (Some(a), Some(b)) => {
                let flipped = match a.itype {
                    InsightType::ShapeIncreasing => InsightType::ShapeDecreasing,
                    _ => InsightType::ShapeIncreasing,
                };
                prop_assert_eq!(b.itype, flipped);
                prop_assert_eq!(a.significance, b.significance);
            }
            (None, None) => {}
            _ => prop_assert!(false, "only one direction produced a trend"),
        }
    }

    #[test]
    fn trend_significance_is_shift_and_scale_invariant(
        values in series(3, 16),
        shift in -1e3..1e3f64,
        scale in 1e-2..1e2f64,
    ) {
        let base = trend_fit(&values);
        let moved: Vec<f64> = values.iter().map(|v| v * scale + shift).collect();
        let moved = trend_fit(&moved);
        if let (Some(a), Some(b)) = (base, moved) {
            // Near-exact fits sit on the p clamp, where rounding can move t a lot.
            if a.p_value > 1e-9 {
                prop_assert!((a.significance - b.significance).abs() < 1e-8, "{} vs {}", a.significance, b.significance);
            }
        }
    }

    #[test]
    fn point_significance_grows_with_the_gap(rest in prop::collection::vec(-100.0..100.0f64, 2..10), gap in 0.0..500.0f64, extra in 0.0..500.0f64) {
        let top = rest.iter().fold(f64::NEG_INFINITY, |a, b| a.max(*b)).abs() + 200.0;
        let mut near = rest.clone();
        near.push(top + gap);
        let mut far = rest.clone();
        far.push(top + gap + extra);
        if let (Some((i, a)), Some((j, b))) = (point_significance(&near), point_significance(&far)) {
            prop_assert_eq!(i, rest.len());
            prop_assert_eq!(j, rest.len());
            prop_assert!(b >= a - 1e-12, "{b} < {a}");
        }
    }

    #[test]
    fn similarities_are_bounded(d in nonempty_words(8), h in words(4), s in nonempty_words(12), others in prop::collection::vec(words(4), 0..4)) {
        let mut headers = others;
        headers.push(h.clone());
        let ss = sim_sentence(&d, &s).unwrap();
        let sh = sim_header(&h, &s, &headers);
        let both = sim_combined(&d, &h, &s, &headers, (0.5, 0.5)).unwrap();
        for v in [ss, sh, both] {
            prop_assert!((0.0..=1.0).contains(&v), "{v}");
        }
    }

    #[test]
    fn sentence_similarity_is_symmetric_with_unit_identity(a in nonempty_words(10), b in nonempty_words(10)) {
        prop_assert_eq!(sim_sentence(&a, &b).unwrap(), sim_sentence(&b, &a).unwrap());
        prop_assert!((sim_sentence(&a, &a).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn adding_an_unshared_description_token_never_lowers_similarity(d in nonempty_words(8), s in nonempty_words(10), pick in any::<prop::sample::Index>()) {
        let count = |v: &[String], t: &str| v.iter().filter(|x| *x == t).count();
        let token = pick.get(&d).clone();
        if count(&s, &token) < count(&d, &token) {
            let mut more = s.clone();
            more.push(token);
            prop_assert!(sim_sentence(&d, &more).unwrap() >= sim_sentence(&d, &s).unwrap());
        }
    }

    #[test]
    fn label_ranks_are_a_permutation_independent_of_input_order(seed in any::<u64>(), items in 2usize..5, years in 3usize..7, texts in prop::collection::vec(nonempty_words(12), 1..4)) {
        let insights = common::random_insights(seed, items, years);
        prop_assume!(!insights.is_empty());
        let sentences: Vec<TokenizedSentence> = texts
            .into_iter()
            .enumerate()
            .map(|(position, tokens)| TokenizedSentence { position, raw: tokens.join(" "), tokens, has_number: false })
            .collect();
        let config = TextConfig::default();
        let labeled = label_insights(&insights, &sentences, &config).unwrap();
        let mut ranks: Vec<usize> = labeled.iter().map(|l| l.gold_rank).collect();
        ranks.sort_unstable();
        prop_assert_eq!(ranks, (1..=insights.len()).collect::<Vec<_>>());

        let mut shuffled = insights.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x5eed));
        let again = label_insights(&shuffled, &sentences, &config).unwrap();
        let by_id: HashMap<&str, (usize, f64)> = again.iter().map(|l| (l.insight.id.as_str(), (l.gold_rank, l.gold_score))).collect();
        for l in &labeled {
            prop_assert_eq!(by_id[l.insight.id.as_str()], (l.gold_rank, l.gold_score));
        }
    }

    #[test]
    fn metrics_are_bounded_and_one_for_the_gold_order(gold in prop::collection::vec(0.0..1.0f64, 1..9), seed in any::<u64>(), k in 1usize..9) {
        let n = gold.len();
        let k = k.min(n);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let pair = pair_from(&perm, &gold);
        for mode in [RelevanceMode::GoldTopK, RelevanceMode::Binary] {
            for v in [precision_at_k(&pair, k, mode).unwrap(), average_precision_at_k(&pair, k, mode).unwrap()] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
        let ndcg = ndcg_at_k(&pair, k).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&ndcg));

        let ideal = RankingPair::new("t", pair.gold_order().into_iter().map(String::from).collect(), pair.gold_scores.clone()).unwrap();
        prop_assert_eq!(precision_at_k(&ideal, k, RelevanceMode::GoldTopK).unwrap(), 1.0);
        prop_assert_eq!(average_precision_at_k(&ideal, k, RelevanceMode::GoldTopK).unwrap(), 1.0);
        prop_assert!((ndcg_at_k(&ideal, k).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn metrics_depend_only_on_the_predicted_order(gold in prop::collection::vec(0.0..1.0f64, 1..9), scores in prop::collection::vec(-5.0..5.0f64, 8), k in 1usize..9) {
        let n = gold.len();
        let k = k.min(n);
        let ids: Vec<String> = (0..n).map(|i| format!("i{i}")).collect();
        let ordered = |f: &dyn Fn(f64) -> f64| {
            let items: Vec<(&str, f64)> = ids.iter().map(String::as_str).zip(scores[..n].iter().map(|s| f(*s))).collect();
            order_descending(&items)
        };
        let a = pair_from(&ordered(&|x| x), &gold);
        let b = pair_from(&ordered(&|x| (x * 0.7).exp() + 3.0), &gold);
        prop_assert_eq!(&a.predicted, &b.predicted);
        prop_assert_eq!(ndcg_at_k(&a, k).unwrap(), ndcg_at_k(&b, k).unwrap());
        prop_assert_eq!(precision_at_k(&a, k, RelevanceMode::GoldTopK).unwrap(), precision_at_k(&b, k, RelevanceMode::GoldTopK).unwrap());
    }

    #[test]
    fn full_ndcg_is_one_only_for_the_gold_order(n in 1usize..7, s1 in any::<u64>(), s2 in any::<u64>()) {
        let mut gold_perm: Vec<usize> = (0..n).collect();
        gold_perm.shuffle(&mut ChaCha8Rng::seed_from_u64(s1));
        let gold: Vec<f64> = gold_perm.iter().map(|&r| (r + 1) as f64 / n as f64).collect();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(s2));
        let pair = pair_from(&perm, &gold);
        let is_gold = pair.gold_order().iter().zip(&pair.predicted).all(|(a, b)| *a == b.as_str());
        let ndcg = ndcg_at_k(&pair, n).unwrap();
        prop_assert_eq!(is_gold, (ndcg - 1.0).abs() < 1e-12, "ndcg {}", ndcg);
    }

    #[test]
    fn precision_is_symmetric_in_prediction_and_gold(n in 1usize..9, k in 1usize..9, s1 in any::<u64>(), s2 in any::<u64>()) {
        let k = k.min(n);
        let shuffled = |seed: u64| {
            let mut p: Vec<usize> = (0..n).collect();
            p.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            p
        };
        let (pred, gold_order) = (shuffled(s1), shuffled(s2));
        let scores_of = |order: &[usize]| {
            let mut g = vec![0.0; n];
            for (pos, &i) in order.iter().enumerate() {
                g[i] = (n - pos) as f64;
            }
            g
        };
        let forward = pair_from(&pred, &scores_of(&gold_order));
        let backward = pair_from(&gold_order, &scores_of(&pred));
        prop_assert_eq!(
            precision_at_k(&forward, k, RelevanceMode::GoldTopK).unwrap(),
            precision_at_k(&backward, k, RelevanceMode::GoldTopK).unwrap()
        );
    }

    #[test]
    fn softmax_rows_are_a_shift_invariant_simplex(rows in 1usize..4, cols in 1usize..6, data in prop::collection::vec(-30.0..30.0f64, 18), shift in -50.0..50.0f64) {
        let t = Tensor::new(rows, cols, data[..rows * cols].to_vec()).unwrap();
        let softmax = |t: Tensor<f64>| {
            let mut g = Graph::new();
            let v = g.constant(t);
            let s = g.softmax_rows(v).unwrap();
            g.value(s).clone()
        };
        let a = softmax(t.clone());
        let b = softmax(t.map(|x| x + shift));
        for r in 0..rows {
            let sum: f64 = (0..cols).map(|c| a.get(r, c)).sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            for c in 0..cols {
                prop_assert!(a.get(r, c) >= 0.0);
                prop_assert!((a.get(r, c) - b.get(r, c)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn attention_is_a_simplex_invariant_to_a_common_logit_shift(m in 1usize..6, d in 1usize..5, seed in any::<u64>(), shift in -20.0..20.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let col = |rng: &mut ChaCha8Rng, rows| Tensor::<f64>::uniform(rows, 1, 2.0, rng);
        let keys: Vec<Tensor<f64>> = (0..m).map(|_| col(&mut rng, d)).collect();
        let values: Vec<Tensor<f64>> = (0..m).map(|_| col(&mut rng, d)).collect();
        let q = col(&mut rng, d);
        let (out, alpha) = TableMemory::new(keys.clone(), values.clone()).unwrap().read(&q).unwrap();
        prop_assert!((alpha.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(alpha.iter().all(|a| *a >= 0.0));

        // One extra coordinate equal to 1 in q and `shift` in every key adds
        // `shift` to each inner product.
        let extend = |t: &Tensor<f64>, v: f64| {
            let mut data = t.data().to_vec();
            data.push(v);
            Tensor::column(data)
        };
        let mut g = Graph::new();
        let kcols: Vec<_> = keys.iter().map(|k| g.constant(extend(k, shift))).collect();
        let vcols: Vec<_> = values.iter().map(|v| g.constant(v.clone())).collect();
        let kmat = g.concat_cols(&kcols).unwrap();
        let vmat = g.concat_cols(&vcols).unwrap();
        let qv = g.constant(extend(&q, 1.0));
        let (shifted_out, shifted_alpha) = attend(&mut g, qv, kmat, vmat).unwrap();
        for (a, b) in alpha.iter().zip(g.value(shifted_alpha).data()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in out.data().iter().zip(g.value(shifted_out).data()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn scores_are_permutation_equivariant(seed in any::<u64>(), items in 2usize..5, years in 3usize..7) {
        let insights = common::random_insights(seed, items, years);
        prop_assume!(insights.len() >= 2);
        for variant in Variant::ALL {
            let model = small_model(variant, &insights, seed);
            let batch = model.batch(&insights).unwrap();
            let scores = model.batch_scores(&batch).unwrap();
            let mut perm: Vec<usize> = (0..insights.len()).collect();
            perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed.wrapping_add(1)));
            let permuted = model.batch_scores(&batch.select(&perm)).unwrap();
            for (pos, &i) in perm.iter().enumerate() {
                prop_assert!((permuted[pos] - scores[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ranking_follows_any_monotone_transform_of_scores(seed in any::<u64>(), items in 1usize..5, years in 3usize..7) {
        let insights = common::random_insights(seed, items, years);
        prop_assume!(!insights.is_empty());
        let model = small_model(Variant::Memory, &insights, seed);
        let ranked = model.predict_ranking(&insights).unwrap();
        let scores = model.batch_scores(&model.batch(&insights).unwrap()).unwrap();
        let logits: Vec<(&str, f64)> = insights.iter().map(|i| i.id.as_str()).zip(scores.iter().map(|s| (s / (1.0 - s)).ln())).collect();
        let ranks = ranks_descending(&logits);
        let mut seen: Vec<usize> = ranked.iter().map(|r| r.rank).collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, (1..=insights.len()).collect::<Vec<_>>());
        for r in &ranked {
            let i = insights.iter().position(|x| x.id == r.insight_id).unwrap();
            prop_assert_eq!(r.rank, ranks[i]);
        }
    }

    #[test]
    fn split_is_disjoint_and_exhaustive(n in 0usize..60, seed in any::<u64>()) {
        let ids: Vec<String> = (0..n).map(|i| format!("t{i:03}")).collect();
        let m = split_tables(&ids, &SplitConfig { seed, ..SplitConfig::default() }).unwrap();
        let mut all = m.all_ids();
        prop_assert_eq!(all.len(), n);
        all.sort();
        all.dedup();
        prop_assert_eq!(all, ids);
    }

    #[test]
    fn lloyd_inertia_never_increases_and_final_centroids_are_fixed(
        points in prop::collection::vec(prop::collection::vec(-10.0..10.0f64, 3), 3..30),
        init in subsequence((0..3).collect::<Vec<usize>>(), 1..=3),
    ) {
        let start: Vec<Vec<f64>> = init.iter().map(|&i| points[i].clone()).collect();
        let run = lloyd(&points, start, 100);
        for w in run.inertia_history.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9, "{:?}", run.inertia_history);
        }
        if run.converged {
            let again = lloyd(&points, run.centroids.clone(), 100);
            prop_assert_eq!(&again.assignment, &run.assignment);
            prop_assert!((again.inertia - run.inertia).abs() < 1e-9);
        }
    }

    #[test]
    fn baselines_agree_on_a_single_pooled_population(seed in any::<u64>(), items in 2usize..6, years in 4usize..8) {
        let insights = common::random_insights(seed, items, years);
        prop_assume!(!insights.is_empty());
        let config = BaselineConfig { kmeans: KMeansConfig { k: 1, ..KMeansConfig::default() }, ..BaselineConfig::default() };
        let table = rank_sig_table(&insights, PointSeries::ChangeRatio);
        let dataset = rank_sig_dataset(&insights, PointSeries::ChangeRatio);
        let (cluster, _) = rank_sig_cluster(&insights, &config).unwrap();
        let ids = |r: &[insight_core::model::RankedInsight]| r.iter().map(|x| (x.insight_id.clone(), x.rank)).collect::<Vec<_>>();
        prop_assert_eq!(ids(&table), ids(&dataset));
        prop_assert_eq!(ids(&table), ids(&cluster));
        let mut ranks: Vec<usize> = table.iter().map(|r| r.rank).collect();
        ranks.sort_unstable();
        prop_assert_eq!(ranks, (1..=insights.len()).collect::<Vec<_>>());
    }
}
