//! Brute-force ranking metrics written without the library's helpers.

use std::collections::BTreeMap;

use insight_core::eval::{average_precision_at_k, ndcg_at_k, precision_at_k, RankingPair, RelevanceMode};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Instance {
    pub ids: Vec<String>,
    pub gold: Vec<f64>,
    /// Predicted order as indices into `ids`.
    pub predicted: Vec<usize>,
    pub k: usize,
}

impl Instance {
    pub fn random(rng: &mut ChaCha8Rng) -> Self {
        let n = rng.random_range(1..=8);
        let k = rng.random_range(1..=n.min(5));
        let coarse = rng.random_bool(0.5);
        let gold = (0..n)
            .map(|_| if coarse { rng.random_range(0..5) as f64 / 4.0 } else { rng.random::<f64>() })
            .collect();
        let mut predicted: Vec<usize> = (0..n).collect();
        predicted.shuffle(rng);
        // Ids whose lexical order differs from their numeric order.
        let ids = (0..n).map(|i| format!("x{}", (i * 7 + 3) % 11)).collect();
        Instance { ids, gold, predicted, k }
    }

    pub fn pair(&self) -> RankingPair<f64> {
        let scores: BTreeMap<String, f64> = self.ids.iter().cloned().zip(self.gold.iter().copied()).collect();
        RankingPair::new("t", self.predicted.iter().map(|&i| self.ids[i].clone()).collect(), scores).unwrap()
    }

    /// Gold top-k membership: fewer than k items beat it on (score desc, id asc).
    fn in_gold_top_k(&self, i: usize) -> bool {
        let ahead = (0..self.ids.len())
            .filter(|&j| self.gold[j] > self.gold[i] || (self.gold[j] == self.gold[i] && self.ids[j] < self.ids[i]))
            .count();
        ahead < self.k
    }

    fn relevant(&self, i: usize, mode: RelevanceMode) -> bool {
        match mode {
            RelevanceMode::GoldTopK => self.in_gold_top_k(i),
            RelevanceMode::Binary => self.gold[i] > 0.0,
        }
    }

    pub fn precision(&self, mode: RelevanceMode) -> f64 {
        let hits = self.predicted[..self.k].iter().filter(|&&i| self.relevant(i, mode)).count();
        hits as f64 / self.k as f64
    }

    pub fn average_precision(&self, mode: RelevanceMode) -> f64 {
        let total = (0..self.ids.len()).filter(|&i| self.relevant(i, mode)).count();
        if total == 0 {
            return 0.0;
        }
        let mut sum = 0.0;
        for pos in 0..self.k {
            if self.relevant(self.predicted[pos], mode) {
                let hits = self.predicted[..=pos].iter().filter(|&&i| self.relevant(i, mode)).count();
                sum += hits as f64 / (pos + 1) as f64;
            }
        }
        sum / total.min(self.k) as f64
    }

    fn dcg(&self, order: &[usize]) -> f64 {
        order[..self.k]
            .iter()
            .enumerate()
            .map(|(pos, &i)| (2f64.powf(self.gold[i]) - 1.0) / ((pos + 2) as f64).ln() * std::f64::consts::LN_2)
            .sum()
    }

    /// Ideal DCG as the maximum over every permutation.
    pub fn ndcg(&self) -> f64 {
        let mut best = 0.0f64;
        let mut perm: Vec<usize> = (0..self.ids.len()).collect();
        permutations(&mut perm, 0, &mut |p| best = best.max(self.dcg(p)));
        if best <= 0.0 {
            1.0
        } else {
            self.dcg(&self.predicted) / best
        }
    }

    /// Largest difference between the library and the brute force.
    pub fn max_error(&self) -> f64 {
        let pair = self.pair();
        let mut err = (ndcg_at_k(&pair, self.k).unwrap() - self.ndcg()).abs();
        for mode in [RelevanceMode::GoldTopK, RelevanceMode::Binary] {
            err = err.max((precision_at_k(&pair, self.k, mode).unwrap() - self.precision(mode)).abs());
            err = err.max((average_precision_at_k(&pair, self.k, mode).unwrap() - self.average_precision(mode)).abs());
        }
        err
    }
}

fn permutations(p: &mut Vec<usize>, start: usize, visit: &mut impl FnMut(&[usize])) {
    if start == p.len() {
        visit(p);
        return;
    }
    for i in start..p.len() {
        p.swap(start, i);
        permutations(p, start + 1, visit);
        p.swap(start, i);
    }
}

pub fn instances(seed: u64, count: usize) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| Instance::random(&mut rng)).collect()
}
