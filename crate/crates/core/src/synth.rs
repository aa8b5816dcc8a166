//! Seeded generator of item-by-year tables with planted trends and
//! outliers, plus report texts that verbalize the most important insights.
//!
//! Importance mixes item popularity (visible only through header tokens),
//! insight kind, and table context: a trend running against the table's
//! majority direction is boosted.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::extract::{extract_all, ExtractConfig, Insight, InsightType};
use crate::table::{document_json, save_table, Cell, DatasetDir, Table, MEASURE_KEY, REPORT_YEAR_KEY};
use crate::{Error, Result};

const FIRST_WORDS: [&str; 10] = [
    "northern", "southern", "coastal", "inland", "retail", "wholesale", "online", "consumer", "industrial", "premium",
];
const SECOND_WORDS: [&str; 6] = ["region", "segment", "division", "market", "channel", "portfolio"];
const MEASURES: [&str; 3] = ["Reported net value", "Annual reported amount", "Recorded closing balance"];
const FILLERS: [&str; 4] = ["Notably, ", "In addition, ", "During the period, ", "As expected, "];
const DISTRACTORS: [&str; 5] = [
    "The board approved a quarterly dividend of {x} per share payable to holders of record.",
    "Headcount stood at {n} employees at the end of the reporting period across all offices.",
    "The company repurchased {n} thousand shares under the existing authorization program.",
    "Capital expenditure amounted to {x} million and was funded from operating cash flows.",
    "Management expects general market conditions to remain stable over the next {n} quarters.",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImportanceWeights {
    pub popularity: f64,
    pub shape: f64,
    /// Added to trends whose direction opposes the table majority.
    pub contrary: f64,
    pub row_point: f64,
    pub column_point: f64,
    pub significance: f64,
    /// Half-width of the uniform noise term.
    pub noise: f64,
}

impl Default for ImportanceWeights {
    fn default() -> Self {
        ImportanceWeights {
            popularity: 1.0,
            shape: 0.4,
            contrary: 1.2,
            row_point: 0.1,
            column_point: -0.6,
            significance: 0.0,
            noise: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub tables: usize,
    pub min_items: usize,
    pub max_items: usize,
    pub min_years: usize,
    pub max_years: usize,
    /// Probability that a row follows the table's majority direction.
    pub majority_follow: f64,
    /// Relative half-width of the uniform multiplicative value noise.
    pub value_noise: f64,
    /// Probability of one planted spike per row.
    pub spike_rate: f64,
    /// Paraphrase noise level in `[0, 1]`; 0 reproduces descriptions exactly.
    pub text_noise: f64,
    pub verbalized: usize,
    pub distractors: usize,
    pub importance: ImportanceWeights,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            tables: 300,
            min_items: 3,
            max_items: 4,
            min_years: 5,
            max_years: 8,
            majority_follow: 0.75,
            value_noise: 0.04,
            spike_rate: 0.3,
            text_noise: 0.2,
            verbalized: 3,
            distractors: 3,
            importance: ImportanceWeights::default(),
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(format!("synth: {msg}")));
        let max_items = FIRST_WORDS.len() * SECOND_WORDS.len();
        if self.tables == 0 {
            return bad("tables must be positive");
        }
        if self.min_items < 1 || self.min_items > self.max_items || self.max_items > max_items {
            return bad(&format!("item range must satisfy 1 <= min <= max <= {max_items}"));
        }
        if self.min_years < 4 || self.min_years > self.max_years || self.max_years > 40 {
            return bad("year range must satisfy 4 <= min <= max <= 40");
        }
        for (name, p) in [
            ("majority_follow", self.majority_follow),
            ("spike_rate", self.spike_rate),
            ("text_noise", self.text_noise),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(&format!("{name} must lie in [0, 1]"));
            }
        }
        if !(0.0..1.0).contains(&self.value_noise) {
            return bad("value_noise must lie in [0, 1)");
        }
        Ok(())
    }
}

/// One generated table with its report text and the planted importance of
/// every extracted insight.
#[derive(Debug, Clone)]
pub struct SynthTable {
    pub table: Table,
    pub text: String,
    pub importance: BTreeMap<String, f64>,
    /// Insight ids verbalized in `text`, most important first.
    pub verbalized: Vec<String>,
}

fn item_name(i: usize) -> String {
    format!("{} {}", FIRST_WORDS[i / SECOND_WORDS.len()], SECOND_WORDS[i % SECOND_WORDS.len()])
}

fn popularity_table(rng: &mut ChaCha8Rng) -> BTreeMap<String, f64> {
    let first: Vec<f64> = FIRST_WORDS.iter().map(|_| rng.random()).collect();
    let second: Vec<f64> = SECOND_WORDS.iter().map(|_| rng.random()).collect();
    (0..FIRST_WORDS.len() * SECOND_WORDS.len())
        .map(|i| (item_name(i), (first[i / SECOND_WORDS.len()] + second[i % SECOND_WORDS.len()]) / 2.0))
        .collect()
}

fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

fn generate_table(id: &str, config: &SynthConfig, rng: &mut ChaCha8Rng) -> Result<(Table, f64)> {
    let n_items = rng.random_range(config.min_items..=config.max_items);
    let n_years = rng.random_range(config.min_years..=config.max_years);
    let report_year: i64 = rng.random_range(2012..=2020);
    let first_year = report_year - n_years as i64 + 1;
    let mut items: Vec<usize> = (0..FIRST_WORDS.len() * SECOND_WORDS.len()).collect();
    items.shuffle(rng);
    items.truncate(n_items);
    items.sort_unstable();
    let majority: f64 = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let mut cells = Vec::with_capacity(n_items * n_years);
    for &item in &items {
        let direction = if rng.random_bool(config.majority_follow) { majority } else { -majority };
        let base = (rng.random_range(50f64.ln()..5000f64.ln())).exp();
        let growth: f64 = rng.random_range(0.04..0.15);
        let spike = rng.random_bool(config.spike_rate).then(|| {
            let at = rng.random_range(0..n_years);
            let size = rng.random_range(0.3..0.6) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            (at, size)
        });
        for t in 0..n_years {
            let mut v = base * (1.0 + direction * growth).powi(t as i32);
            v *= 1.0 + rng.random_range(-config.value_noise..=config.value_noise);
            if let Some((at, size)) = spike {
                if at == t {
                    v *= 1.0 + size;
                }
            }
            cells.push(Cell::new([item_name(item), (first_year + t as i64).to_string()], round1(v)));
        }
    }
    let mut meta = BTreeMap::new();
    meta.insert(MEASURE_KEY.to_string(), MEASURES.choose(rng).expect("measures").to_string());
    meta.insert(REPORT_YEAR_KEY.to_string(), report_year.to_string());
    let table = Table::new(id, vec!["Item".into(), "Year".into()], cells, meta)?;
    Ok((table, majority))
}

/// Planted importance of each insight of one table.
pub fn planted_importance<R: Rng>(
    insights: &[Insight],
    majority: f64,
    popularity: &BTreeMap<String, f64>,
    weights: &ImportanceWeights,
    rng: &mut R,
) -> BTreeMap<String, f64> {
    insights
        .iter()
        .map(|ins| {
            let row = ins.subspace.fixed_dim_index() == 0;
            let pop = if row {
                popularity.get(ins.subspace.fixed_dim_value()).copied().unwrap_or(0.0)
            } else {
                0.0
            };
            let kind = match ins.itype {
                InsightType::ShapeIncreasing | InsightType::ShapeDecreasing => {
                    let up = ins.itype == InsightType::ShapeIncreasing;
                    let contrary = (up && majority < 0.0) || (!up && majority > 0.0);
                    weights.shape + if contrary { weights.contrary } else { 0.0 }
                }
                InsightType::PointOutstanding if row => weights.row_point,
                InsightType::PointOutstanding => weights.column_point,
            };
            let noise = if weights.noise > 0.0 {
                rng.random_range(-weights.noise..=weights.noise)
            } else {
                0.0
            };
            let score = weights.popularity * pop + kind + weights.significance * ins.significance + noise;
            (ins.id.clone(), score)
        })
        .collect()
}

/// Renders one verbalized sentence; noise level 0 returns the description.
pub fn paraphrase<R: Rng>(insight: &Insight, noise: f64, rng: &mut R) -> String {
    let mut s = insight.description.trim_end_matches('.').to_string();
    let mut keyword = true;
    if noise > 0.0 && rng.random_bool(noise) {
        let swaps: &[(&str, &[&str])] = &[
            ("increasing", &["rising", "growing"]),
            ("decreasing", &["falling", "declining"]),
            ("outstanding", &["remarkable", "notable"]),
        ];
        for (from, to) in swaps {
            if s.contains(from) {
                s = s.replacen(from, to.choose(rng).expect("synonyms"), 1);
                keyword = false;
            }
        }
    }
    if noise > 0.0 && rng.random_bool(noise) {
        let filler = FILLERS.choose(rng).expect("fillers");
        let mut chars = s.chars();
        let first = chars.next().map(|c| c.to_lowercase().collect::<String>()).unwrap_or_default();
        s = format!("{filler}{first}{}", chars.as_str());
    }
    if !keyword || (noise > 0.0 && rng.random_bool(noise)) {
        let last = insight.subspace.values().last().copied().unwrap_or(0.0);
        s = format!("{s}, reaching {last:.1} million");
    }
    s.push('.');
    s
}

fn distractor<R: Rng>(rng: &mut R) -> String {
    let template = DISTRACTORS.choose(rng).expect("distractors");
    template
        .replace("{x}", &format!("{:.2}", rng.random_range(0.1..50.0)))
        .replace("{n}", &rng.random_range(2..900).to_string())
}

/// Generates the full corpus in memory.
pub fn synthesize(config: &SynthConfig) -> Result<Vec<SynthTable>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let popularity = popularity_table(&mut rng);
    let extract = ExtractConfig::default();
    let width = config.tables.to_string().len().max(4);
    let mut out = Vec::with_capacity(config.tables);
    for t in 0..config.tables {
        let id = format!("t{t:0width$}");
        let (table, majority) = generate_table(&id, config, &mut rng)?;
        let insights = extract_all(&table, &extract);
        let importance = planted_importance(&insights, majority, &popularity, &config.importance, &mut rng);
        let mut order: Vec<&Insight> = insights.iter().collect();
        order.sort_by(|a, b| importance[&b.id].total_cmp(&importance[&a.id]).then_with(|| a.id.cmp(&b.id)));
        order.truncate(config.verbalized);
        let mut sentences: Vec<String> = order
            .iter()
            .map(|ins| paraphrase(ins, config.text_noise, &mut rng))
            .collect();
        sentences.extend((0..config.distractors).map(|_| distractor(&mut rng)));
        sentences.shuffle(&mut rng);
        out.push(SynthTable {
            text: sentences.join(" "),
            verbalized: order.iter().map(|i| i.id.clone()).collect(),
            importance,
            table,
        });
    }
    Ok(out)
}

/// Writes `tables/` and `texts/` under `dir`.
pub fn write_dataset(dir: &Path, corpus: &[SynthTable]) -> Result<DatasetDir> {
    let dataset = DatasetDir::new(dir);
    for sub in [dataset.tables_dir(), dataset.texts_dir()] {
        std::fs::create_dir_all(&sub).map_err(|e| Error::io(&sub, e))?;
    }
    for item in corpus {
        let id = item.table.id();
        save_table(&item.table, dataset.table_path(id))?;
        let text_path = dataset.text_path(id);
        let doc = document_json(id, item.table.meta(), &item.text);
        std::fs::write(&text_path, doc).map_err(|e| Error::io(&text_path, e))?;
    }
    Ok(dataset)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig {
            tables: 5,
            ..Default::default()
        }
    }

    #[test]
    fn seeded_output_repeats() {
        let a = synthesize(&small()).unwrap();
        let b = synthesize(&small()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.table, y.table);
            assert_eq!(x.text, y.text);
        }
    }

    #[test]
    fn item_names_have_two_tokens() {
        for i in 0..FIRST_WORDS.len() * SECOND_WORDS.len() {
            assert_eq!(item_name(i).split(' ').count(), 2);
        }
    }

    #[test]
    fn zero_noise_keeps_descriptions() {
        let corpus = synthesize(&SynthConfig {
            text_noise: 0.0,
            ..small()
        })
        .unwrap();
        for t in &corpus {
            let insights = extract_all(&t.table, &ExtractConfig::default());
            for id in &t.verbalized {
                let ins = insights.iter().find(|i| &i.id == id).unwrap();
                assert!(t.text.contains(&ins.description));
            }
        }
    }

    #[test]
    fn invalid_config_is_rejected() {
        assert!(SynthConfig { tables: 0, ..small() }.validate().is_err());
        assert!(SynthConfig {
            text_noise: 1.5,
            ..small()
        }
        .validate()
        .is_err());
        assert!(SynthConfig {
            min_years: 3,
            ..small()
        }
        .validate()
        .is_err());
    }
}
