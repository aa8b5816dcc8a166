#![allow(dead_code)]

pub mod grad;
pub mod metrics;

use std::collections::BTreeMap;

use insight_core::extract::{extract_all, ExtractConfig, Insight};
use insight_core::table::{Cell, Table};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Brand-by-year car sales.
pub const CAR_SALES: [(&str, [f64; 3]); 3] = [("A", [13.0, 14.0, 20.0]), ("B", [51.0, 49.0, 60.0]), ("C", [13.0, 20.0, 23.0])];

pub fn car_sales() -> Table {
    let mut cells = Vec::new();
    for (brand, values) in CAR_SALES {
        for (i, v) in values.iter().enumerate() {
            cells.push(Cell::new([brand.to_string(), (2015 + i).to_string()], *v));
        }
    }
    let meta = BTreeMap::from([("measure".to_string(), "Sales".to_string())]);
    Table::new("car", vec!["Brand".into(), "Year".into()], cells, meta).unwrap()
}

/// Item-by-year table with the given rows.
pub fn grid(id: &str, rows: &[(&str, Vec<f64>)], first_year: i64) -> Table {
    let mut cells = Vec::new();
    for (item, values) in rows {
        for (i, v) in values.iter().enumerate() {
            cells.push(Cell::new([item.to_string(), (first_year + i as i64).to_string()], *v));
        }
    }
    let meta = BTreeMap::from([
        ("measure".to_string(), "Revenue".to_string()),
        ("report_year".to_string(), (first_year + rows[0].1.len() as i64 - 1).to_string()),
    ]);
    Table::new(id, vec!["Item".into(), "Year".into()], cells, meta).unwrap()
}

/// A random item-by-year table with at least one insight.
pub fn random_table(id: &str, rng: &mut ChaCha8Rng, items: usize, years: usize) -> Table {
    let names = ["net income", "operating cost", "total revenue", "gross margin", "retail sales", "online sales"];
    let rows: Vec<(&str, Vec<f64>)> = names[..items]
        .iter()
        .map(|n| (*n, (0..years).map(|_| (rng.random_range(10.0..100.0f64) * 10.0).round() / 10.0).collect()))
        .collect();
    grid(id, &rows, 2013)
}

pub fn random_insights(seed: u64, items: usize, years: usize) -> Vec<Insight> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    extract_all(&random_table("r", &mut rng, items, years), &ExtractConfig::default())
}

pub fn tokens(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_string).collect()
}
