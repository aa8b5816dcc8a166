mod common;

use std::collections::BTreeMap;

use insight_core::extract::{extract_all, ExtractConfig};
use insight_core::table::{enumerate_subspaces, load_document, load_table, save_table, split_sentences, Cell, Table, TableError};
use insight_core::text::{label_insights, preprocess, TextConfig, TokenizedSentence};

fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn car_sales_file_loads() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("car.json");
    save_table(&common::car_sales(), &path).unwrap();
    let table = load_table(&path).unwrap();
    assert_eq!(table.cells().len(), 9);
    assert_eq!(table.dim_count(), 2);
    let a2015 = table.cells().iter().find(|c| c.dims == ["A", "2015"]).unwrap();
    assert_eq!(a2015.value, 13.0);
    assert_eq!(table, common::car_sales());
}

#[test]
fn malformed_tables_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write(&dir, "e.json", r#"{"id": "e", "dim_names": ["Brand", "Year"], "cells": [], "meta": {}}"#);
    let err = load_table(&empty).unwrap_err();
    assert_eq!(err.to_string(), "table has no cells");

    let dup = write(
        &dir,
        "d.json",
        r#"{"id": "d", "dim_names": ["Brand", "Year"], "cells": [
            {"dims": ["A", "2015"], "value": 13},
            {"dims": ["A", "2015"], "value": 14}
        ], "meta": {}}"#,
    );
    assert!(matches!(load_table(&dup), Err(TableError::DuplicateCell { index: 1, .. })));

    let broken = write(&dir, "b.json", "{\n  \"id\": \"b\",\n  \"dim_names\": [\"Brand\"\n}");
    let msg = load_table(&broken).unwrap_err().to_string();
    assert!(msg.contains("line 4"), "{msg}");

    let nan = Table::new("n", vec!["Brand".into()], vec![Cell::new(["A"], f64::NAN)], BTreeMap::new());
    assert!(matches!(nan, Err(TableError::NonFinite { index: 0, .. })));
}

#[test]
fn car_sales_subspaces() {
    let table = common::car_sales();
    let subspaces = enumerate_subspaces(&table, 3);
    assert_eq!(subspaces.len(), 6);
    let rows = subspaces.iter().filter(|s| s.fixed_dim_index() == 0).count();
    assert_eq!(rows, 3);
    let a = subspaces.iter().find(|s| s.fixed_dim_index() == 0 && s.fixed_dim_value() == "A").unwrap();
    assert_eq!(a.values(), vec![13.0, 14.0, 20.0]);
    assert!(enumerate_subspaces(&table, 4).is_empty());
}

#[test]
fn extraction_is_deterministic_and_single_cells_yield_nothing() {
    let config = ExtractConfig::default();
    assert_eq!(extract_all(&common::car_sales(), &config), extract_all(&common::car_sales(), &config));
    let single = Table::new("s", vec!["Brand".into(), "Year".into()], vec![Cell::new(["A", "2015"], 1.0)], BTreeMap::new()).unwrap();
    assert!(extract_all(&single, &config).is_empty());
}

#[test]
fn sentences_split_on_boundaries_but_not_decimals() {
    assert_eq!(split_sentences("Revenue grew. Costs fell."), vec!["Revenue grew.", "Costs fell."]);
    assert_eq!(split_sentences("Margin was 3.5 percent! Why? Fine"), vec!["Margin was 3.5 percent!", "Why?", "Fine"]);
}

#[test]
fn documents_need_a_table_id() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write(&dir, "ok.json", r#"{"table_id": "t", "meta": {"report_year": 2017}, "text": "One. Two."}"#);
    let doc = load_document(&ok).unwrap();
    assert_eq!(doc.sentences.len(), 2);
    assert_eq!(doc.report_year(), Some(2017));
    let missing = write(&dir, "missing.json", r#"{"meta": {}, "text": "One."}"#);
    assert!(matches!(load_document(&missing), Err(TableError::MissingTableId)));
}

fn doc(text: &str) -> insight_core::table::DocumentText {
    insight_core::table::DocumentText {
        table_id: "t".into(),
        sentences: split_sentences(text),
        meta: BTreeMap::from([("report_year".to_string(), "2017".to_string())]),
    }
}

#[test]
fn preprocess_applies_the_text_rules() {
    let config = TextConfig::default();
    let kept = preprocess(&doc("Revenue was 71.7 million for the year ended 2017."), &[], &config);
    assert_eq!(kept.len(), 1);
    let tokens = &kept[0].tokens;
    assert!(tokens.contains(&"71.7".to_string()), "{tokens:?}");
    assert!(tokens.windows(2).any(|w| w == ["this", "year"]), "{tokens:?}");
    assert!(!tokens.contains(&"2017".to_string()));
    assert!(kept[0].has_number);

    // Nine tokens, under 50 characters.
    let short = "Sales rose by 4 percent in the north region.";
    assert_eq!(short.len(), 44);
    assert!(preprocess(&doc(short), &[], &config).is_empty());
    let no_numbers = "The company continued to focus on its customers and on its long term plans.";
    assert!(preprocess(&doc(no_numbers), &[], &config).is_empty());
    let with_header = preprocess(&doc(no_numbers), &["customers".to_string()], &config);
    assert_eq!(with_header.len(), 1);
}

fn sentence(position: usize, text: &str) -> TokenizedSentence {
    let tokens: Vec<String> = text.split_whitespace().map(String::from).collect();
    TokenizedSentence { position, raw: text.into(), tokens, has_number: false }
}

#[test]
fn labels_follow_a_brute_force_argsort() {
    let insights = extract_all(&common::car_sales(), &ExtractConfig::default());
    let config = TextConfig::default();
    let sentences = [
        sentence(0, "sales of a is increasing year over year"),
        sentence(1, "sales of c grew in 2017"),
    ];
    let labeled = label_insights(&insights, &sentences, &config).unwrap();
    let headers: Vec<Vec<String>> = insights.iter().map(|i| i.header_tokens()).collect();
    let mut brute: Vec<(f64, &str)> = insights
        .iter()
        .map(|i| {
            let best = sentences
                .iter()
                .map(|s| insight_core::text::sim_combined(&i.description_tokens(), &i.header_tokens(), &s.tokens, &headers, (0.5, 0.5)).unwrap())
                .fold(0.0, f64::max);
            (best, i.id.as_str())
        })
        .collect();
    brute.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(b.1)));
    for l in &labeled {
        let pos = brute.iter().position(|(_, id)| *id == l.insight.id).unwrap();
        assert_eq!(l.gold_rank, pos + 1);
        assert_eq!(l.gold_score, brute[pos].0);
    }
    let top = labeled.iter().find(|l| l.gold_rank == 1).unwrap();
    assert_eq!(top.insight.description, "Sales of A is increasing year over year.");
    assert_eq!(top.best_sentence_index, Some(0));

    let none = label_insights(&insights, &[], &config).unwrap();
    assert!(none.iter().all(|l| l.gold_score == 0.0 && l.best_sentence_index.is_none()));
    let mut ids: Vec<&str> = insights.iter().map(|i| i.id.as_str()).collect();
    ids.sort();
    for l in &none {
        assert_eq!(ids[l.gold_rank - 1], l.insight.id);
    }
}

#[test]
fn a_sentence_equal_to_the_description_scores_one() {
    let insights: Vec<_> = extract_all(&common::car_sales(), &ExtractConfig::default()).into_iter().take(1).collect();
    let s = TokenizedSentence {
        position: 0,
        raw: insights[0].description.clone(),
        tokens: insights[0].description_tokens(),
        has_number: false,
    };
    let labeled = label_insights(&insights, &[s], &TextConfig::default()).unwrap();
    assert_eq!(labeled[0].gold_score, 1.0);
    assert_eq!(labeled[0].gold_rank, 1);
}
