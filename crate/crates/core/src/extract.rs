//! Candidate insight extraction: point (outstanding value) and shape (trend)
//! insights over table subspaces, with p-value based significance and
//! template descriptions.

use serde::{Deserialize, Serialize};

use crate::stats::{mean_and_sample_std, normal_cdf, normal_sf, student_t_two_sided};
use crate::table::{enumerate_subspaces, Cell, Subspace, Table};
use crate::text::tokenize_normalized;

/// Smallest p-value admitted by the trend test.
pub const MIN_P_VALUE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum InsightType {
    PointOutstanding,
    ShapeIncreasing,
    ShapeDecreasing,
}

impl InsightType {
    pub const ALL: [InsightType; 3] = [
        InsightType::PointOutstanding,
        InsightType::ShapeIncreasing,
        InsightType::ShapeDecreasing,
    ];

    /// Vocabulary token standing for the type.
    pub fn token(self) -> &'static str {
        match self {
            InsightType::PointOutstanding => "<point_outstanding>",
            InsightType::ShapeIncreasing => "<shape_increasing>",
            InsightType::ShapeDecreasing => "<shape_decreasing>",
        }
    }

    pub fn is_shape(self) -> bool {
        !matches!(self, InsightType::PointOutstanding)
    }
}

/// Which series a point insight is scored on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointSeries {
    /// Raw cell values.
    Raw,
    /// Period-over-period change ratios on time axes, raw values elsewhere.
    ChangeRatio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractConfig {
    pub min_len: usize,
    pub threshold: f64,
    pub point_series: PointSeries,
    /// Only extract trends over integer (time) axes.
    pub shape_requires_temporal: bool,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            min_len: 3,
            threshold: 0.5,
            point_series: PointSeries::ChangeRatio,
            shape_requires_temporal: true,
        }
    }
}

/// The statistical part of an insight before it is named and described.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Finding {
    pub itype: InsightType,
    pub significance: f64,
    pub point_index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Insight {
    pub id: String,
    pub table_id: String,
    pub subspace: Subspace,
    pub itype: InsightType,
    pub significance: f64,
    pub description: String,
    pub point_index: Option<usize>,
    pub report_year: Option<i64>,
}

impl Insight {
    /// Header text of the shared dimension(s), e.g. the row label.
    pub fn header_text(&self) -> String {
        self.subspace
            .fixed()
            .iter()
            .map(|(_, v)| v.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Tokens of the shared-dimension header, normalized against the report year.
    pub fn header_tokens(&self) -> Vec<String> {
        tokenize_normalized(&self.header_text(), self.report_year)
    }

    /// Tokens of the headers of every subspace cell, cell by cell: the fixed
    /// labels and the varying label of each cell.
    pub fn semantic_tokens(&self) -> Vec<String> {
        let mut text = String::new();
        for label in self.subspace.labels() {
            text.push(' ');
            text.push_str(&self.header_text());
            text.push(' ');
            text.push_str(label);
        }
        tokenize_normalized(&text, self.report_year)
    }

    pub fn description_tokens(&self) -> Vec<String> {
        tokenize_normalized(&self.description, self.report_year)
    }

    /// Index of this insight's subspace for grouping: (table, fixed labels, varying dim).
    pub fn subspace_key(&self) -> (String, Vec<(usize, String)>, usize) {
        (
            self.table_id.clone(),
            self.subspace.fixed().to_vec(),
            self.subspace.varying_dim_index(),
        )
    }

    pub fn to_record(&self) -> InsightRecord {
        let fixed = self.subspace.fixed();
        InsightRecord {
            id: self.id.clone(),
            table_id: self.table_id.clone(),
            subspace: SubspaceRecord {
                fixed_dim: fixed[0].0,
                fixed_value: fixed[0].1.clone(),
                varying_dim: self.subspace.varying_dim_index(),
                labels: self.subspace.labels().into_iter().map(String::from).collect(),
                values: self.subspace.values(),
                extra_fixed: fixed[1..].to_vec(),
            },
            itype: self.itype,
            significance: self.significance,
            description: self.description.clone(),
            point_index: self.point_index,
            report_year: self.report_year,
        }
    }

    pub fn from_record(rec: InsightRecord) -> Result<Insight, String> {
        let s = &rec.subspace;
        if s.labels.len() != s.values.len() || s.labels.is_empty() {
            return Err("subspace labels and values must be non-empty and aligned".into());
        }
        let mut fixed = vec![(s.fixed_dim, s.fixed_value.clone())];
        fixed.extend(s.extra_fixed.iter().cloned());
        fixed.sort_by_key(|(i, _)| *i);
        let d = fixed.iter().map(|(i, _)| *i).chain([s.varying_dim]).max().unwrap_or(0) + 1;
        let cells = s
            .labels
            .iter()
            .zip(&s.values)
            .map(|(label, &value)| {
                let mut dims = vec![String::new(); d];
                for (i, v) in &fixed {
                    dims[*i] = v.clone();
                }
                dims[s.varying_dim] = label.clone();
                Cell { dims, value }
            })
            .collect();
        let subspace = Subspace::new(cells, fixed, s.varying_dim).ok_or("inconsistent subspace record")?;
        if !(0.0..=1.0).contains(&rec.significance) {
            return Err(format!("significance {} outside [0, 1]", rec.significance));
        }
        if rec.description.trim().is_empty() {
            return Err("empty description".into());
        }
        match (rec.itype, rec.point_index) {
            (InsightType::PointOutstanding, Some(i)) if i < subspace.len() => {}
            (InsightType::PointOutstanding, _) => return Err("point insight needs a valid point_index".into()),
            (_, Some(_)) => return Err("shape insight must not carry point_index".into()),
            (_, None) => {}
        }
        Ok(Insight {
            id: rec.id,
            table_id: rec.table_id,
            subspace,
            itype: rec.itype,
            significance: rec.significance,
            description: rec.description,
            point_index: rec.point_index,
            report_year: rec.report_year,
        })
    }
}

/// Line-delimited serialized insight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InsightRecord {
    pub id: String,
    pub table_id: String,
    pub subspace: SubspaceRecord,
    #[serde(rename = "type")]
    pub itype: InsightType,
    pub significance: f64,
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report_year: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceRecord {
    pub fixed_dim: usize,
    pub fixed_value: String,
    pub varying_dim: usize,
    pub labels: Vec<String>,
    pub values: Vec<f64>,
    /// Further fixed dimensions of tables with more than two dimensions.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extra_fixed: Vec<(usize, String)>,
}

/// Scores the most extreme value of `series` against a normal distribution
/// fitted to the remaining values.
///
/// Returns the candidate position and its significance `1 - p`, where `p`
/// is the tail probability on the candidate's side of the fitted mean.
/// Returns `None` for fewer than three values, or when the other values are
/// all equal to the candidate.
pub fn point_significance(series: &[f64]) -> Option<(usize, f64)> {
    if series.len() < 3 {
        return None;
    }
    let candidate = series
        .iter()
        .enumerate()
        .fold(0, |best, (i, v)| if v.abs() > series[best].abs() { i } else { best });
    let value = series[candidate];
    let rest: Vec<f64> = series
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != candidate)
        .map(|(_, v)| *v)
        .collect();
    let (mean, std) = mean_and_sample_std(&rest);
    if std == 0.0 || !std.is_finite() {
        return (value != rest[0]).then_some((candidate, 1.0));
    }
    let z = (value - mean) / std;
    let p = if value >= mean { normal_sf(z) } else { normal_cdf(z) };
    Some((candidate, (1.0 - p).clamp(0.0, 1.0)))
}

/// Result of the least-squares trend test over positions `0..n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrendFit {
    pub slope: f64,
    pub t_statistic: f64,
    pub p_value: f64,
    pub significance: f64,
}

/// Fits `y = a t + b` and tests `a != 0` with a two-sided t-test on n - 2
/// degrees of freedom. `p` is clamped to `[MIN_P_VALUE, 1]`.
///
/// Sums run over mirrored position pairs so that reversing the series
/// negates the slope and leaves the p-value bit-identical.
pub fn trend_fit(values: &[f64]) -> Option<TrendFit> {
    let n = values.len();
    if n < 3 {
        return None;
    }
    let centre = (n as f64 - 1.0) / 2.0;
    let half = n / 2;
    let mut sum = 0.0;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for i in 0..half {
        let (lo, hi) = (values[i], values[n - 1 - i]);
        let t = i as f64 - centre;
        sum += lo + hi;
        sxy += t * (lo - hi);
        sxx += 2.0 * t * t;
    }
    if n % 2 == 1 {
        sum += values[half];
    }
    let mean = sum / n as f64;
    let slope = sxy / sxx;
    let residual = |i: usize| values[i] - mean - slope * (i as f64 - centre);
    let mut sse = 0.0;
    for i in 0..half {
        let (a, b) = (residual(i), residual(n - 1 - i));
        sse += a * a + b * b;
    }
    if n % 2 == 1 {
        let r = residual(half);
        sse += r * r;
    }
    let df = (n - 2) as f64;
    let se = (sse / df / sxx).sqrt();
    let t_statistic = if slope == 0.0 {
        0.0
    } else if se == 0.0 {
        f64::INFINITY.copysign(slope)
    } else {
        slope / se
    };
    let p_value = student_t_two_sided(t_statistic, df).clamp(MIN_P_VALUE, 1.0);
    Some(TrendFit {
        slope,
        t_statistic,
        p_value,
        significance: 1.0 - p_value,
    })
}

/// The series a point insight is scored on, as (cell index, value) pairs.
///
/// In change-ratio mode on a time axis, each entry is
/// `(v[t] - v[t-1]) / |v[t-1]|`; a zero previous value drops the entry.
pub fn point_series(subspace: &Subspace, mode: PointSeries) -> Vec<(usize, f64)> {
    let values = subspace.values();
    match mode {
        PointSeries::ChangeRatio if subspace.is_temporal() => values
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[0] != 0.0)
            .map(|(i, w)| (i + 1, (w[1] - w[0]) / w[0].abs()))
            .collect(),
        _ => values.into_iter().enumerate().collect(),
    }
}

pub fn extract_point_insight(subspace: &Subspace, config: &ExtractConfig) -> Option<Finding> {
    let series = point_series(subspace, config.point_series);
    let values: Vec<f64> = series.iter().map(|(_, v)| *v).collect();
    let (pos, significance) = point_significance(&values)?;
    (significance >= config.threshold).then_some(Finding {
        itype: InsightType::PointOutstanding,
        significance,
        point_index: Some(series[pos].0),
    })
}

pub fn extract_shape_insight(subspace: &Subspace, config: &ExtractConfig) -> Option<Finding> {
    let fit = trend_fit(&subspace.values())?;
    if fit.slope == 0.0 || fit.significance < config.threshold {
        return None;
    }
    let itype = if fit.slope > 0.0 {
        InsightType::ShapeIncreasing
    } else {
        InsightType::ShapeDecreasing
    };
    Some(Finding {
        itype,
        significance: fit.significance,
        point_index: None,
    })
}

/// Fills the description template; the measure falls back to "Value".
pub fn render_description(
    subspace: &Subspace,
    itype: InsightType,
    point_index: Option<usize>,
    measure: Option<&str>,
) -> String {
    let measure = measure.unwrap_or("Value");
    let fixed = subspace.fixed_label();
    match itype {
        InsightType::ShapeIncreasing => format!("{measure} of {fixed} is increasing year over year."),
        InsightType::ShapeDecreasing => format!("{measure} of {fixed} is decreasing year over year."),
        InsightType::PointOutstanding => {
            let label = point_index
                .and_then(|i| subspace.labels().get(i).map(|s| s.to_string()))
                .unwrap_or_default();
            format!("{measure} of {fixed} in {label} is outstanding.")
        }
    }
}

/// Runs both extractors over every subspace of `table`, shape first.
/// Ids are `<table id>#<running index>`.
pub fn extract_all(table: &Table, config: &ExtractConfig) -> Vec<Insight> {
    let mut out = Vec::new();
    for subspace in enumerate_subspaces(table, config.min_len.max(3)) {
        let shape = if config.shape_requires_temporal && !subspace.is_temporal() {
            None
        } else {
            extract_shape_insight(&subspace, config)
        };
        let point = extract_point_insight(&subspace, config);
        for finding in shape.into_iter().chain(point) {
            let description = render_description(&subspace, finding.itype, finding.point_index, table.measure());
            out.push(Insight {
                id: format!("{}#{}", table.id(), out.len()),
                table_id: table.id().to_string(),
                subspace: subspace.clone(),
                itype: finding.itype,
                significance: finding.significance,
                description,
                point_index: finding.point_index,
                report_year: table.report_year(),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::Table;
    use std::collections::BTreeMap;

    fn series(values: &[f64]) -> Subspace {
        let cells = values
            .iter()
            .enumerate()
            .map(|(i, v)| Cell::new(["A".to_string(), (2010 + i).to_string()], *v))
            .collect();
        Subspace::new(cells, vec![(0, "A".into())], 1).unwrap()
    }

    #[test]
    fn point_degenerate_variance() {
        assert_eq!(point_significance(&[5.0, 5.0, 5.0, 5.0]), None);
        assert_eq!(point_significance(&[1.0, 1.0, 1.0, 100.0]), Some((3, 1.0)));
        assert_eq!(point_significance(&[1.0, 2.0]), None);
    }

    #[test]
    fn shape_flat_and_exact() {
        let cfg = ExtractConfig::default();
        assert!(extract_shape_insight(&series(&[7.0, 7.0, 7.0]), &cfg).is_none());
        let f = extract_shape_insight(&series(&[1.0, 2.0, 3.0]), &cfg).unwrap();
        assert_eq!(f.itype, InsightType::ShapeIncreasing);
        assert!((f.significance - 1.0).abs() < 1e-9);
        let f = extract_shape_insight(&series(&[3.0, 2.0, 1.0]), &cfg).unwrap();
        assert_eq!(f.itype, InsightType::ShapeDecreasing);
    }

    #[test]
    fn change_ratio_series_drops_zero_base() {
        let s = series(&[0.0, 2.0, 3.0, 6.0]);
        assert_eq!(point_series(&s, PointSeries::ChangeRatio), vec![(2, 0.5), (3, 1.0)]);
        assert_eq!(point_series(&s, PointSeries::Raw).len(), 4);
    }

    #[test]
    fn descriptions() {
        let s = series(&[13.0, 14.0, 20.0]);
        assert_eq!(
            render_description(&s, InsightType::ShapeIncreasing, None, Some("Sales")),
            "Sales of A is increasing year over year."
        );
        assert_eq!(
            render_description(&s, InsightType::ShapeIncreasing, None, None),
            "Value of A is increasing year over year."
        );
        let cells = ["2015", "2016", "2017"]
            .iter()
            .zip([51.0, 49.0, 60.0])
            .map(|(y, v)| Cell::new(["B", y], v))
            .collect();
        let b = Subspace::new(cells, vec![(0, "B".into())], 1).unwrap();
        assert_eq!(
            render_description(&b, InsightType::PointOutstanding, Some(2), Some("Sales")),
            "Sales of B in 2017 is outstanding."
        );
    }

    #[test]
    fn single_cell_table_has_no_insights() {
        let t = Table::new(
            "one",
            vec!["Brand".into(), "Year".into()],
            vec![Cell::new(["A", "2015"], 1.0)],
            BTreeMap::new(),
        )
        .unwrap();
        assert!(extract_all(&t, &ExtractConfig::default()).is_empty());
    }

    #[test]
    fn record_round_trip() {
        let s = series(&[1.0, 5.0, 2.0, 9.0]);
        let insight = Insight {
            id: "t#0".into(),
            table_id: "t".into(),
            subspace: s,
            itype: InsightType::PointOutstanding,
            significance: 0.9,
            description: "Value of A in 2013 is outstanding.".into(),
            point_index: Some(3),
            report_year: Some(2013),
        };
        let back = Insight::from_record(insight.to_record()).unwrap();
        assert_eq!(back, insight);
        let mut bad = insight.to_record();
        bad.point_index = None;
        assert!(Insight::from_record(bad).is_err());
    }
}
