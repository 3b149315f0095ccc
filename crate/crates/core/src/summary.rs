//! Per-column descriptive statistics of a flow table.

use serde::{Deserialize, Serialize};

use crate::flow::{FlowRecord, FlowTable};
use crate::prelude::*;

/// Marker used for an absent categorical value.
pub const ABSENT: &str = "∅";

/// Number of entries kept in each categorical frequency list.
pub const TOP_K: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub median: f64,
    pub q3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalStats {
    pub distinct: usize,
    /// Most frequent values, by count descending then value ascending.
    pub top: Vec<(String, u64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryStats {
    pub row_count: usize,
    /// `(column, stats)`; stats are `None` for an empty table.
    pub numeric: Vec<(&'static str, Option<NumericStats>)>,
    pub categorical: Vec<(&'static str, CategoricalStats)>,
}

impl SummaryStats {
    pub fn numeric(&self, column: &str) -> Option<&NumericStats> {
        self.numeric
            .iter()
            .find(|(c, _)| *c == column)
            .and_then(|(_, s)| s.as_ref())
    }

    pub fn categorical(&self, column: &str) -> Option<&CategoricalStats> {
        self.categorical.iter().find(|(c, _)| *c == column).map(|(_, s)| s)
    }
}

/// Linear-interpolation quantile of `values` (which get reordered).
///
/// Order statistics come from `select_nth_unstable`.
pub fn quantile(values: &mut [f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let pos = q * (values.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = libm::ceil(pos) as usize;
    let (_, &mut lo_v, upper) = values.select_nth_unstable_by(lo, f64::total_cmp);
    if hi == lo {
        return Some(lo_v);
    }
    // hi == lo + 1 is the minimum of the upper partition.
    let hi_v = upper.iter().copied().fold(f64::INFINITY, f64::min);
    Some(lo_v + (hi_v - lo_v) * (pos - lo as f64))
}

/// Numeric statistics. Values are sorted first, so the result does not
/// depend on row order; mean and variance then follow Welford's recurrence.
pub fn numeric_stats(values: &[f64]) -> Option<NumericStats> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let (min, max) = (sorted[0], sorted[sorted.len() - 1]);
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (i, &v) in sorted.iter().enumerate() {
        let delta = v - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (v - mean);
    }
    let n = sorted.len() as f64;
    let median = quantile(&mut sorted, 0.5)?;
    let q3 = quantile(&mut sorted, 0.75)?;
    Some(NumericStats {
        min,
        max,
        // Welford can drift a few ulps outside [min, max] on constant input.
        mean: mean.clamp(min, max),
        std: libm::sqrt((m2 / n).max(0.0)),
        median,
        q3,
    })
}

fn categorical_stats<'a>(values: impl Iterator<Item = Option<&'a str>>) -> CategoricalStats {
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for v in values {
        *counts.entry(v.unwrap_or(ABSENT)).or_insert(0) += 1;
    }
    let distinct = counts.len();
    let mut top: Vec<(&str, u64)> = counts.into_iter().collect();
    top.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    top.truncate(TOP_K);
    CategoricalStats {
        distinct,
        top: top.into_iter().map(|(k, c)| (k.to_string(), c)).collect(),
    }
}

type NumericColumn = (&'static str, fn(&FlowRecord) -> f64);

const NUMERIC_COLUMNS: [NumericColumn; 4] = [
    ("Dur", |r| r.dur),
    ("TotPkts", |r| r.tot_pkts as f64),
    ("TotBytes", |r| r.tot_bytes as f64),
    ("SrcBytes", |r| r.src_bytes as f64),
];

/// Summarizes every numeric and categorical column of `table`.
pub fn summarize(table: &FlowTable) -> SummaryStats {
    let recs = &table.records;
    let numeric = NUMERIC_COLUMNS
        .iter()
        .map(|&(name, get)| {
            let values: Vec<f64> = recs.iter().map(get).collect();
            (name, numeric_stats(&values))
        })
        .collect();

    let tos = |v: Option<u8>| v.map(|t| t.to_string());
    let s_tos: Vec<Option<String>> = recs.iter().map(|r| tos(r.s_tos)).collect();
    let d_tos: Vec<Option<String>> = recs.iter().map(|r| tos(r.d_tos)).collect();

    let categorical = vec![
        ("Proto", categorical_stats(recs.iter().map(|r| Some(r.proto.as_str())))),
        (
            "SrcAddr",
            categorical_stats(recs.iter().map(|r| Some(r.src_addr.as_str()))),
        ),
        ("Sport", categorical_stats(recs.iter().map(|r| r.sport.as_deref()))),
        ("Dir", categorical_stats(recs.iter().map(|r| Some(r.dir.as_str())))),
        (
            "DstAddr",
            categorical_stats(recs.iter().map(|r| Some(r.dst_addr.as_str()))),
        ),
        ("Dport", categorical_stats(recs.iter().map(|r| r.dport.as_deref()))),
        ("State", categorical_stats(recs.iter().map(|r| r.state.as_deref()))),
        ("sTos", categorical_stats(s_tos.iter().map(|v| v.as_deref()))),
        ("dTos", categorical_stats(d_tos.iter().map(|v| v.as_deref()))),
        ("Label", categorical_stats(recs.iter().map(|r| Some(r.label.as_str())))),
    ];

    SummaryStats {
        row_count: recs.len(),
        numeric,
        categorical,
    }
}
