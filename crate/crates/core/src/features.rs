//! The 22 per-window, per-source features and dataset construction.
//!
//! Categorical columns (source port, destination address, destination port)
//! contribute a distinct count and a normalized entropy ("relative
//! uncertainty", RU). Numeric columns (duration, total bytes, source bytes)
//! contribute sum, mean, population std, max and median.

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, DatasetMeta, RowKey};
use crate::exec;
use crate::flow::{FlowRecord, FlowTable};
use crate::prelude::*;
use crate::window::{group_windows, WindowConfig, WindowGroup};

pub const FEATURE_COUNT: usize = 22;

pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "counts",
    "Sport_nunique",
    "DstAddr_nunique",
    "Dport_nunique",
    "Dur_sum",
    "Dur_mean",
    "Dur_std",
    "Dur_max",
    "Dur_median",
    "TotBytes_sum",
    "TotBytes_mean",
    "TotBytes_std",
    "TotBytes_max",
    "TotBytes_median",
    "SrcBytes_sum",
    "SrcBytes_mean",
    "SrcBytes_std",
    "SrcBytes_max",
    "SrcBytes_median",
    "Sport_RU",
    "DstAddr_RU",
    "Dport_RU",
];

pub fn feature_names() -> Vec<String> {
    FEATURE_NAMES.iter().map(|s| s.to_string()).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FeatureError {
    #[error("entropy of an empty category multiset is undefined")]
    EmptyCounts,
    #[error("category counts must be positive")]
    ZeroCount,
    #[error("flow table has no records")]
    EmptyTable,
    #[error(transparent)]
    Window(#[from] crate::window::WindowError),
}

/// Shannon entropy of the category distribution divided by `ln(m)`, where `m`
/// is the number of distinct categories. A single category gives 0.
pub fn normalized_entropy(counts: &[u64]) -> Result<f64, FeatureError> {
    if counts.is_empty() {
        return Err(FeatureError::EmptyCounts);
    }
    if counts.contains(&0) {
        return Err(FeatureError::ZeroCount);
    }
    if counts.len() == 1 {
        return Ok(0.0);
    }
    let total: u64 = counts.iter().sum();
    let total = total as f64;
    let h: f64 = counts
        .iter()
        .map(|&c| {
            let p = c as f64 / total;
            -p * libm::log(p)
        })
        .sum();
    Ok((h / libm::log(counts.len() as f64)).clamp(0.0, 1.0))
}

/// One output row: the 22 features of a `(window, source)` group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub window_index: u64,
    pub src_addr: String,
    pub label: u8,
    pub features: [f64; FEATURE_COUNT],
}

fn categorical(members: &[&FlowRecord], get: impl Fn(&FlowRecord) -> Option<&str>) -> (f64, f64) {
    let mut counts: BTreeMap<Option<&str>, u64> = BTreeMap::new();
    for m in members {
        *counts.entry(get(m)).or_insert(0) += 1;
    }
    let c: Vec<u64> = counts.into_values().collect();
    let ru = normalized_entropy(&c).unwrap_or(0.0);
    (c.len() as f64, ru)
}

/// `[sum, mean, std, max, median]`. Values are sorted first so the result
/// does not depend on member order.
fn numeric(members: &[&FlowRecord], get: impl Fn(&FlowRecord) -> f64) -> [f64; 5] {
    let mut v: Vec<f64> = members.iter().map(|m| get(m)).collect();
    v.sort_unstable_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return [0.0; 5];
    }
    let sum: f64 = v.iter().sum();
    let mean = sum / n as f64;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    let median = if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    };
    let std = if n == 1 { 0.0 } else { libm::sqrt(var) };
    [sum, mean, std, v[n - 1], median]
}

/// Features of a nonempty group. Absent ports count as their own category.
pub fn extract_features(group: &WindowGroup<'_>) -> FeatureRow {
    let m = &group.members;
    let (sport_n, sport_ru) = categorical(m, |r| r.sport.as_deref());
    let (dst_n, dst_ru) = categorical(m, |r| Some(r.dst_addr.as_str()));
    let (dport_n, dport_ru) = categorical(m, |r| r.dport.as_deref());
    let dur = numeric(m, |r| r.dur);
    let tot = numeric(m, |r| r.tot_bytes as f64);
    let src = numeric(m, |r| r.src_bytes as f64);

    let mut f = [0.0; FEATURE_COUNT];
    f[0] = m.len() as f64;
    f[1] = sport_n;
    f[2] = dst_n;
    f[3] = dport_n;
    f[4..9].copy_from_slice(&dur);
    f[9..14].copy_from_slice(&tot);
    f[14..19].copy_from_slice(&src);
    f[19] = sport_ru;
    f[20] = dst_ru;
    f[21] = dport_ru;

    FeatureRow {
        window_index: group.window_index,
        src_addr: group.src_addr.to_string(),
        label: 0,
        features: f,
    }
}

/// 1 when any member label contains `Botnet` (case-sensitive).
pub fn label_group(group: &WindowGroup<'_>) -> u8 {
    u8::from(group.members.iter().any(|r| r.is_botnet()))
}

/// Labelled feature rows for every nonempty `(window, source)` pair, ordered
/// by window index then source address.
pub fn extract_rows(table: &FlowTable, cfg: &WindowConfig) -> Result<Vec<FeatureRow>, FeatureError> {
    cfg.validate()?;
    if table.is_empty() {
        return Err(FeatureError::EmptyTable);
    }
    let groups = group_windows(table, cfg);
    Ok(exec::map_indexed(groups.len(), |i| {
        let g = &groups[i];
        let mut row = extract_features(g);
        row.label = label_group(g);
        row
    }))
}

/// Packs feature rows into a [`Dataset`].
pub fn rows_to_dataset(rows: Vec<FeatureRow>, scenario: &str, window: Option<WindowConfig>) -> Dataset {
    let mut values = Vec::with_capacity(rows.len() * FEATURE_COUNT);
    let mut labels = Vec::with_capacity(rows.len());
    let mut keys = Vec::with_capacity(rows.len());
    for r in rows {
        values.extend_from_slice(&r.features);
        labels.push(r.label);
        keys.push(RowKey {
            window_index: r.window_index,
            src_addr: r.src_addr,
        });
    }
    let meta = DatasetMeta {
        scenario: scenario.to_string(),
        window,
        keys,
    };
    Dataset::new(feature_names(), values, labels, meta).expect("extracted features are finite")
}

pub fn build_dataset(table: &FlowTable, cfg: &WindowConfig) -> Result<Dataset, FeatureError> {
    let rows = extract_rows(table, cfg)?;
    let origin = cfg.origin.or_else(|| table.earliest_start());
    let window = origin.map(|o| cfg.with_origin(o));
    Ok(rows_to_dataset(rows, &table.source_path, window))
}
