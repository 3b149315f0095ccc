//! Report tables rendered as CSV or aligned text.

use std::fmt::Write as _;

use botflow_core::eval::{MeanStd, RepeatedMetrics};
use botflow_core::Dataset;
use botflow_core::Metrics;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Text,
    Csv,
}

/// Report preamble: `# key: value` lines describing the effective run.
#[derive(Debug, Clone, Default)]
pub struct Header {
    lines: Vec<(String, String)>,
}

impl Header {
    pub fn new(command: &str) -> Header {
        let mut h = Header::default();
        h.push("command", command);
        h
    }

    pub fn push(&mut self, key: &str, value: impl ToString) -> &mut Header {
        self.lines.push((key.to_string(), value.to_string()));
        self
    }

    pub fn render(&self) -> String {
        self.lines.iter().map(|(k, v)| format!("# {k}: {v}\n")).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub title: Option<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: ToString>(columns: &[S]) -> Table {
        Table {
            title: None,
            columns: columns.iter().map(ToString::to_string).collect(),
            rows: Vec::new(),
        }
    }

    pub fn titled(mut self, title: impl Into<String>) -> Table {
        self.title = Some(title.into());
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("writing to memory");
        for r in &self.rows {
            w.write_record(r).expect("writing to memory");
        }
        String::from_utf8(w.into_inner().expect("writing to memory")).expect("csv output is UTF-8")
    }

    /// Columns padded to their widest cell; text left-aligned, numbers right-aligned.
    pub fn to_text(&self) -> String {
        let widths: Vec<usize> = (0..self.columns.len())
            .map(|j| {
                self.rows
                    .iter()
                    .map(|r| r[j].chars().count())
                    .chain([self.columns[j].chars().count()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let numeric = |s: &str| s.parse::<f64>().is_ok();
        let mut out = String::new();
        if let Some(t) = &self.title {
            let _ = writeln!(out, "{t}");
        }
        let line = |cells: &[String], out: &mut String| {
            let parts: Vec<String> = cells
                .iter()
                .zip(&widths)
                .map(|(c, &w)| {
                    if numeric(c) {
                        format!("{c:>w$}")
                    } else {
                        format!("{c:<w$}")
                    }
                })
                .collect();
            let _ = writeln!(out, "{}", parts.join("  ").trim_end());
        };
        line(&self.columns, &mut out);
        let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
        let _ = writeln!(out, "{}", rule.join("  "));
        for r in &self.rows {
            line(r, &mut out);
        }
        out
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Text => self.to_text(),
            Format::Csv => self.to_csv(),
        }
    }
}

pub fn fmt_metric(v: f64) -> String {
    format!("{v:.4}")
}

pub fn fmt_permille(ds: &Dataset) -> String {
    format!("{:.3}", ds.botnet_permille())
}

/// Column set of evaluation tables.
pub const METRIC_COLUMNS: [&str; 10] = [
    "Botnet",
    "Size",
    "Botnet‰",
    "Stat",
    "Train P",
    "Train R",
    "Train f1",
    "Test P",
    "Test R",
    "Test f1",
];

fn prf(m: &Metrics) -> [String; 3] {
    [fmt_metric(m.precision), fmt_metric(m.recall), fmt_metric(m.f1)]
}

fn prf_stat(p: MeanStd, r: MeanStd, f: MeanStd, pick: fn(MeanStd) -> f64) -> [String; 3] {
    [fmt_metric(pick(p)), fmt_metric(pick(r)), fmt_metric(pick(f))]
}

/// Appends the `mean` and `std` rows (and optionally one row per run) of a
/// repeated evaluation.
pub fn push_repeated(table: &mut Table, name: &str, ds: &Dataset, rm: &RepeatedMetrics, per_run: bool) {
    let lead = |stat: String| vec![name.to_string(), ds.n_rows().to_string(), fmt_permille(ds), stat];
    for (stat, pick) in [
        ("mean", (|m: MeanStd| m.mean) as fn(MeanStd) -> f64),
        ("std", |m: MeanStd| m.std),
    ] {
        let mut row = lead(stat.to_string());
        row.extend(prf_stat(rm.train.precision, rm.train.recall, rm.train.f1, pick));
        row.extend(prf_stat(rm.test.precision, rm.test.recall, rm.test.f1, pick));
        table.push(row);
    }
    if per_run {
        for (i, run) in rm.runs.iter().enumerate() {
            let mut row = lead(format!("run{i}"));
            row.extend(prf(&run.train));
            row.extend(prf(&run.test));
            table.push(row);
        }
    }
}

/// One row with train and test metrics of a single fit.
pub fn push_single(table: &mut Table, name: &str, ds: &Dataset, stat: &str, train: &Metrics, test: &Metrics) {
    let mut row = vec![
        name.to_string(),
        ds.n_rows().to_string(),
        fmt_permille(ds),
        stat.to_string(),
    ];
    row.extend(prf(train));
    row.extend(prf(test));
    table.push(row);
}
