//! Bidirectional NetFlow records and row-level parsing.
//!
//! Rows arrive already split into fields; the std crate owns the CSV reader.
//! Parsing never fails fatally on a data row: a row is either a
//! [`FlowRecord`] satisfying every record invariant or a [`Rejection`] with a
//! stable reason code.

use core::fmt;

use chrono::{DateTime, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::prelude::*;

/// Canonical column names, in the order they are rendered.
pub const CANONICAL_COLUMNS: [&str; 15] = [
    "StartTime",
    "Dur",
    "Proto",
    "SrcAddr",
    "Sport",
    "Dir",
    "DstAddr",
    "Dport",
    "State",
    "sTos",
    "dTos",
    "TotPkts",
    "TotBytes",
    "SrcBytes",
    "Label",
];

const TIMESTAMP_FORMAT: &str = "%Y/%m/%d %H:%M:%S%.f";

/// Naive wall-clock instant with microsecond resolution.
///
/// Stored as microseconds since 1970-01-01 00:00:00 on a zone-less timeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Timestamp(pub i64);

impl Timestamp {
    pub const MICROS_PER_SEC: i64 = 1_000_000;

    /// Parses `YYYY/MM/DD HH:MM:SS[.fraction]`. Fractions of any width are
    /// accepted; digits below the microsecond are truncated.
    pub fn parse(s: &str) -> Option<Timestamp> {
        let dt = NaiveDateTime::parse_from_str(s.trim(), TIMESTAMP_FORMAT).ok()?;
        Some(Timestamp(dt.and_utc().timestamp_micros()))
    }

    pub fn from_secs_f64(secs: f64) -> Timestamp {
        Timestamp(libm::round(secs * Self::MICROS_PER_SEC as f64) as i64)
    }

    pub fn micros(self) -> i64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / Self::MICROS_PER_SEC as f64
    }

    pub fn add_micros(self, delta: i64) -> Timestamp {
        Timestamp(self.0 + delta)
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match DateTime::from_timestamp_micros(self.0) {
            Some(dt) => write!(f, "{}", dt.naive_utc().format("%Y/%m/%d %H:%M:%S%.6f")),
            None => write!(f, "@{}us", self.0),
        }
    }
}

/// One parsed bidirectional flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowRecord {
    pub start_time: Timestamp,
    /// Seconds, non-negative and finite.
    pub dur: f64,
    /// Lower-cased protocol token.
    pub proto: String,
    pub src_addr: String,
    pub sport: Option<String>,
    pub dir: String,
    pub dst_addr: String,
    pub dport: Option<String>,
    pub state: Option<String>,
    pub s_tos: Option<u8>,
    pub d_tos: Option<u8>,
    pub tot_pkts: u64,
    pub tot_bytes: u64,
    pub src_bytes: u64,
    pub label: String,
}

impl FlowRecord {
    /// Renders the record as the 15 canonical fields, in canonical order.
    /// Reparsing the output yields an identical record.
    pub fn to_fields(&self) -> [String; 15] {
        fn opt(v: &Option<String>) -> String {
            v.clone().unwrap_or_default()
        }
        fn tos(v: Option<u8>) -> String {
            v.map(|t| t.to_string()).unwrap_or_default()
        }
        [
            self.start_time.to_string(),
            format!("{}", self.dur),
            self.proto.clone(),
            self.src_addr.clone(),
            opt(&self.sport),
            self.dir.clone(),
            self.dst_addr.clone(),
            opt(&self.dport),
            opt(&self.state),
            tos(self.s_tos),
            tos(self.d_tos),
            self.tot_pkts.to_string(),
            self.tot_bytes.to_string(),
            self.src_bytes.to_string(),
            self.label.clone(),
        ]
    }

    /// True when the label marks botnet traffic.
    pub fn is_botnet(&self) -> bool {
        self.label.contains("Botnet")
    }
}

/// Reason a data row was not accepted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Rejection {
    MissingColumns {
        expected: usize,
        found: usize,
    },
    BadTimestamp,
    NonNumericDuration,
    NegativeDuration,
    BadCount {
        column: &'static str,
    },
    ZeroPackets,
    SrcBytesExceedTotal,
    MissingSrcAddr,
    MissingDstAddr,
    BadTos {
        column: &'static str,
    },
    BadLabel,
    /// Row could not be decoded at all (e.g. invalid UTF-8).
    Malformed,
}

impl Rejection {
    /// Stable snake_case code used in logs and parse statistics.
    pub fn code(&self) -> &'static str {
        match self {
            Rejection::MissingColumns { .. } => "missing_columns",
            Rejection::BadTimestamp => "bad_timestamp",
            Rejection::NonNumericDuration => "non_numeric_duration",
            Rejection::NegativeDuration => "negative_duration",
            Rejection::BadCount { .. } => "bad_count",
            Rejection::ZeroPackets => "zero_packets",
            Rejection::SrcBytesExceedTotal => "src_bytes_exceed_total",
            Rejection::MissingSrcAddr => "missing_src_addr",
            Rejection::MissingDstAddr => "missing_dst_addr",
            Rejection::BadTos { .. } => "bad_tos",
            Rejection::BadLabel => "bad_label",
            Rejection::Malformed => "malformed",
        }
    }
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rejection::MissingColumns { expected, found } => {
                write!(f, "missing_columns (need {expected}, row has {found})")
            }
            Rejection::BadCount { column } | Rejection::BadTos { column } => {
                write!(f, "{} ({column})", self.code())
            }
            _ => f.write_str(self.code()),
        }
    }
}

/// Header lacked one or more canonical columns.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("header is missing canonical column(s): {}", missing.join(", "))]
pub struct HeaderError {
    pub missing: Vec<&'static str>,
}

/// Column positions of the 15 canonical fields within a CSV header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowHeader {
    index: [usize; 15],
    width: usize,
}

impl FlowHeader {
    /// Builds the column map. Extra columns are ignored; names are matched
    /// exactly after trimming surrounding whitespace.
    pub fn from_names<'a, I>(names: I) -> Result<FlowHeader, HeaderError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut index = [usize::MAX; 15];
        let mut width = 0;
        for (pos, name) in names.into_iter().enumerate() {
            width = pos + 1;
            let name = name.trim();
            if let Some(c) = CANONICAL_COLUMNS.iter().position(|&n| n == name) {
                if index[c] == usize::MAX {
                    index[c] = pos;
                }
            }
        }
        let missing: Vec<&'static str> = CANONICAL_COLUMNS
            .iter()
            .zip(index.iter())
            .filter(|(_, &i)| i == usize::MAX)
            .map(|(&n, _)| n)
            .collect();
        if missing.is_empty() {
            Ok(FlowHeader { index, width })
        } else {
            Err(HeaderError { missing })
        }
    }

    /// Header whose columns are exactly the canonical ones, in canonical order.
    pub fn canonical() -> FlowHeader {
        let mut index = [0; 15];
        for (i, slot) in index.iter_mut().enumerate() {
            *slot = i;
        }
        FlowHeader { index, width: 15 }
    }

    /// Number of columns the header declared.
    pub fn width(&self) -> usize {
        self.width
    }

    fn required_width(&self) -> usize {
        self.index.iter().copied().max().unwrap_or(0) + 1
    }
}

fn non_empty(s: &str) -> Option<String> {
    let s = s.trim();
    if s.is_empty() {
        None
    } else {
        Some(s.to_string())
    }
}

fn parse_count(s: &str, column: &'static str) -> Result<u64, Rejection> {
    let s = s.trim();
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    // Some exporters write integral counts as floats ("12.0").
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 && libm::trunc(v) == v && v < 1.8e19 => Ok(v as u64),
        _ => Err(Rejection::BadCount { column }),
    }
}

fn parse_tos(s: &str, column: &'static str) -> Result<Option<u8>, Rejection> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(None);
    }
    if let Ok(v) = s.parse::<u8>() {
        return Ok(Some(v));
    }
    match s.parse::<f64>() {
        Ok(v) if (0.0..=255.0).contains(&v) && libm::trunc(v) == v => Ok(Some(v as u8)),
        _ => Err(Rejection::BadTos { column }),
    }
}

/// Parses one data row against a header map.
///
/// Empty `Sport`/`Dport`/`State`/`sTos`/`dTos` cells become `None`; the
/// protocol is lower-cased; ports stay opaque strings (hex tokens such as
/// `0x0303` are kept verbatim).
pub fn parse_flow_record<S: AsRef<str>>(fields: &[S], header: &FlowHeader) -> Result<FlowRecord, Rejection> {
    if fields.len() < header.required_width() {
        return Err(Rejection::MissingColumns {
            expected: header.required_width(),
            found: fields.len(),
        });
    }
    let get = |c: usize| fields[header.index[c]].as_ref();

    let start_time = Timestamp::parse(get(0)).ok_or(Rejection::BadTimestamp)?;
    let dur = match get(1).trim().parse::<f64>() {
        Ok(d) if !d.is_finite() => return Err(Rejection::NonNumericDuration),
        Ok(d) if d < 0.0 => return Err(Rejection::NegativeDuration),
        Ok(d) => d,
        Err(_) => return Err(Rejection::NonNumericDuration),
    };
    let src_addr = non_empty(get(3)).ok_or(Rejection::MissingSrcAddr)?;
    let dst_addr = non_empty(get(6)).ok_or(Rejection::MissingDstAddr)?;
    let tot_pkts = parse_count(get(11), "TotPkts")?;
    let tot_bytes = parse_count(get(12), "TotBytes")?;
    let src_bytes = parse_count(get(13), "SrcBytes")?;
    if tot_pkts == 0 {
        return Err(Rejection::ZeroPackets);
    }
    if src_bytes > tot_bytes {
        return Err(Rejection::SrcBytesExceedTotal);
    }
    let label = get(14).trim().to_string();
    if !label.is_empty() && !label.starts_with("flow=") {
        return Err(Rejection::BadLabel);
    }

    Ok(FlowRecord {
        start_time,
        // -0.0 renders as "-0" and must not survive as a negative-looking value.
        dur: if dur == 0.0 { 0.0 } else { dur },
        proto: get(2).trim().to_ascii_lowercase(),
        src_addr,
        sport: non_empty(get(4)),
        dir: get(5).trim().to_string(),
        dst_addr,
        dport: non_empty(get(7)),
        state: non_empty(get(8)),
        s_tos: parse_tos(get(9), "sTos")?,
        d_tos: parse_tos(get(10), "dTos")?,
        tot_pkts,
        tot_bytes,
        src_bytes,
        label,
    })
}

/// Accepted/rejected row counts with the first few rejection reasons.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ParseStats {
    pub accepted: u64,
    pub rejected: u64,
    /// `(1-based data row number, reason)` for the first rejections.
    pub first_rejections: Vec<(u64, Rejection)>,
}

impl ParseStats {
    /// Rejection reasons kept verbatim; later ones are only counted.
    pub const KEEP_REASONS: usize = 10;

    pub fn total(&self) -> u64 {
        self.accepted + self.rejected
    }

    pub fn record_accept(&mut self) {
        self.accepted += 1;
    }

    pub fn record_reject(&mut self, row: u64, reason: Rejection) {
        self.rejected += 1;
        if self.first_rejections.len() < Self::KEEP_REASONS {
            self.first_rejections.push((row, reason));
        }
    }
}

/// Parsed flows of one capture, in file order.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FlowTable {
    pub records: Vec<FlowRecord>,
    pub source_path: String,
    pub parse_stats: ParseStats,
}

impl FlowTable {
    pub fn new(source_path: impl Into<String>) -> FlowTable {
        FlowTable {
            records: Vec::new(),
            source_path: source_path.into(),
            parse_stats: ParseStats::default(),
        }
    }

    /// Builds a table from records that are already known to be valid.
    pub fn from_records(source_path: impl Into<String>, records: Vec<FlowRecord>) -> FlowTable {
        let parse_stats = ParseStats {
            accepted: records.len() as u64,
            ..ParseStats::default()
        };
        FlowTable {
            records,
            source_path: source_path.into(),
            parse_stats,
        }
    }

    /// Parses one data row and appends it or counts the rejection.
    pub fn push_row<S: AsRef<str>>(&mut self, fields: &[S], header: &FlowHeader) {
        let row = self.parse_stats.total() + 1;
        match parse_flow_record(fields, header) {
            Ok(rec) => {
                self.records.push(rec);
                self.parse_stats.record_accept();
            }
            Err(reason) => {
                log::debug!("row {row} rejected: {reason}");
                self.parse_stats.record_reject(row, reason);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn earliest_start(&self) -> Option<Timestamp> {
        self.records.iter().map(|r| r.start_time).min()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(overrides: &[(usize, &str)]) -> Vec<String> {
        let mut fields: Vec<String> = [
            "2011/08/10 09:46:53.000",
            "3600",
            "UDP",
            "147.32.84.165",
            "1025",
            "  <->",
            "147.32.80.9",
            "53",
            "CON",
            "0",
            "0",
            "2",
            "214",
            "81",
            "flow=From-Botnet-V42-UDP-DNS",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        for &(i, v) in overrides {
            fields[i] = v.to_string();
        }
        fields
    }

    #[test]
    fn parses_ctu_style_row() {
        let rec = parse_flow_record(&row(&[]), &FlowHeader::canonical()).unwrap();
        assert_eq!(rec.dur, 3600.0);
        assert_eq!(rec.proto, "udp");
        assert_eq!(rec.dport.as_deref(), Some("53"));
        assert_eq!(rec.dir, "<->");
        assert_eq!(rec.start_time.to_string(), "2011/08/10 09:46:53.000000");
        assert!(rec.is_botnet());
    }

    #[test]
    fn empty_optional_cells_become_absent() {
        let rec = parse_flow_record(&row(&[(4, ""), (8, ""), (9, ""), (10, "")]), &FlowHeader::canonical()).unwrap();
        assert_eq!(rec.sport, None);
        assert_eq!(rec.state, None);
        assert_eq!(rec.s_tos, None);
        assert_eq!(rec.d_tos, None);
    }

    #[test]
    fn negative_duration_is_rejected() {
        let err = parse_flow_record(&row(&[(1, "-1")]), &FlowHeader::canonical()).unwrap_err();
        assert_eq!(err, Rejection::NegativeDuration);
        assert_eq!(err.code(), "negative_duration");
    }

    #[test]
    fn rejection_reasons() {
        let h = FlowHeader::canonical();
        let cases: [(&[(usize, &str)], &str); 9] = [
            (&[(0, "yesterday")], "bad_timestamp"),
            (&[(1, "abc")], "non_numeric_duration"),
            (&[(1, "NaN")], "non_numeric_duration"),
            (&[(3, " ")], "missing_src_addr"),
            (&[(6, "")], "missing_dst_addr"),
            (&[(12, "-5")], "bad_count"),
            (&[(11, "0")], "zero_packets"),
            (&[(13, "500")], "src_bytes_exceed_total"),
            (&[(14, "Background")], "bad_label"),
        ];
        for (over, code) in cases {
            assert_eq!(parse_flow_record(&row(over), &h).unwrap_err().code(), code, "{over:?}");
        }
        let short: Vec<&str> = vec!["2011/08/10 09:46:53", "1"];
        assert_eq!(parse_flow_record(&short, &h).unwrap_err().code(), "missing_columns");
    }

    #[test]
    fn hex_ports_are_opaque() {
        let rec = parse_flow_record(&row(&[(4, "0x0303"), (7, "0x0008")]), &FlowHeader::canonical()).unwrap();
        assert_eq!(rec.sport.as_deref(), Some("0x0303"));
        assert_eq!(rec.dport.as_deref(), Some("0x0008"));
    }

    #[test]
    fn timestamps_accept_any_fraction_width() {
        let base = Timestamp::parse("2011/08/10 09:46:53").unwrap();
        assert_eq!(
            Timestamp::parse("2011/08/10 09:46:53.5").unwrap().micros() - base.micros(),
            500_000
        );
        assert_eq!(
            Timestamp::parse("2011/08/10 09:46:53.047277").unwrap().micros() - base.micros(),
            47_277
        );
        assert_eq!(
            Timestamp::parse("2011/08/10 09:46:53.123456789").unwrap().micros() - base.micros(),
            123_456
        );
        assert!(Timestamp::parse("2011-08-10 09:46:53").is_none());
    }

    #[test]
    fn header_reordering_and_extra_columns() {
        let mut names: Vec<&str> = CANONICAL_COLUMNS.to_vec();
        names.reverse();
        names.insert(3, "Extra");
        let h = FlowHeader::from_names(names.iter().copied()).unwrap();
        let canonical = row(&[]);
        let mut fields: Vec<String> = canonical.iter().rev().cloned().collect();
        fields.insert(3, "ignored".to_string());
        assert_eq!(
            parse_flow_record(&fields, &h).unwrap(),
            parse_flow_record(&canonical, &FlowHeader::canonical()).unwrap()
        );

        let err = FlowHeader::from_names(["StartTime", "Dur"]).unwrap_err();
        assert_eq!(err.missing.len(), 13);
    }

    #[test]
    fn table_counts_are_conserved() {
        let h = FlowHeader::canonical();
        let mut t = FlowTable::new("mem");
        t.push_row(&row(&[]), &h);
        t.push_row(&row(&[(1, "-1")]), &h);
        t.push_row(&row(&[]), &h);
        assert_eq!(t.parse_stats.accepted, 2);
        assert_eq!(t.parse_stats.rejected, 1);
        assert_eq!(t.parse_stats.first_rejections, vec![(2, Rejection::NegativeDuration)]);
    }
}
