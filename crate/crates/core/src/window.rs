//! Overlapping time windows over flow start times.
//!
//! Window `k` spans `[origin + k*stride, origin + k*stride + width)`. A flow
//! belongs to every window whose span contains its start time; duration and
//! end time play no part in membership.

use core::ops::Range;

use serde::{Deserialize, Serialize};

use crate::flow::{FlowRecord, FlowTable, Timestamp};
use crate::prelude::*;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WindowError {
    #[error("window stride must be positive and at most the width (width {width_us}us, stride {stride_us}us)")]
    InvalidShape { width_us: i64, stride_us: i64 },
}

/// Window width, stride and origin. Widths are held in microseconds so
/// membership is decided with exact integer arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub width_us: i64,
    pub stride_us: i64,
    /// `None` means "earliest start time of the table".
    pub origin: Option<Timestamp>,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            width_us: 120 * Timestamp::MICROS_PER_SEC,
            stride_us: 60 * Timestamp::MICROS_PER_SEC,
            origin: None,
        }
    }
}

impl WindowConfig {
    pub fn from_secs(width: f64, stride: f64) -> Result<WindowConfig, WindowError> {
        let cfg = WindowConfig {
            width_us: libm::round(width * 1e6) as i64,
            stride_us: libm::round(stride * 1e6) as i64,
            origin: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_origin(mut self, origin: Timestamp) -> WindowConfig {
        self.origin = Some(origin);
        self
    }

    pub fn validate(&self) -> Result<(), WindowError> {
        if self.stride_us <= 0 || self.stride_us > self.width_us {
            return Err(WindowError::InvalidShape {
                width_us: self.width_us,
                stride_us: self.stride_us,
            });
        }
        Ok(())
    }

    pub fn width_secs(&self) -> f64 {
        self.width_us as f64 / 1e6
    }

    pub fn stride_secs(&self) -> f64 {
        self.stride_us as f64 / 1e6
    }

    /// Upper bound on the number of windows one flow can fall into.
    pub fn max_windows_per_flow(&self) -> u64 {
        ((self.width_us + self.stride_us - 1) / self.stride_us) as u64
    }

    /// Indices `k >= 0` of the windows containing a flow that starts at `t`.
    pub fn windows_for(&self, origin: Timestamp, t: Timestamp) -> Range<u64> {
        let d = t.micros() - origin.micros();
        if d < 0 {
            return 0..0;
        }
        let last = d / self.stride_us;
        let first = if d < self.width_us {
            0
        } else {
            (d - self.width_us) / self.stride_us + 1
        };
        first as u64..last as u64 + 1
    }

    /// Span of window `k` as `(start, end)`, end exclusive.
    pub fn span(&self, origin: Timestamp, k: u64) -> (Timestamp, Timestamp) {
        let start = origin.add_micros(k as i64 * self.stride_us);
        (start, start.add_micros(self.width_us))
    }

    fn resolve_origin(&self, table: &FlowTable) -> Option<Timestamp> {
        self.origin.or_else(|| table.earliest_start())
    }
}

/// Maps each window index to the indices of the flows it contains.
pub fn assign_windows(table: &FlowTable, cfg: &WindowConfig) -> BTreeMap<u64, Vec<usize>> {
    let mut out: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    let Some(origin) = cfg.resolve_origin(table) else {
        return out;
    };
    for (i, rec) in table.records.iter().enumerate() {
        for k in cfg.windows_for(origin, rec.start_time) {
            out.entry(k).or_default().push(i);
        }
    }
    out
}

/// Flows of one source address inside one window.
#[derive(Debug, Clone)]
pub struct WindowGroup<'a> {
    pub window_index: u64,
    pub src_addr: &'a str,
    pub members: Vec<&'a FlowRecord>,
}

/// Groups flows by `(window_index, src_addr)`, ordered by window index then
/// source address (byte-wise lexicographic).
pub fn group_windows<'a>(table: &'a FlowTable, cfg: &WindowConfig) -> Vec<WindowGroup<'a>> {
    let mut groups: BTreeMap<(u64, &'a str), Vec<&'a FlowRecord>> = BTreeMap::new();
    let Some(origin) = cfg.resolve_origin(table) else {
        return Vec::new();
    };
    for rec in &table.records {
        for k in cfg.windows_for(origin, rec.start_time) {
            groups.entry((k, rec.src_addr.as_str())).or_default().push(rec);
        }
    }
    groups
        .into_iter()
        .map(|((window_index, src_addr), members)| WindowGroup {
            window_index,
            src_addr,
            members,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn secs(s: i64) -> Timestamp {
        Timestamp(s * 1_000_000)
    }

    #[test]
    fn interval_arithmetic() {
        let cfg = WindowConfig::default();
        assert_eq!(cfg.windows_for(secs(0), secs(150)), 1..3);
        assert_eq!(cfg.windows_for(secs(0), secs(0)), 0..1);
        assert_eq!(cfg.windows_for(secs(0), secs(59)), 0..1);
        assert_eq!(cfg.windows_for(secs(0), secs(60)), 0..2);
        assert_eq!(cfg.windows_for(secs(0), secs(120)), 1..3);
        assert_eq!(cfg.windows_for(secs(10), secs(5)), 0..0);
        assert_eq!(cfg.max_windows_per_flow(), 2);
    }

    #[test]
    fn non_dividing_stride() {
        let cfg = WindowConfig::from_secs(100.0, 30.0).unwrap();
        assert_eq!(cfg.max_windows_per_flow(), 4);
        // 95 lies in [0,100), [30,130), [60,160), [90,190)
        assert_eq!(cfg.windows_for(secs(0), secs(95)), 0..4);
        // 105 lies in [30,130), [60,160), [90,190)
        assert_eq!(cfg.windows_for(secs(0), secs(105)), 1..4);
    }

    #[test]
    fn invalid_shapes() {
        assert!(WindowConfig::from_secs(60.0, 0.0).is_err());
        assert!(WindowConfig::from_secs(60.0, 120.0).is_err());
        assert!(WindowConfig::from_secs(60.0, 60.0).is_ok());
    }
}
