//! Core algorithms for NetFlow-based botnet detection.
//!
//! The crate is `no_std` + `alloc`: it parses already-split CSV fields into
//! [`flow::FlowRecord`]s, slices flows into overlapping time windows grouped
//! by source address, extracts the 22 per-window features, and trains and
//! evaluates five classifier families on the resulting [`dataset::Dataset`].
//! File IO, JSON and the command line live in the `botflow` crate.
//!
//! Enable the `parallel` feature (implies `std`) to spread forest trees,
//! feature extraction and repeated evaluation runs over a rayon pool. Results
//! are identical with and without it.
#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

mod exec;
mod prelude;

pub mod dataset;
pub mod eval;
pub mod features;
pub mod flow;
pub mod linalg;
pub mod model;
pub mod select;
pub mod summary;
pub mod synth;
pub mod window;

pub use dataset::{Dataset, DatasetMeta, RowKey};
pub use eval::{Metrics, RepeatedMetrics};
pub use features::{FeatureRow, FEATURE_COUNT, FEATURE_NAMES};
pub use flow::{FlowRecord, FlowTable, Timestamp};
pub use model::{HyperParams, ModelArtifact};
pub use window::WindowConfig;

/// Seed used by every command and default configuration unless overridden.
pub const DEFAULT_SEED: u64 = 42;
