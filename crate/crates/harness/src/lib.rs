//! Scenario ingestion, the three end-to-end case pipelines, and
//! deterministic export for the `vrsim` CLI.

// `!(v > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cases;
pub mod config;
pub mod error;
pub mod export;

pub use cases::{run_case1, run_case2, run_case3, run_scenario, CaseMetrics, CaseRun, RunReport};
pub use config::{load_config, load_config_str, CaseKind, ScenarioConfig};
pub use error::{HarnessError, Result};
pub use export::{export, write_manifest, ManifestEntry};
