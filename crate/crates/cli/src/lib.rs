//! Configuration loading, experiment orchestration and report summaries for
//! the `wclab` command-line tool.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod summary;

pub use config::{load_config, ConfigError, ExperimentConfig, ExperimentKind};
pub use experiments::{run_experiment, Outcome, RunError, RunReport};
pub use summary::{load_summary, write_summary, SummaryTable};
