//! Stage orchestration behind the `patrolscope` command line.
//!
//! Each stage reads the artifacts of earlier stages from the output
//! directory, so stages can be rerun one at a time. `all` chains them.

pub mod artifacts;
mod config;
mod run;

pub use config::{apply_override, InputSource, RunConfig, Thresholds, WORKERS_ENV};
pub use run::{reproducible_files, run, RunReport, Stage, StageReport};
