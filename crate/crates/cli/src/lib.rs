//! Command-line harness around `sls-core`: record synthetic traces, replay
//! them through the sculpting transform or a baseline, compare methods, and
//! benchmark the per-step cost.
//!
//! Exit codes: 0 success, 2 usage, 3 validation, 4 numerical.

pub mod bench;
pub mod commands;
pub mod error;
pub mod report;
pub mod settings;

pub use commands::{compare_records, replay_records, run, Cli, Command};
pub use error::{CliError, CliResult};
pub use report::{without_timing, RunReport, Summary};
