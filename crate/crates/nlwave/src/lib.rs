//! Configuration, presets, file formats and the experiment runner for the
//! `nlwave` simulator. The numerics live in `nlwave-core`.

pub mod config;
pub mod output;
pub mod presets;
pub mod runner;
pub mod snapshot;

pub use config::{parse_config, ConfigError, RunConfig};
pub use runner::{run_experiment, ExitCode, ExitReport, RunFlags, RunnerError};
