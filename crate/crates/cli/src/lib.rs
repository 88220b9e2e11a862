//! Command-line front end for the periodic DGTD solver: configuration parsing, run
//! orchestration and output files.

pub mod config;
pub mod run;
pub mod verify;

pub use config::{parse_config, ConfigError, RunConfig};
pub use run::{build_discretization, oracle_mode, simulate, stability, Invocation, RunError, RunResult, SimulateSummary};
