//! Configuration, orchestration and export for the `gasplant` command.

pub mod config;
pub mod error;
pub mod export;
pub mod plots;
pub mod run;
pub mod validate;

pub use config::{emit_config, load_config, parse_config, Mode, RunConfig};
pub use error::CliError;
pub use run::{run, RunOutcome};
