//! Command-line front end for the shared steering simulator.

pub mod config;
pub mod run;

pub use config::{load_config, parse_config, write_config, ConfigError};
pub use run::{run, CliError, RunArgs, RunManifest};
