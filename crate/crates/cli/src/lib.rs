//! Batch front end for `quadcool-core`: TOML experiment configs, seeded
//! parallel ensembles and sweeps, trajectory files and run manifests.
//!
//! Every command writes a `manifest.json` next to its products. Passing
//! that manifest back as `--config` reruns the command with the same
//! resolved configuration and seeds, and reproduces every product byte for
//! byte.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod manifest;
pub mod pipeline;

pub use cli::{run, Cli};
pub use config::ExperimentConfig;
pub use error::CliError;
