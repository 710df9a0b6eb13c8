//! Batch driver for the training-game workbench: configuration, the
//! `solve`/`simulate`/`analyze`/`sweep`/`ingest-check` commands, and CSV,
//! text and SVG output.

pub mod commands;
pub mod config;
pub mod svg;

pub use commands::{
    cmd_analyze, cmd_ingest_check, cmd_simulate, cmd_solve, cmd_sweep, simulate_table, Analysis,
    CommandOutput,
};
pub use config::{RunConfig, OUT_DIR_ENV};

use std::path::Path;

/// Reads a config file; `None` gives the built-in defaults.
pub fn load_config(path: Option<&Path>) -> anyhow::Result<RunConfig> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| anyhow::anyhow!("reading config {}: {e}", p.display()))?;
            RunConfig::from_toml(&text).map_err(|e| anyhow::anyhow!("config {}: {e}", p.display()))
        }
        None => Ok(RunConfig::default()),
    }
}
