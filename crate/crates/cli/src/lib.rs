//! File formats, threading and the `ccm-select` command-line tool on top of
//! `ccm-core`.

pub mod commands;
pub mod error;
pub mod graph_json;
pub mod ingest;
pub mod manifest;
pub mod output;
pub mod priors;
pub mod runner;

pub use commands::run;
pub use error::{CliError, Result};
