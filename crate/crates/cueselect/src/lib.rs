//! File formats, configuration and the command-line driver for the
//! `cueselect-core` selection engine.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod report;

pub use config::Config;
pub use error::{CliError, Result};
