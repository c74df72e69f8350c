//! Experiment harness for minimum-energy observers: TOML run configuration,
//! CSV output and the `moen` subcommands.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::{Overrides, Preset, RunConfig};
pub use error::{CliError, Result};
