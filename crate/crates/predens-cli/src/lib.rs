//! Command-line front end for `predens`: experiment configs, risk curves,
//! figure presets, dominance reports, density tables and self-checks.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod verify;

pub use error::{CliError, Result};
