//! File formats, configuration, theorem suites and the command-line driver.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod expr;
pub mod io;
pub mod parallel;
pub mod suites;

pub use error::{CliError, CliResult};
