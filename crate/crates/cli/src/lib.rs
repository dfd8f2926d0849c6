//! Scenario runner for the `repmut` solvers: reads a JSON scenario, runs
//! one solver route and writes CSV/JSON artifacts.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod run;

pub use config::{load, parse, Scenario};
pub use error::CliError;
pub use run::{run_loaded, run_scenario, Mode, Outcome, Overrides};
