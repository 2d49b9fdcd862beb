//! Experiment runner for the `stochclifford` library: TOML experiment specs,
//! JSON/CSV reports and the acceptance suite behind `reproduce-all`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod oracles;
pub mod spec;
pub mod suite;

pub use error::{CliError, Result, EXIT_CHECK_FAILURE, EXIT_PASS, EXIT_USAGE};
pub use experiments::{run, write_report, Check, Outcome, Report};
pub use spec::{ExperimentSpec, Kind, Params, DEFAULT_SEED};
pub use suite::{reproduce_all, reproduce_all_observed, write_summary, Scale, Summary};
