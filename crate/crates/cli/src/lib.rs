//! Batch front end: JSON run configurations in, solves, audits, CSV and plot
//! scripts out.

pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use config::{parse_config, RunConfig};
pub use error::CliError;
pub use run::{canonical_json, run, Outcome, Report, RunOptions, Verb};
