//! File formats, experiment suites and the command-line front end for
//! `wedgeflow-core`.
//!
//! Every acceptance scenario lives in [`suite`] as a plain function, so the
//! CLI and the acceptance harness run the same code.

pub mod cli;
pub mod error;
pub mod io;
pub mod oracle;
pub mod problem;
pub mod report;
pub mod suite;

pub use error::{CliError, CliResult};
