//! File formats, reports, plots and the command-line front end for
//! `kahlercap-core`.

pub mod acceptance;
pub mod cli;
pub mod error;
pub mod formats;
pub mod plot;
pub mod report;
pub mod setspec;

pub use error::{CliError, CliResult};
