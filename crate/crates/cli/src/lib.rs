//! File formats, report bundles and subcommand drivers for the `entconf`
//! command line.

pub mod config;
pub mod error;
pub mod io;
pub mod oracle_check;
pub mod report;
pub mod run;
pub mod synth;

pub use error::{CliError, Result};
pub use run::Outcome;
