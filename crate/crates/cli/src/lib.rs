//! `binseq` command-line front end.
//!
//! All flags are resolved and validated into a [`RunConfig`] before any data
//! is read or any model is fitted. JSON goes to standard output or `--out`;
//! diagnostics and warnings go to standard error.

pub mod args;
mod commands;
pub mod config;
pub mod error;
mod resolve;

use std::ffi::OsString;

use clap::error::ErrorKind;
use clap::Parser;

pub use args::{Cli, Command, TestKind};
pub use config::ConfigFile;
pub use error::{CliError, EXIT_NUMERIC, EXIT_VALIDATION};
pub use resolve::{Nuisance, RunConfig, Task};

/// Version tag written into every JSON document; additive changes only.
pub const SCHEMA_VERSION: u32 = 1;

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_VALIDATION,
            };
            let _ = e.print();
            return code;
        }
    };
    match RunConfig::from_cli(cli).and_then(|cfg| cfg.execute()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
