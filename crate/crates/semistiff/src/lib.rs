//! Command-line driver for `semistiff-core`: reproducible experiments written
//! as CSV tables, SVG plots and flat `key = value` configs.
//!
//! Exit codes: `0` success, `1` usage or validation error, `2` numerical
//! failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

pub mod cli;
pub mod commands;
pub mod config;
pub mod io;
pub mod svg;

pub use cli::Cli;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl From<semistiff_core::Error> for CliError {
    fn from(e: semistiff_core::Error) -> Self {
        match e {
            semistiff_core::Error::Parameter(msg) => CliError::Usage(msg),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Reports go to `stdout`, diagnostics to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let informational =
                matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let rendered = e.render().to_string();
            if informational {
                let _ = write!(stdout, "{rendered}");
                return 0;
            }
            let _ = write!(stderr, "{rendered}");
            return 1;
        }
    };
    match commands::dispatch(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
