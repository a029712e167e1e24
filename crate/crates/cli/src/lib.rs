//! `svtf` command-line front end.
//!
//! Exit codes: 0 success, 1 usage, 2 bad or unreadable data, 3 capacity or
//! overflow. Failures print one line `error: <Reason>: <detail>` to stderr.

pub mod args;
mod commands;
pub mod error;

use std::io::Write;

use clap::error::ErrorKind;
use clap::Parser;

pub use args::Cli;
pub use error::{CliError, EXIT_CAPACITY, EXIT_DATA, EXIT_OK, EXIT_USAGE};

/// Output sinks and run-wide switches.
pub struct Ctx<'a> {
    pub out: &'a mut dyn Write,
    pub err: &'a mut dyn Write,
    pub verbose: bool,
    pub deterministic: bool,
}

impl Ctx<'_> {
    pub(crate) fn timing(&mut self, label: &str, start: std::time::Instant) {
        if self.verbose && !self.deterministic {
            let _ = writeln!(self.err, "{label}: {:.1} ms", start.elapsed().as_secs_f64() * 1e3);
        }
    }

    pub(crate) fn note(&mut self, msg: &str) {
        if self.verbose {
            let _ = writeln!(self.err, "{msg}");
        }
    }
}

/// Parses `argv` (including the program name) and runs it.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    return EXIT_OK;
                }
                _ => EXIT_USAGE,
            };
            let _ = write!(err, "{}", e.render());
            return code;
        }
    };
    if cli.threads > 0 {
        // A pool built earlier in this process keeps its size.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }
    let mut ctx = Ctx { out, err, verbose: cli.verbose, deterministic: cli.deterministic };
    match commands::dispatch(cli.command, &mut ctx) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(ctx.err, "{}", e.line());
            e.reason().1
        }
    }
}
