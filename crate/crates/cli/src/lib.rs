//! Command-line front end: `cfproj estimate | simulate | diagnose`.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;

use std::ffi::OsString;

use clap::Parser;

use crate::args::Cli;
use crate::config::FileConfig;
use crate::error::{CliError, Result, EXIT_OK};

/// Resolves the configuration of a parsed invocation: file keys, then
/// flags, then per-mode defaults.
pub fn resolve(cli: &Cli) -> Result<FileConfig> {
    let mode = cli.command.mode();
    let file = match &cli.command.common().config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    if let Some(m) = file.mode {
        if m != mode {
            return Err(CliError::Config(format!("config file is for mode {m:?}, not {mode:?}")));
        }
    }
    Ok(file.merged(cli.command.overrides())?.with_defaults(mode))
}

fn run_resolved(cfg: &FileConfig) -> Result<()> {
    let go = || -> Result<()> {
        for (path, bytes) in commands::execute(cfg)? {
            io::write_output(path.as_deref(), &bytes)?;
        }
        Ok(())
    };
    match cfg.threads {
        None => go(),
        Some(0) => Err(CliError::Config("threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(format!("cannot start {n} worker threads: {e}")))?
            .install(go),
    }
}

/// Runs the command line and returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match resolve(&cli).and_then(|cfg| run_resolved(&cfg)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
