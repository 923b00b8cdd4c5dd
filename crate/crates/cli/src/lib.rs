//! Grid sweeps and table output for the `covert` binary.

pub mod commands;
pub mod config;
pub mod grid;
pub mod table;

use std::ffi::OsString;

use clap::Parser;

use config::{load_file, Cli, ConfigError, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_FLAGGED: i32 = 2;

fn run_config(cli: Cli) -> Result<i32, ConfigError> {
    let flags = match cli.flags.config.clone() {
        Some(path) => cli.flags.or(load_file(&path)?),
        None => cli.flags,
    };
    let cfg = RunConfig::resolve(cli.command, flags)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.threads {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| ConfigError::Invalid(format!("thread pool: {e}")))?;
    let outcome = pool.install(|| commands::execute(&cfg));
    table::emit_plotdata(&outcome.table, &outcome.warnings, cfg.output_path.as_deref(), cfg.format, cfg.gnuplot)?;
    Ok(if outcome.warnings.is_empty() { EXIT_OK } else { EXIT_FLAGGED })
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            e.print().ok();
            return code;
        }
    };
    match run_config(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}
