//! Command-line front end; the binary is a thin wrapper around [`run`].

pub mod commands;
pub mod config;
pub mod error;
pub mod table;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

use config::{merge, Cli, RunConfig};
use error::{CliError, EXIT_AUDIT, EXIT_CONFIG, EXIT_OK};

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run_cli(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("cvqkd: {e}");
            e.exit_code()
        }
    }
}

fn run_cli(cli: Cli) -> Result<i32, CliError> {
    let (kind, overrides) = cli.command.split();
    let cfg = RunConfig::from_map(kind, &merge(&overrides)?)?;
    let outcome = commands::execute(&cfg)?;
    let text = outcome.table.render(cfg.format);
    match &cfg.out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            source: e,
        })?,
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io {
                path: "<stdout>".into(),
                source: e,
            })?,
    }
    for f in &outcome.audit_failures {
        eprintln!("cvqkd: audit: {f}");
    }
    Ok(if outcome.audit_failures.is_empty() { EXIT_OK } else { EXIT_AUDIT })
}
