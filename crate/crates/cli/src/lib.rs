//! Command-line front end for `ptscatter`: grid sweeps, peak and singularity
//! searches, timing curves and the waveguide mapping, written as CSV, JSON
//! and SVG.
//!
//! Exit codes: 0 success, 1 failed selftest checks, 2 usage error, 3 domain
//! error, 4 I/O error.

// `!(x > 0.0)` guards deliberately reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod format;
pub mod output;
pub mod selftest;
pub mod svg;

use std::ffi::OsString;

use clap::{Parser, Subcommand};

pub use config::RunConfig;
pub use error::{CliError, CliResult};

#[derive(Parser, Debug)]
#[command(name = "ptscatter", version, about = "Scattering by the PT-symmetric ±iv barrier")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate |T|², phase and delay on a (xi, ka) grid.
    Scan(RunConfig),
    /// Locate transmission peaks along ka for each xi.
    Peaks(RunConfig),
    /// Locate spectral singularities in a (xi, ka) box.
    Singularities(RunConfig),
    /// Delay and phase times along ka for each xi.
    Timing(RunConfig),
    /// Map waveguide parameters in eV and nm to (xi, ka).
    Physical(RunConfig),
    /// Run the built-in invariant checks.
    Selftest {
        /// Perturb the closed form to confirm the checks can fail.
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
}

fn apply_threads() -> CliResult<()> {
    match std::env::var("PTSCATTER_THREADS") {
        Ok(s) => {
            let n: usize = s
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("PTSCATTER_THREADS must be a count, got '{s}'")))?;
            ptscatter::parallel::configure_threads(n);
            Ok(())
        }
        Err(_) => Ok(()),
    }
}

/// Runs one command and returns its printed lines.
pub fn execute(command: Command) -> CliResult<Vec<String>> {
    apply_threads()?;
    let report = match command {
        Command::Scan(c) => commands::scan(&c.resolve()?)?,
        Command::Peaks(c) => commands::peaks(&c.resolve()?)?,
        Command::Singularities(c) => commands::singularities(&c.resolve()?)?,
        Command::Timing(c) => commands::timing(&c.resolve()?)?,
        Command::Physical(c) => commands::physical(&c.resolve()?)?,
        Command::Selftest { inject_fault } => {
            let checks = selftest::run(if inject_fault { 1e-6 } else { 0.0 });
            print!("{}", selftest::table(&checks));
            let failed = checks.iter().filter(|c| !c.passed()).count();
            if failed > 0 {
                return Err(CliError::Checks(failed));
            }
            return Ok(Vec::new());
        }
    };
    Ok(report.lines)
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
