//! `esmap` command line: each subcommand writes CSVs and a JSON manifest into
//! the output directory and exits 0 when its checks pass, 1 when one fails and
//! 2 on usage or configuration errors.

mod commands;
mod config;
mod output;
mod verify;

use std::fmt;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use config::{Cli, Command};
use output::Run;

/// A problem with the command line or its inputs, as opposed to a failed computation.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn is_usage(err: &anyhow::Error) -> bool {
    if err.downcast_ref::<UsageError>().is_some() {
        return true;
    }
    use esmap::Error as E;
    matches!(
        err.downcast_ref::<E>(),
        Some(
            E::InvalidTruncation(_)
                | E::UnsupportedWeight(_)
                | E::Parse { .. }
                | E::Invariant { .. }
                | E::NotACusp { .. }
                | E::WrongLevel { .. }
                | E::InsufficientCoefficients { .. }
                | E::OutOfRange(_)
                | E::Io(_)
        )
    )
}

fn configure_threads(threads: Option<usize>) -> usize {
    #[cfg(feature = "parallel")]
    {
        if let Some(n) = threads {
            // fails only if a pool already exists, which cannot happen this early
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        1
    }
}

fn execute(cmd: &Command, argv: &[String]) -> anyhow::Result<bool> {
    let common = cmd.common();
    common.validate()?;
    let threads = configure_threads(common.threads);
    let start = Instant::now();
    let mut run = Run::new(&common.out)?;
    match cmd {
        Command::Form(a) => commands::form(a, &mut run)?,
        Command::Ltwist(a) => commands::ltwist(a, &mut run)?,
        Command::Periods(a) => commands::periods(a, &mut run)?,
        Command::Zeros(a) => commands::zeros(a, &mut run)?,
        Command::Kloosterman(a) => commands::kloosterman(a, &mut run)?,
        Command::Moments(a) => commands::moments(a, &mut run)?,
        Command::Dist(a) => commands::dist(a, &mut run)?,
        Command::Verify(a) => verify::verify(a, &mut run)?,
    }
    if !matches!(cmd, Command::Verify(_)) {
        for c in &run.checks {
            println!("[{}] {} {} {}", if c.pass { "PASS" } else { "FAIL" }, c.name, output::fl(c.value), c.detail);
        }
    }
    let manifest = run.write_manifest(cmd.name(), argv, cmd, threads, start.elapsed().as_secs_f64())?;
    println!("wrote {}", manifest.display());
    Ok(run.all_passed())
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(&cli.command, &argv[1..]) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_usage(&e) { 2 } else { 1 })
        }
    }
}
