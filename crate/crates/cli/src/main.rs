mod args;
mod commands;
mod config;
mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::Parser;

use args::{Cli, Command};
use commands::{Report, Status};
use config::{Geometry, RunConfig, UsageError};

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_PARTIAL: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

fn write_report(report: &Report, out: Option<&Path>) -> Result<()> {
    let mut w: Box<dyn Write> = match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    report.table.write(&mut w, report.format, &report.hash, report.config.clone())?;
    w.flush()?;
    Ok(())
}

fn status_code(status: Status) -> u8 {
    match status {
        Status::Complete => EXIT_OK,
        Status::Partial => {
            eprintln!("warning: some points did not converge; see the converged column");
            EXIT_PARTIAL
        }
        Status::Interrupted => {
            eprintln!("interrupted: wrote the rows completed so far");
            EXIT_PARTIAL
        }
    }
}

fn run(cli: Cli, stop: &AtomicBool) -> Result<u8> {
    match cli.command {
        Command::Pp(a) => {
            let cfg = RunConfig::resolve(Geometry::Pp, &a)?;
            let report = commands::run(&cfg, stop)?;
            write_report(&report, cfg.out.as_deref())?;
            Ok(status_code(report.status))
        }
        Command::Ps(a) => {
            let cfg = RunConfig::resolve(Geometry::Ps, &a)?;
            let report = commands::run(&cfg, stop)?;
            write_report(&report, cfg.out.as_deref())?;
            Ok(status_code(report.status))
        }
        Command::Figure(a) => {
            let report = commands::figure(&a, stop)?;
            write_report(&report, a.out.as_deref())?;
            Ok(status_code(report.status))
        }
        Command::Validate(a) => match commands::validate(&a, stop)? {
            Some(true) => Ok(EXIT_OK),
            Some(false) => Ok(EXIT_PARTIAL),
            None => {
                eprintln!("interrupted");
                Ok(EXIT_PARTIAL)
            }
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    let stop = Arc::new(AtomicBool::new(false));
    {
        let stop = Arc::clone(&stop);
        if let Err(e) = ctrlc::set_handler(move || stop.store(true, Ordering::SeqCst)) {
            eprintln!("warning: cannot install interrupt handler: {e}");
        }
    }
    match run(cli, &stop) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::from(EXIT_INTERNAL)
            }
        }
    }
}
