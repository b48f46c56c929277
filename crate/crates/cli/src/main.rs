use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use shq_cli::{execute, split_overrides, Command};

/// Run verification sweeps, grid solves or estimate probes.
///
/// Any other `--key=value` argument overrides the matching config key.
#[derive(Parser, Debug)]
#[command(name = "shq", version)]
struct Args {
    /// verify, solve or probe
    command: String,
    /// Flat key=value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// json or csv
    #[arg(long)]
    format: Option<String>,
}

fn main() -> ExitCode {
    let (argv, overrides) = split_overrides(std::env::args());
    let args = Args::parse_from(argv);
    let result = args
        .command
        .parse::<Command>()
        .map_err(shq_cli::CliError::from)
        .and_then(|cmd| {
            execute(
                cmd,
                args.config.as_deref(),
                &overrides,
                args.format.as_deref(),
                args.out.as_deref(),
            )
        });
    match result {
        Ok((report, rendered)) => {
            if args.out.is_none() {
                print!("{rendered}");
            }
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                eprintln!("{} failure(s)", report.failures.len());
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
