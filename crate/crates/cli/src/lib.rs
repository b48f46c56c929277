//! Batch driver: verification sweeps, grid solves and estimate probes, each
//! writing a JSON or CSV report that embeds the resolved configuration and a
//! hash of its inputs.

pub mod config;
pub mod report;
pub mod run;

use std::path::{Path, PathBuf};

pub use config::{Command, Config, Format};
pub use report::Report;
pub use run::{run_probe, run_solve, run_verify, RunOutput};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] shq_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

pub fn run(cfg: &Config) -> shq_core::Result<RunOutput> {
    match cfg.command {
        Command::Verify => run_verify(cfg),
        Command::Solve => run_solve(cfg),
        Command::Probe => run_probe(cfg),
    }
}

/// Separates `--key=value` overrides from the flags the argument parser
/// owns. `--config`, `--out` and `--format` stay with the parser.
pub fn split_overrides(args: impl IntoIterator<Item = String>) -> (Vec<String>, Vec<String>) {
    const OWNED: [&str; 3] = ["--config", "--out", "--format"];
    let (mut parser, mut overrides) = (vec![], vec![]);
    for a in args {
        let owned = OWNED.iter().any(|o| a == *o || a.starts_with(&format!("{o}=")));
        if a.starts_with("--") && a.contains('=') && !owned {
            overrides.push(a);
        } else {
            parser.push(a);
        }
    }
    (parser, overrides)
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Resolves the config, runs the command and writes the report (to `out`,
/// or returns it for printing) plus any snapshot files.
pub fn execute(
    command: Command,
    config_path: Option<&Path>,
    overrides: &[String],
    format: Option<&str>,
    out: Option<&Path>,
) -> Result<(Report, String), CliError> {
    let file = match config_path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| CliError::Io {
                path: p.to_path_buf(),
                source,
            })?;
            config::parse_text(&text)?
        }
        None => vec![],
    };
    let mut pairs = overrides
        .iter()
        .map(|o| config::parse_override(o))
        .collect::<shq_core::Result<Vec<_>>>()?;
    if let Some(f) = format {
        pairs.push(("format".into(), f.into()));
    }
    let env_seed = std::env::var("SHQ_SEED").ok();
    let cfg = Config::resolve(command, &file, &pairs, env_seed.as_deref())?;
    let output = run(&cfg)?;
    for (path, text) in &output.files {
        write(path, text)?;
    }
    let rendered = output.report.render(cfg.format()?);
    if let Some(p) = out {
        write(p, &rendered)?;
    }
    Ok((output.report, rendered))
}
