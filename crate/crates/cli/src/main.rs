use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cbo_cli::compare::compare_paths;
use cbo_cli::config::ExperimentConfig;
use cbo_cli::runner::{execute, jsonl, lint_lines, write_outputs};
use cbo_cli::sweep::{default_workers, parse_seed_range, sweep};
use cbo_cli::CliError;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cbo", version, about = "Constrained Bayesian optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment, or a seed sweep, from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long, conflicts_with = "seeds")]
        seed: Option<u64>,
        /// Overrides the config `output_dir`.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Seed sweep `A..B` (end exclusive), one `seed_N` subdirectory each.
        #[arg(long)]
        seeds: Option<String>,
    },
    /// Compare two runs given as summary.json or trace.csv files.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Write the comparison here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check SMILES validity, one string per line, from a file or stdin.
    SmilesLint {
        input: Option<PathBuf>,
        /// Write JSON lines here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cbo: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Run { config, seed, output, seeds } => run(&config, seed, output, seeds.as_deref()),
        Command::Compare { a, b, output } => {
            let cmp = compare_paths(&a, &b)?;
            let mut text = serde_json::to_vec_pretty(&cmp).expect("comparison serializes");
            text.push(b'\n');
            emit(output.as_deref(), &text)
        }
        Command::SmilesLint { input, output } => {
            let text = match &input {
                Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
                None => {
                    let mut s = String::new();
                    std::io::stdin().read_to_string(&mut s)?;
                    s
                }
            };
            emit(output.as_deref(), &jsonl(&lint_lines(&text)))
        }
    }
}

fn run(path: &Path, seed: Option<u64>, output: Option<PathBuf>, seeds: Option<&str>) -> Result<(), CliError> {
    let cfg = ExperimentConfig::from_path(path)?;
    let dir = output
        .or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| CliError::Config("no output directory: pass --output or set `output_dir`".into()))?;
    match seeds {
        Some(range) => {
            let range = parse_seed_range(range)?;
            let resolved = range.map(|s| cfg.resolve(Some(s))).collect::<Result<Vec<_>, _>>()?;
            for d in sweep(&resolved, &dir, default_workers())? {
                println!("{}", d.display());
            }
        }
        None => {
            let resolved = cfg.resolve(seed)?;
            let out = execute(&resolved)?;
            for p in write_outputs(&out, &dir)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, bytes)?,
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}
