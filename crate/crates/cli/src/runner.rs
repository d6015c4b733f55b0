use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use cbo_core::branin::BraninProblem;
use cbo_core::engine::{random_sampling_baseline, run_constrained_bo, run_unconstrained_bo, BoTrace, TraceSummary};
use cbo_core::rng::sub_seed;
use cbo_core::smiles::{check_validity, ValidityReport};
use cbo_core::testbed::{diagnostic_experiment, write_diagnostic_csv, DiagnosticRow, LatentTestbed};
use serde::{Deserialize, Serialize};

use crate::config::{Experiment, ResolvedConfig};
use crate::CliError;

/// Decode attempts per point when scoring the drug-like fraction of a run.
pub const FRACTION_ATTEMPTS: usize = 100;

/// `summary.json` for trace-producing experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub experiment: Experiment,
    #[serde(flatten)]
    pub trace: TraceSummary,
    pub best_feasible_per_evaluation: Vec<Option<f64>>,
    /// Testbed runs only: mean drug-like decode fraction over the points the
    /// optimizer proposed (initial design excluded).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drug_like_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticSummary {
    pub experiment: Experiment,
    pub seed: u64,
    pub rows: Vec<DiagnosticRow>,
    pub config: serde_json::Value,
    pub wall_time_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LintSummary {
    pub experiment: Experiment,
    pub lines: usize,
    pub valid: usize,
    pub config: serde_json::Value,
}

/// Everything a run produced, kept in memory until it is written out.
#[derive(Debug, Clone)]
pub enum RunOutput {
    Trace { trace: BoTrace, summary: RunSummary },
    Diagnostic { rows: Vec<DiagnosticRow>, summary: DiagnosticSummary },
    Lint { reports: Vec<ValidityReport>, summary: LintSummary },
}

fn runtime<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Runs one resolved experiment without touching the file system (except
/// for reading the lint input).
pub fn execute(cfg: &ResolvedConfig) -> Result<RunOutput, CliError> {
    let echo = serde_json::to_value(cfg).expect("config serializes");
    let start = Instant::now();
    let trace_output = |trace: BoTrace, fraction: Option<f64>, start: Instant| {
        let summary = RunSummary {
            experiment: cfg.experiment,
            best_feasible_per_evaluation: trace.best_feasible_per_evaluation(),
            trace: trace.summary(cfg.seed, echo.clone(), start.elapsed().as_secs_f64()),
            drug_like_fraction: fraction,
        };
        RunOutput::Trace { trace, summary }
    };
    match cfg.experiment {
        Experiment::BraninSequential | Experiment::BraninParallel => {
            let bo = cfg.bo.as_ref().expect("resolved");
            let trace = run_constrained_bo(&BraninProblem, bo).map_err(runtime)?;
            Ok(trace_output(trace, None, start))
        }
        Experiment::BraninRandom => {
            let trace = random_sampling_baseline(&BraninProblem, cfg.budget.expect("resolved"), cfg.seed).map_err(runtime)?;
            Ok(trace_output(trace, None, start))
        }
        Experiment::TestbedConstrained | Experiment::TestbedUnconstrained => {
            let testbed = LatentTestbed::new(cfg.testbed.as_ref().expect("resolved")).map_err(runtime)?;
            let bo = cfg.bo.as_ref().expect("resolved");
            let trace = if cfg.experiment == Experiment::TestbedConstrained {
                run_constrained_bo(&testbed, bo)
            } else {
                run_unconstrained_bo(&testbed, bo)
            }
            .map_err(runtime)?;
            let fraction = drug_like_fraction(&testbed, &trace, cfg.seed);
            Ok(trace_output(trace, Some(fraction), start))
        }
        Experiment::Diagnostic => {
            let testbed = LatentTestbed::new(cfg.testbed.as_ref().expect("resolved")).map_err(runtime)?;
            let rows = diagnostic_experiment(testbed.decoder(), &cbo_core::engine::Problem::bounds(&testbed), cfg.diagnostic.as_ref().expect("resolved"))
                .map_err(runtime)?;
            let summary = DiagnosticSummary {
                experiment: cfg.experiment,
                seed: cfg.seed,
                rows: rows.clone(),
                config: echo,
                wall_time_seconds: start.elapsed().as_secs_f64(),
            };
            Ok(RunOutput::Diagnostic { rows, summary })
        }
        Experiment::SmilesLint => {
            let path = cfg.smiles_input.as_ref().expect("resolved");
            let text = fs::read_to_string(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
            let reports = lint_lines(&text);
            let summary = LintSummary {
                experiment: cfg.experiment,
                lines: reports.len(),
                valid: reports.iter().filter(|r| r.valid).count(),
                config: echo,
            };
            Ok(RunOutput::Lint { reports, summary })
        }
    }
}

/// Drug-like fraction over the proposed points, decoded with a stream
/// derived from the run seed only, so paired runs see the same decoder draws.
pub fn drug_like_fraction(testbed: &LatentTestbed, trace: &BoTrace, seed: u64) -> f64 {
    let points: Vec<_> = trace.observations.iter().filter(|o| o.iteration > 0).map(|o| o.z.clone()).collect();
    testbed.drug_like_fraction(&points, FRACTION_ATTEMPTS, sub_seed(seed, 0xD1A6))
}

/// One report per input line.
pub fn lint_lines(text: &str) -> Vec<ValidityReport> {
    text.lines().map(check_validity).collect()
}

/// Writes the artifacts of `output` into `dir` and returns their paths.
pub fn write_outputs(output: &RunOutput, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: &str, bytes: Vec<u8>| -> Result<(), CliError> {
        let path = dir.join(name);
        fs::write(&path, bytes)?;
        written.push(path);
        Ok(())
    };
    match output {
        RunOutput::Trace { trace, summary } => {
            let mut csv = Vec::new();
            trace.write_csv(&mut csv).map_err(runtime)?;
            put("trace.csv", csv)?;
            put("summary.json", to_json(summary))?;
        }
        RunOutput::Diagnostic { rows, summary } => {
            let mut csv = Vec::new();
            write_diagnostic_csv(rows, &mut csv).map_err(runtime)?;
            put("diagnostic.csv", csv)?;
            put("summary.json", to_json(summary))?;
        }
        RunOutput::Lint { reports, summary } => {
            put("validity.jsonl", jsonl(reports))?;
            put("summary.json", to_json(summary))?;
        }
    }
    Ok(written)
}

pub fn jsonl(reports: &[ValidityReport]) -> Vec<u8> {
    let mut out = Vec::new();
    for r in reports {
        out.extend(serde_json::to_vec(r).expect("reports serialize"));
        out.push(b'\n');
    }
    out
}

fn to_json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(v).expect("summaries serialize");
    bytes.push(b'\n');
    bytes
}
