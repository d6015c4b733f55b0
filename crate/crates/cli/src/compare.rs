use std::fs;
use std::path::Path;

use cbo_core::engine::BoTrace;
use serde::{Deserialize, Serialize};

use crate::runner::RunSummary;
use crate::CliError;

/// Best-feasible curve of one run, indexed by evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub source: String,
    pub evaluations: usize,
    pub best_feasible_per_evaluation: Vec<Option<f64>>,
    pub final_best_feasible: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub a: Curve,
    pub b: Curve,
    /// `a - b` per evaluation; `None` where either side has no feasible point yet.
    pub delta_per_evaluation: Vec<Option<f64>>,
    pub final_delta: Option<f64>,
}

impl Curve {
    pub fn from_trace(source: impl Into<String>, trace: &BoTrace) -> Self {
        let best = trace.best_feasible_per_evaluation();
        Self { source: source.into(), evaluations: best.len(), final_best_feasible: trace.best_feasible(), best_feasible_per_evaluation: best }
    }

    pub fn from_summary(source: impl Into<String>, s: &RunSummary) -> Result<Self, CliError> {
        let source = source.into();
        let best = &s.best_feasible_per_evaluation;
        if best.len() != s.trace.evaluations || best.last().copied().flatten() != s.trace.final_best_feasible {
            return Err(CliError::Config(format!("{source}: summary curve disagrees with its own totals")));
        }
        Ok(Self {
            source,
            evaluations: s.trace.evaluations,
            best_feasible_per_evaluation: best.clone(),
            final_best_feasible: s.trace.final_best_feasible,
        })
    }

    /// Reads a `summary.json` or a `trace.csv`, chosen by extension.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let name = path.display().to_string();
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{name}: {e}")))?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => {
                let s: RunSummary = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{name}: {e}")))?;
                Self::from_summary(name, &s)
            }
            Some("csv") => {
                let t = BoTrace::read_csv(text.as_bytes()).map_err(|e| CliError::Config(format!("{name}: {e}")))?;
                Ok(Self::from_trace(name, &t))
            }
            _ => Err(CliError::Config(format!("{name}: expected a .json summary or a .csv trace"))),
        }
    }
}

pub fn compare(a: Curve, b: Curve) -> Result<Comparison, CliError> {
    if a.evaluations != b.evaluations {
        return Err(CliError::Config(format!(
            "budget mismatch: {} has {} evaluations, {} has {}",
            a.source, a.evaluations, b.source, b.evaluations
        )));
    }
    let delta = |x: Option<f64>, y: Option<f64>| Some(x? - y?);
    let delta_per_evaluation =
        a.best_feasible_per_evaluation.iter().zip(&b.best_feasible_per_evaluation).map(|(x, y)| delta(*x, *y)).collect();
    let final_delta = delta(a.final_best_feasible, b.final_best_feasible);
    Ok(Comparison { a, b, delta_per_evaluation, final_delta })
}

pub fn compare_paths(a: &Path, b: &Path) -> Result<Comparison, CliError> {
    compare(Curve::load(a)?, Curve::load(b)?)
}
