use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::LatentPoint;

/// One evaluated point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub z: LatentPoint,
    /// `None` when the evaluation produced nothing that can be scored.
    pub objective: Option<f64>,
    pub constraint_satisfied: bool,
    /// 0 for the initial design, then the outer iteration that proposed it.
    pub iteration: usize,
}

/// Ordered record of a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoTrace {
    pub observations: Vec<Observation>,
    /// Best feasible objective after each iteration, the initial design
    /// being iteration 0.
    pub best_feasible_per_iteration: Vec<Option<f64>>,
    /// Acquisition optimizations that fell back to a start point.
    pub degraded_acquisitions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub seed: u64,
    pub evaluations: usize,
    pub feasible_evaluations: usize,
    pub best_feasible_per_iteration: Vec<Option<f64>>,
    pub final_best_feasible: Option<f64>,
    pub degraded_acquisitions: usize,
    pub config: serde_json::Value,
    pub wall_time_seconds: f64,
}

impl BoTrace {
    pub(crate) fn push(&mut self, obs: Observation) {
        self.observations.push(obs);
    }

    /// Appends the running best feasible value for the iteration just
    /// completed.
    pub(crate) fn close_iteration(&mut self) {
        let best = self.best_feasible();
        self.best_feasible_per_iteration.push(best);
    }

    pub fn best_feasible(&self) -> Option<f64> {
        best_of(&self.observations)
    }

    /// Best feasible value after each evaluation, in order.
    pub fn best_feasible_per_evaluation(&self) -> Vec<Option<f64>> {
        (1..=self.observations.len()).map(|k| best_of(&self.observations[..k])).collect()
    }

    pub fn feasible_count(&self) -> usize {
        self.observations.iter().filter(|o| o.constraint_satisfied).count()
    }

    pub fn summary(&self, seed: u64, config: serde_json::Value, wall_time_seconds: f64) -> TraceSummary {
        TraceSummary {
            seed,
            evaluations: self.observations.len(),
            feasible_evaluations: self.feasible_count(),
            best_feasible_per_iteration: self.best_feasible_per_iteration.clone(),
            final_best_feasible: self.best_feasible(),
            degraded_acquisitions: self.degraded_acquisitions,
            config,
            wall_time_seconds,
        }
    }

    /// One row per observation: `iteration, z0 .. z{d-1}, objective,
    /// constraint_satisfied`. Missing objectives are empty fields; floats use
    /// the shortest representation that round-trips.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let d = self.observations.first().map_or(0, |o| o.z.len());
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["iteration".to_string()];
        header.extend((0..d).map(|j| format!("z{j}")));
        header.push("objective".into());
        header.push("constraint_satisfied".into());
        w.write_record(&header)?;
        for o in &self.observations {
            let mut row = vec![o.iteration.to_string()];
            row.extend(o.z.iter().map(|v| v.to_string()));
            row.push(o.objective.map_or(String::new(), |v| v.to_string()));
            row.push(u8::from(o.constraint_satisfied).to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Parses a trace written by [`BoTrace::write_csv`]. Per-iteration bests
    /// are rebuilt from the rows.
    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Self, String> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers().map_err(|e| e.to_string())?.clone();
        let d = headers.len().checked_sub(3).ok_or("trace needs at least three columns")?;
        let mut trace = BoTrace::default();
        for rec in r.records() {
            let rec = rec.map_err(|e| e.to_string())?;
            let parse = |s: &str| s.parse::<f64>().map_err(|e| format!("{s:?}: {e}"));
            let iteration = rec[0].parse::<usize>().map_err(|e| e.to_string())?;
            let z = (0..d).map(|j| parse(&rec[1 + j])).collect::<Result<Vec<_>, _>>()?;
            let objective = if rec[d + 1].is_empty() { None } else { Some(parse(&rec[d + 1])?) };
            let constraint_satisfied = match &rec[d + 2] {
                "1" => true,
                "0" => false,
                other => return Err(format!("bad constraint label {other:?}")),
            };
            trace.observations.push(Observation { z, objective, constraint_satisfied, iteration });
        }
        let last = trace.observations.iter().map(|o| o.iteration).max();
        if let Some(last) = last {
            for it in 0..=last {
                let upto = trace.observations.iter().rposition(|o| o.iteration <= it).map_or(0, |p| p + 1);
                trace.best_feasible_per_iteration.push(best_of(&trace.observations[..upto]));
            }
        }
        Ok(trace)
    }
}

fn best_of(obs: &[Observation]) -> Option<f64> {
    obs.iter()
        .filter(|o| o.constraint_satisfied)
        .filter_map(|o| o.objective)
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))))
}
