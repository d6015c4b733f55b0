//! The outer optimization loop: initial design, model refits, incumbent,
//! batch proposal and evaluation.

mod surrogates;
mod trace;

pub use surrogates::{ConstantProbability, ScaledConstraint, StandardizedGp};
pub use trace::{BoTrace, Observation, TraceSummary};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acquisition::{
    optimize_acquisition, select_incumbent, AcquisitionConfig, AcquisitionError, ConstraintSurrogate, Incumbent,
    ObjectiveSurrogate, ProbabilisticConstraintSpec, Unconstrained,
};
use crate::constraint::{
    train_constraint, AlphaTrainConfig, BnnArchitecture, ConstraintError, FrozenBnn, LabeledLatentPoint,
};
use crate::gp::{AdamConfig, FitOptions, GpError};
use crate::rng::{sub_rng, sub_seed};
use crate::{BoundedBox, InputScaler, LatentPoint};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no scored observations to fit the objective model")]
    NoObjectiveData,
    #[error("objective model: {0}")]
    Gp(#[from] GpError),
    #[error("constraint model: {0}")]
    Constraint(#[from] ConstraintError),
    #[error("acquisition: {0}")]
    Acquisition(#[from] AcquisitionError),
}

/// Result of evaluating the black box once.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub objective: Option<f64>,
    pub constraint_satisfied: bool,
}

/// A black-box problem in minimization form.
pub trait Problem {
    fn bounds(&self) -> BoundedBox;

    /// Evaluates the objective and constraint together. `seed` drives any
    /// evaluation noise. An error is recorded as an unscored, infeasible
    /// observation.
    fn evaluate(&self, z: &[f64], seed: u64) -> Result<Evaluation, String>;

    /// Labelled points available before the first evaluation.
    fn initial_constraint_data(&self) -> Vec<LabeledLatentPoint> {
        Vec::new()
    }

    /// Scored points available before the first evaluation; they train the
    /// objective model but are not part of the trace.
    fn initial_objective_data(&self) -> Vec<(LatentPoint, f64)> {
        Vec::new()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GpSettings {
    pub num_inducing: usize,
    pub jitter: f64,
    pub adam: AdamConfig,
    pub fit: FitOptions,
}

impl Default for GpSettings {
    fn default() -> Self {
        Self { num_inducing: 5, jitter: 1e-5, adam: AdamConfig::default(), fit: FitOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BnnSettings {
    /// Hidden layer widths; input and output widths follow from the problem.
    pub hidden_widths: Vec<usize>,
    pub activation: crate::constraint::Activation,
    pub train: AlphaTrainConfig,
    /// Weight draws frozen for each acquisition optimization.
    pub mc_samples: usize,
}

impl Default for BnnSettings {
    fn default() -> Self {
        Self {
            hidden_widths: vec![50],
            activation: crate::constraint::Activation::GaussianRbf,
            train: AlphaTrainConfig::default(),
            mc_samples: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerSettings {
    pub restarts: usize,
    pub max_quasi_newton_steps: usize,
    pub convergence_tolerance: f64,
    pub screen_samples: usize,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self { restarts: 10, max_quasi_newton_steps: 100, convergence_tolerance: 1e-9, screen_samples: 500 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoConfig {
    pub iterations: usize,
    pub batch_size: usize,
    pub init_points: usize,
    pub spec: ProbabilisticConstraintSpec,
    pub seed: u64,
    pub gp: GpSettings,
    pub bnn: BnnSettings,
    pub optimizer: OptimizerSettings,
}

impl Default for BoConfig {
    /// Parallel constrained Branin: 10 initial points, 10 iterations of
    /// batches of 5, 5 inducing points.
    fn default() -> Self {
        Self {
            iterations: 10,
            batch_size: 5,
            init_points: 10,
            spec: ProbabilisticConstraintSpec::default(),
            seed: 0,
            gp: GpSettings::default(),
            bnn: BnnSettings::default(),
            optimizer: OptimizerSettings::default(),
        }
    }
}

impl BoConfig {
    /// Sequential constrained Branin: 50 initial points, 40 single-point
    /// iterations, 20 inducing points.
    pub fn branin_sequential() -> Self {
        Self {
            iterations: 40,
            batch_size: 1,
            init_points: 50,
            gp: GpSettings { num_inducing: 20, ..GpSettings::default() },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |m: &str| Err(EngineError::InvalidConfig(m.into()));
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if self.init_points == 0 {
            return bad("init_points must be positive");
        }
        if self.gp.num_inducing == 0 {
            return bad("gp.num_inducing must be positive");
        }
        if !(self.gp.jitter > 0.0) {
            return bad("gp.jitter must be positive");
        }
        if self.bnn.hidden_widths.is_empty() || self.bnn.hidden_widths.contains(&0) {
            return bad("bnn.hidden_widths needs at least one positive width");
        }
        if self.bnn.mc_samples == 0 {
            return bad("bnn.mc_samples must be positive");
        }
        self.spec.validate()?;
        self.gp.adam.validate()?;
        self.bnn.train.validate()?;
        self.acquisition_config(BoundedBox::cube(1, 0.0, 1.0).expect("unit box"), 0).validate()?;
        Ok(())
    }

    fn acquisition_config(&self, bounds: BoundedBox, seed: u64) -> AcquisitionConfig {
        AcquisitionConfig {
            bounds,
            restarts: self.optimizer.restarts,
            max_quasi_newton_steps: self.optimizer.max_quasi_newton_steps,
            convergence_tolerance: self.optimizer.convergence_tolerance,
            seed,
            screen_samples: self.optimizer.screen_samples,
        }
    }
}

// Sub-stream labels derived from the run seed.
const STREAM_DESIGN: u64 = 1;
const STREAM_EVAL: u64 = 2;
const STREAM_GP: u64 = 3;
const STREAM_BNN: u64 = 4;
const STREAM_ACQ: u64 = 5;

fn iteration_seed(seed: u64, stream: u64, iteration: usize) -> u64 {
    sub_seed(sub_seed(seed, stream), iteration as u64)
}

/// Greedy batch: after each selection the objective model is conditioned on
/// its own posterior mean at the chosen point. With no feasible incumbent the
/// chosen point is also believed feasible at that mean, so later slots use
/// EIC instead of repeating the most probably feasible point. The
/// hallucinated values live only in the local model copies. The first point uses `cfg.seed` so a batch
/// of one is exactly one [`optimize_acquisition`] call.
///
/// Returns the points and the number of degraded optimizations.
pub fn kriging_believer_batch<C>(
    gp: &StandardizedGp,
    cbnn: &C,
    incumbent: &Incumbent,
    batch_size: usize,
    cfg: &AcquisitionConfig,
) -> Result<(Vec<LatentPoint>, usize), EngineError>
where
    C: ConstraintSurrogate + ?Sized,
{
    let mut model = gp.clone();
    let mut incumbent = *incumbent;
    let mut points = Vec::with_capacity(batch_size);
    let mut degraded = 0;
    for b in 0..batch_size {
        let seed = if b == 0 { cfg.seed } else { sub_seed(cfg.seed, b as u64) };
        let res = optimize_acquisition(&model, cbnn, &incumbent, &AcquisitionConfig { seed, ..cfg.clone() })?;
        degraded += usize::from(res.degraded);
        if b + 1 < batch_size {
            let believed = model.predict_point(&res.point)?.mean;
            model = model.with_extra_observation(&res.point, believed)?;
            // Without an incumbent the point is also believed feasible.
            if !incumbent.feasible_found() {
                incumbent = Incumbent::feasible(believed);
            }
        }
        points.push(res.point);
    }
    Ok((points, degraded))
}

fn evaluate_into<P: Problem + ?Sized>(problem: &P, z: LatentPoint, iteration: usize, seed: u64, trace: &mut BoTrace) {
    let eval_seed = sub_seed(sub_seed(seed, STREAM_EVAL), trace.observations.len() as u64);
    let (objective, constraint_satisfied) = match problem.evaluate(&z, eval_seed) {
        Ok(e) => (e.objective.filter(|v| v.is_finite()), e.constraint_satisfied),
        Err(_) => (None, false),
    };
    trace.push(Observation { z, objective, constraint_satisfied, iteration });
}

fn initial_design<P: Problem + ?Sized>(problem: &P, n: usize, seed: u64, trace: &mut BoTrace) {
    let bounds = problem.bounds();
    let mut rng = sub_rng(seed, STREAM_DESIGN);
    for _ in 0..n {
        let z = bounds.sample_uniform(&mut rng);
        evaluate_into(problem, z, 0, seed, trace);
    }
}

/// Constrained BO with EIC and Kriging-Believer batches.
pub fn run_constrained_bo<P: Problem + ?Sized>(problem: &P, cfg: &BoConfig) -> Result<BoTrace, EngineError> {
    run_bo(problem, cfg, true)
}

/// The same loop with the constraint probability fixed at 1 (plain EI).
pub fn run_unconstrained_bo<P: Problem + ?Sized>(problem: &P, cfg: &BoConfig) -> Result<BoTrace, EngineError> {
    run_bo(problem, cfg, false)
}

fn run_bo<P: Problem + ?Sized>(problem: &P, cfg: &BoConfig, constrained: bool) -> Result<BoTrace, EngineError> {
    cfg.validate()?;
    let bounds = problem.bounds();
    let seed = cfg.seed;
    let mut trace = BoTrace::default();
    initial_design(problem, cfg.init_points, seed, &mut trace);
    trace.close_iteration();
    let prior_scored = problem.initial_objective_data();
    let prior_labels = problem.initial_constraint_data();

    for t in 1..=cfg.iterations {
        let mut xs: Vec<LatentPoint> = prior_scored.iter().map(|(z, _)| z.clone()).collect();
        let mut ys: Vec<f64> = prior_scored.iter().map(|(_, y)| *y).collect();
        for o in &trace.observations {
            if let Some(y) = o.objective {
                xs.push(o.z.clone());
                ys.push(y);
            }
        }
        if xs.is_empty() {
            return Err(EngineError::NoObjectiveData);
        }
        let gp = StandardizedGp::fit(
            &xs,
            &ys,
            cfg.gp.num_inducing,
            cfg.gp.jitter,
            &AdamConfig { seed: iteration_seed(seed, STREAM_GP, t), ..cfg.gp.adam.clone() },
            &cfg.gp.fit,
            iteration_seed(seed, STREAM_GP, t).wrapping_add(1),
        )?;

        let constraint: Box<dyn ConstraintSurrogate> = if constrained {
            let mut labels = prior_labels.clone();
            labels.extend(trace.observations.iter().map(|o| LabeledLatentPoint::new(o.z.clone(), o.constraint_satisfied)));
            constraint_surrogate(&labels, &bounds, cfg, t)?
        } else {
            Box::new(Unconstrained)
        };

        let mut candidates = xs;
        candidates.extend(gp.inducing_points());
        let incumbent = select_incumbent(&gp, constraint.as_ref(), &candidates, &cfg.spec)?;
        let acq = cfg.acquisition_config(bounds.clone(), iteration_seed(seed, STREAM_ACQ, t));
        let (batch, degraded) = kriging_believer_batch(&gp, constraint.as_ref(), &incumbent, cfg.batch_size, &acq)?;
        trace.degraded_acquisitions += degraded;
        for z in batch {
            evaluate_into(problem, z, t, seed, &mut trace);
        }
        trace.close_iteration();
    }
    Ok(trace)
}

/// Trains the classifier on `labels` (inputs mapped from the box to
/// `[-1, 1]`). With a single class the empirical rate is used as a constant.
fn constraint_surrogate(
    labels: &[LabeledLatentPoint],
    bounds: &BoundedBox,
    cfg: &BoConfig,
    t: usize,
) -> Result<Box<dyn ConstraintSurrogate>, EngineError> {
    let positives = labels.iter().filter(|p| p.label).count();
    if positives == 0 || positives == labels.len() {
        let rate = if positives == 0 { 0.0 } else { 1.0 };
        return Ok(Box::new(ConstantProbability(rate)));
    }
    let scaler = InputScaler::from_bounds(bounds);
    let scaled: Vec<LabeledLatentPoint> =
        labels.iter().map(|p| LabeledLatentPoint::new(scaler.apply(&p.z), p.label)).collect();
    let mut widths = vec![bounds.dim()];
    widths.extend(&cfg.bnn.hidden_widths);
    widths.push(1);
    let arch = BnnArchitecture::new(widths, cfg.bnn.activation)?;
    let train = AlphaTrainConfig { seed: iteration_seed(cfg.seed, STREAM_BNN, t), ..cfg.bnn.train.clone() };
    let post = train_constraint(&scaled, &arch, &train)?;
    let bnn = FrozenBnn::new(&post, cfg.bnn.mc_samples, sub_seed(train.seed, 1));
    Ok(Box::new(ScaledConstraint { bnn, scaler }))
}

/// Uniform random search. The points come from the same stream as the BO
/// initial design, so the first `init_points` coincide with it.
pub fn random_sampling_baseline<P: Problem + ?Sized>(problem: &P, budget: usize, seed: u64) -> Result<BoTrace, EngineError> {
    if budget == 0 {
        return Err(EngineError::InvalidConfig("budget must be at least 1".into()));
    }
    let bounds = problem.bounds();
    let mut rng = sub_rng(seed, STREAM_DESIGN);
    let mut trace = BoTrace::default();
    for i in 0..budget {
        let z = bounds.sample_uniform(&mut rng);
        evaluate_into(problem, z, i, seed, &mut trace);
        trace.close_iteration();
    }
    Ok(trace)
}
