//! Outer loop accounting, batch construction, determinism and trace I/O.

use cbo_core::acquisition::{optimize_acquisition, AcquisitionConfig, Incumbent, Unconstrained};
use cbo_core::branin::{self, BraninProblem, GLOBAL_MINIMUM};
use cbo_core::engine::{
    kriging_believer_batch, random_sampling_baseline, run_constrained_bo, run_unconstrained_bo, BoConfig, BoTrace,
    Evaluation, Problem, StandardizedGp,
};
use cbo_core::gp::{AdamConfig, FitOptions};
use cbo_core::BoundedBox;

/// Short training everywhere; the loop mechanics do not depend on fit quality.
fn quick(seed: u64) -> BoConfig {
    let mut cfg = BoConfig { seed, iterations: 2, batch_size: 3, init_points: 6, ..BoConfig::default() };
    cfg.gp.adam.epochs = 20;
    cfg.bnn.train.epochs = 10;
    cfg.bnn.hidden_widths = vec![10];
    cfg.bnn.mc_samples = 10;
    cfg.optimizer.restarts = 3;
    cfg.optimizer.screen_samples = 50;
    cfg.optimizer.max_quasi_newton_steps = 20;
    cfg
}

/// Branin with the constraint switched off.
struct AllFeasible;

impl Problem for AllFeasible {
    fn bounds(&self) -> BoundedBox {
        branin::bounds()
    }

    fn evaluate(&self, z: &[f64], _seed: u64) -> Result<Evaluation, String> {
        Ok(Evaluation { objective: Some(branin::branin(z[0], z[1])), constraint_satisfied: true })
    }
}

fn csv_bytes(trace: &BoTrace) -> Vec<u8> {
    let mut out = Vec::new();
    trace.write_csv(&mut out).unwrap();
    out
}

#[test]
fn zero_iterations_returns_the_initial_design() {
    let cfg = BoConfig { iterations: 0, ..quick(4) };
    let trace = run_constrained_bo(&BraninProblem, &cfg).unwrap();
    assert_eq!(trace.observations.len(), cfg.init_points);
    assert!(trace.observations.iter().all(|o| o.iteration == 0));
    assert_eq!(trace.best_feasible_per_iteration.len(), 1);
    let random = random_sampling_baseline(&BraninProblem, cfg.init_points, 4).unwrap();
    let a: Vec<_> = trace.observations.iter().map(|o| o.z.clone()).collect();
    let b: Vec<_> = random.observations.iter().map(|o| o.z.clone()).collect();
    assert_eq!(a, b);
}

#[test]
fn trace_length_is_init_plus_batches() {
    let cfg = quick(1);
    let trace = run_constrained_bo(&BraninProblem, &cfg).unwrap();
    assert_eq!(trace.observations.len(), cfg.init_points + cfg.iterations * cfg.batch_size);
    assert_eq!(trace.best_feasible_per_iteration.len(), cfg.iterations + 1);
    for t in 1..=cfg.iterations {
        assert_eq!(trace.observations.iter().filter(|o| o.iteration == t).count(), cfg.batch_size);
    }
    let bounds = branin::bounds();
    assert!(trace.observations.iter().all(|o| bounds.contains(&o.z)));
}

#[test]
fn sequential_budget_accounting() {
    let mut cfg = quick(2);
    cfg.init_points = 10;
    cfg.iterations = 50;
    cfg.batch_size = 1;
    cfg.gp.adam.epochs = 2;
    cfg.bnn.train.epochs = 1;
    cfg.optimizer.restarts = 1;
    cfg.optimizer.screen_samples = 5;
    cfg.optimizer.max_quasi_newton_steps = 2;
    let trace = run_constrained_bo(&BraninProblem, &cfg).unwrap();
    assert_eq!(trace.observations.len(), 60);
}

fn small_gp() -> StandardizedGp {
    let xs: Vec<Vec<f64>> = (0..12).map(|i| vec![-5.0 + 15.0 * (i as f64 * 0.37).fract(), 15.0 * (i as f64 * 0.61).fract()]).collect();
    let ys: Vec<f64> = xs.iter().map(|z| branin::branin(z[0], z[1])).collect();
    let adam = AdamConfig { epochs: 30, ..AdamConfig::default() };
    StandardizedGp::fit(&xs, &ys, 6, 1e-5, &adam, &FitOptions::default(), 9).unwrap()
}

#[test]
fn batch_of_one_is_a_single_optimization() {
    let gp = small_gp();
    let inc = Incumbent::feasible(20.0);
    let cfg = AcquisitionConfig { restarts: 4, screen_samples: 100, ..AcquisitionConfig::new(branin::bounds(), 17) };
    let (batch, _) = kriging_believer_batch(&gp, &Unconstrained, &inc, 1, &cfg).unwrap();
    let single = optimize_acquisition(&gp, &Unconstrained, &inc, &cfg).unwrap();
    assert_eq!(batch, vec![single.point]);
}

#[test]
fn batch_points_are_distinct() {
    let gp = small_gp();
    let cfg = AcquisitionConfig { restarts: 4, screen_samples: 100, ..AcquisitionConfig::new(branin::bounds(), 5) };
    for inc in [Incumbent::feasible(20.0), Incumbent::infeasible()] {
        let constraint = cbo_core::engine::ConstantProbability(0.5);
        let (batch, _) = kriging_believer_batch(&gp, &constraint, &inc, 5, &cfg).unwrap();
        for i in 0..batch.len() {
            for j in 0..i {
                let d: f64 = batch[i].iter().zip(&batch[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                assert!(d > 1e-6, "{inc:?}: slots {j} and {i} coincide at {:?}", batch[i]);
            }
        }
    }
}

#[test]
fn reruns_are_byte_identical() {
    let cfg = quick(7);
    let a = run_constrained_bo(&BraninProblem, &cfg).unwrap();
    let b = run_constrained_bo(&BraninProblem, &cfg).unwrap();
    assert_eq!(csv_bytes(&a), csv_bytes(&b));
    let c = run_constrained_bo(&BraninProblem, &quick(8)).unwrap();
    assert_ne!(csv_bytes(&a), csv_bytes(&c));
}

#[test]
fn best_feasible_never_increases() {
    let trace = run_constrained_bo(&BraninProblem, &quick(3)).unwrap();
    let per_iter: Vec<f64> = trace.best_feasible_per_iteration.iter().flatten().copied().collect();
    assert!(per_iter.windows(2).all(|w| w[1] <= w[0]));
    let per_eval: Vec<f64> = trace.best_feasible_per_evaluation().into_iter().flatten().collect();
    assert!(per_eval.windows(2).all(|w| w[1] <= w[0]));
    assert_eq!(trace.best_feasible(), per_eval.last().copied());
}

#[test]
fn all_feasible_problem_reduces_to_plain_ei() {
    let cfg = quick(11);
    let constrained = run_constrained_bo(&AllFeasible, &cfg).unwrap();
    let unconstrained = run_unconstrained_bo(&AllFeasible, &cfg).unwrap();
    assert_eq!(csv_bytes(&constrained), csv_bytes(&unconstrained));
}

#[test]
fn random_search_reaches_the_feasible_minimum() {
    let trace = random_sampling_baseline(&BraninProblem, 100_000, 0).unwrap();
    let best = trace.best_feasible().unwrap();
    let feasible_min = branin::branin(branin::FEASIBLE_MINIMIZER[0], branin::FEASIBLE_MINIMIZER[1]);
    assert!(best >= feasible_min - 1e-9);
    assert!((best - GLOBAL_MINIMUM).abs() < 0.05, "best {best}");
    assert_eq!(trace.observations.len(), 100_000);
}

#[test]
fn csv_roundtrip() {
    let trace = run_constrained_bo(&BraninProblem, &quick(5)).unwrap();
    let bytes = csv_bytes(&trace);
    let back = BoTrace::read_csv(bytes.as_slice()).unwrap();
    assert_eq!(back.observations, trace.observations);
    assert_eq!(csv_bytes(&back), bytes);
    let header = std::str::from_utf8(&bytes).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header, "iteration,z0,z1,objective,constraint_satisfied");
}

#[test]
fn invalid_configs_are_rejected() {
    for cfg in [BoConfig { batch_size: 0, ..quick(0) }, BoConfig { init_points: 0, ..quick(0) }] {
        assert!(run_constrained_bo(&BraninProblem, &cfg).is_err());
    }
    assert!(random_sampling_baseline(&BraninProblem, 0, 0).is_err());
}
