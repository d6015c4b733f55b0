//! Branin-Hoo with a disk constraint that leaves one of its three global
//! minima feasible.

use std::f64::consts::PI;

use crate::engine::{Evaluation, Problem};
use crate::BoundedBox;

pub const DISK_CENTER: [f64; 2] = [2.5, 7.5];
pub const DISK_RADIUS_SQ: f64 = 50.0;

/// The three global minimizers of the unconstrained function.
pub const GLOBAL_MINIMIZERS: [[f64; 2]; 3] = [[-PI, 12.275], [PI, 2.275], [9.42478, 2.475]];
/// The minimizer that satisfies the disk constraint.
pub const FEASIBLE_MINIMIZER: [f64; 2] = [PI, 2.275];
/// Value of the function at every global minimizer.
pub const GLOBAL_MINIMUM: f64 = 0.397_887_357_729_738_2;

pub fn bounds() -> BoundedBox {
    BoundedBox::new(vec![-5.0, 0.0], vec![10.0, 15.0]).expect("fixed bounds are valid")
}

pub fn branin(x1: f64, x2: f64) -> f64 {
    let b = 5.1 / (4.0 * PI * PI);
    let c = 5.0 / PI;
    let t = 1.0 / (8.0 * PI);
    (x2 - b * x1 * x1 + c * x1 - 6.0).powi(2) + 10.0 * (1.0 - t) * x1.cos() + 10.0
}

pub fn disk_constraint(x1: f64, x2: f64) -> bool {
    (x1 - DISK_CENTER[0]).powi(2) + (x2 - DISK_CENTER[1]).powi(2) <= DISK_RADIUS_SQ
}

/// Objective and constraint from a single noise-free evaluation.
pub fn coupled_evaluate(x1: f64, x2: f64) -> (f64, bool) {
    (branin(x1, x2), disk_constraint(x1, x2))
}

/// Panics unless the disk keeps exactly [`FEASIBLE_MINIMIZER`] among the
/// three global minimizers.
pub fn assert_elimination_pattern() {
    let feasible: Vec<&[f64; 2]> = GLOBAL_MINIMIZERS.iter().filter(|m| disk_constraint(m[0], m[1])).collect();
    assert_eq!(feasible, vec![&FEASIBLE_MINIMIZER], "disk must keep only ({}, {})", FEASIBLE_MINIMIZER[0], FEASIBLE_MINIMIZER[1]);
}

/// The constrained benchmark as an optimization problem.
#[derive(Debug, Clone, Copy, Default)]
pub struct BraninProblem;

impl Problem for BraninProblem {
    fn bounds(&self) -> BoundedBox {
        bounds()
    }

    fn evaluate(&self, z: &[f64], _seed: u64) -> Result<Evaluation, String> {
        if z.len() != 2 {
            return Err(format!("expected 2 coordinates, got {}", z.len()));
        }
        let (objective, constraint_satisfied) = coupled_evaluate(z[0], z[1]);
        Ok(Evaluation { objective: Some(objective), constraint_satisfied })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        assert!((branin(PI, 2.275) - 0.397_887).abs() < 1e-6);
        assert!((branin(0.0, 0.0) - (36.0 + 10.0 * (1.0 - 1.0 / (8.0 * PI)) + 10.0)).abs() < 1e-12);
        for m in GLOBAL_MINIMIZERS {
            assert!((branin(m[0], m[1]) - GLOBAL_MINIMUM).abs() < 1e-5);
        }
    }

    #[test]
    fn disk_membership() {
        assert!(disk_constraint(PI, 2.275));
        assert!(!disk_constraint(-PI, 12.275));
        assert!(disk_constraint(2.5, 7.5));
        assert_eq!(coupled_evaluate(0.0, 0.0).1, false);
        assert_elimination_pattern();
    }
}
