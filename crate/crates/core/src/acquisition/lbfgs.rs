use std::collections::VecDeque;

use crate::BoundedBox;

const MEMORY: usize = 10;
const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LbfgsStatus {
    /// Projected gradient or objective change fell below tolerance.
    Converged,
    MaxIterations,
    /// No step satisfying the Armijo condition was found.
    LineSearchFailed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub accepted_steps: usize,
    pub status: LbfgsStatus,
}

/// Box-constrained limited-memory BFGS: two-loop recursion on the free
/// variables, projection onto the box, Armijo backtracking along the
/// projected path.
///
/// `f` returns the value and gradient, or `None` when the point cannot be
/// evaluated, which the line search treats as a failed trial.
pub fn minimize_projected_lbfgs<F>(mut f: F, x0: &[f64], bounds: &BoundedBox, max_iters: usize, tol: f64) -> LbfgsOutcome
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let mut x = x0.to_vec();
    bounds.clamp(&mut x);
    let n = x.len();
    let Some((mut fx, mut g)) = f(&x) else {
        return LbfgsOutcome { x, value: f64::NAN, accepted_steps: 0, status: LbfgsStatus::LineSearchFailed };
    };
    let lo = bounds.lower();
    let hi = bounds.upper();
    let mut mem: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(MEMORY);
    let mut accepted = 0;

    for _ in 0..max_iters {
        let pg_norm = (0..n).map(|i| (x[i] - (x[i] - g[i]).clamp(lo[i], hi[i])).abs()).fold(0.0, f64::max);
        if pg_norm <= tol {
            return LbfgsOutcome { x, value: fx, accepted_steps: accepted, status: LbfgsStatus::Converged };
        }
        // variables held at a bound by the gradient stay fixed this iteration
        let free: Vec<bool> = (0..n).map(|i| !((x[i] <= lo[i] && g[i] > 0.0) || (x[i] >= hi[i] && g[i] < 0.0))).collect();
        let mut step_ok = false;
        for attempt in 0..2 {
            let use_memory = attempt == 0 && !mem.is_empty();
            let d = if use_memory { two_loop(&g, &mem, &free) } else { masked_neg(&g, &free) };
            let slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
            if slope >= 0.0 {
                if use_memory {
                    continue;
                }
                break;
            }
            let mut t = 1.0;
            if !use_memory {
                let dn = d.iter().map(|v| v * v).sum::<f64>().sqrt();
                let span = lo.iter().zip(hi).map(|(a, b)| b - a).fold(f64::INFINITY, f64::min);
                t = (0.1 * span / dn).min(1.0);
            }
            for _ in 0..MAX_BACKTRACKS {
                let trial: Vec<f64> = (0..n).map(|i| (x[i] + t * d[i]).clamp(lo[i], hi[i])).collect();
                let moved: f64 = (0..n).map(|i| g[i] * (trial[i] - x[i])).sum();
                if moved >= 0.0 {
                    t *= 0.5;
                    continue;
                }
                if let Some((ft, gt)) = f(&trial) {
                    if ft.is_finite() && ft <= fx + ARMIJO_C1 * moved {
                        let s: Vec<f64> = (0..n).map(|i| trial[i] - x[i]).collect();
                        let y: Vec<f64> = (0..n).map(|i| gt[i] - g[i]).collect();
                        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
                        if sy > 1e-12 {
                            if mem.len() == MEMORY {
                                mem.pop_front();
                            }
                            mem.push_back((s, y, 1.0 / sy));
                        }
                        let rel = (fx - ft).abs() / fx.abs().max(ft.abs()).max(1.0);
                        x = trial;
                        fx = ft;
                        g = gt;
                        accepted += 1;
                        step_ok = true;
                        if rel <= tol * 1e-3 {
                            return LbfgsOutcome { x, value: fx, accepted_steps: accepted, status: LbfgsStatus::Converged };
                        }
                        break;
                    }
                }
                t *= 0.5;
            }
            if step_ok {
                break;
            }
            mem.clear();
        }
        if !step_ok {
            return LbfgsOutcome { x, value: fx, accepted_steps: accepted, status: LbfgsStatus::LineSearchFailed };
        }
    }
    LbfgsOutcome { x, value: fx, accepted_steps: accepted, status: LbfgsStatus::MaxIterations }
}

fn masked_neg(g: &[f64], free: &[bool]) -> Vec<f64> {
    g.iter().zip(free).map(|(v, &f)| if f { -v } else { 0.0 }).collect()
}

fn two_loop(g: &[f64], mem: &VecDeque<(Vec<f64>, Vec<f64>, f64)>, free: &[bool]) -> Vec<f64> {
    let mut q: Vec<f64> = g.iter().zip(free).map(|(v, &f)| if f { *v } else { 0.0 }).collect();
    let mut alphas = Vec::with_capacity(mem.len());
    for (s, y, rho) in mem.iter().rev() {
        let a = rho * dot_free(s, &q, free);
        for i in 0..q.len() {
            if free[i] {
                q[i] -= a * y[i];
            }
        }
        alphas.push(a);
    }
    let (s, y, _) = mem.back().expect("memory is non-empty");
    let yy = dot_free(y, y, free);
    let gamma = if yy > 0.0 { dot_free(s, y, free) / yy } else { 1.0 };
    let gamma = if gamma > 0.0 { gamma } else { 1.0 };
    q.iter_mut().for_each(|v| *v *= gamma);
    for ((s, y, rho), a) in mem.iter().zip(alphas.iter().rev()) {
        let b = rho * dot_free(y, &q, free);
        for i in 0..q.len() {
            if free[i] {
                q[i] += (a - b) * s[i];
            }
        }
    }
    masked_neg(&q, free)
}

fn dot_free(a: &[f64], b: &[f64], free: &[bool]) -> f64 {
    (0..a.len()).filter(|&i| free[i]).map(|i| a[i] * b[i]).sum()
}
