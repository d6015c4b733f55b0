//! Points and box bounds of the design space.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A point in the d-dimensional design space.
pub type LatentPoint = Vec<f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpaceError {
    #[error("bounds have {lower} lower and {upper} upper entries")]
    LengthMismatch { lower: usize, upper: usize },
    #[error("empty design space")]
    Empty,
    #[error("dimension {dim}: lower bound {lo} is not below upper bound {hi}")]
    Inverted { dim: usize, lo: f64, hi: f64 },
}

/// Axis-aligned box `[lo_j, hi_j]` per dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BoxRepr", into = "BoxRepr")]
pub struct BoundedBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoxRepr {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl TryFrom<BoxRepr> for BoundedBox {
    type Error = SpaceError;
    fn try_from(r: BoxRepr) -> Result<Self, SpaceError> {
        BoundedBox::new(r.lower, r.upper)
    }
}

impl From<BoundedBox> for BoxRepr {
    fn from(b: BoundedBox) -> Self {
        BoxRepr { lower: b.lower, upper: b.upper }
    }
}

impl BoundedBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, SpaceError> {
        if lower.len() != upper.len() {
            return Err(SpaceError::LengthMismatch { lower: lower.len(), upper: upper.len() });
        }
        if lower.is_empty() {
            return Err(SpaceError::Empty);
        }
        for (dim, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            // also rejects NaN
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(SpaceError::Inverted { dim, lo, hi });
            }
        }
        Ok(Self { lower, upper })
    }

    /// The same interval `[lo, hi]` in every one of `dim` dimensions.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self, SpaceError> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, z: &[f64]) -> bool {
        z.len() == self.dim()
            && z.iter().zip(self.lower.iter().zip(&self.upper)).all(|(&v, (&lo, &hi))| v >= lo && v <= hi)
    }

    /// Projects `z` onto the box in place.
    pub fn clamp(&self, z: &mut [f64]) {
        for (v, (&lo, &hi)) in z.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(lo, hi);
        }
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> LatentPoint {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&lo, &hi)| lo + (hi - lo) * rng.random::<f64>())
            .collect()
    }

    pub fn center(&self) -> LatentPoint {
        self.lower.iter().zip(&self.upper).map(|(lo, hi)| 0.5 * (lo + hi)).collect()
    }

    /// All 2^d corners, lower-bound-first per dimension.
    pub fn corners(&self) -> Vec<LatentPoint> {
        let d = self.dim();
        (0..1usize << d)
            .map(|mask| {
                (0..d)
                    .map(|j| if mask >> j & 1 == 0 { self.lower[j] } else { self.upper[j] })
                    .collect()
            })
            .collect()
    }
}

/// Affine per-dimension map `x = (z - offset) / scale` used to feed models
/// well-scaled inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputScaler {
    offset: Vec<f64>,
    scale: Vec<f64>,
}

impl InputScaler {
    pub fn identity(dim: usize) -> Self {
        Self { offset: vec![0.0; dim], scale: vec![1.0; dim] }
    }

    /// Maps the box onto `[-1, 1]^d`.
    pub fn from_bounds(bounds: &BoundedBox) -> Self {
        let offset = bounds.center();
        let scale = bounds.lower.iter().zip(&bounds.upper).map(|(lo, hi)| 0.5 * (hi - lo)).collect();
        Self { offset, scale }
    }

    /// Zero mean and unit variance per dimension over `points`; dimensions
    /// with no spread keep unit scale.
    pub fn standardize(points: &[LatentPoint]) -> Self {
        let d = points.first().map_or(0, Vec::len);
        let n = points.len().max(1) as f64;
        let mut offset = vec![0.0; d];
        for p in points {
            for (o, v) in offset.iter_mut().zip(p) {
                *o += v / n;
            }
        }
        let mut scale = vec![0.0; d];
        for p in points {
            for j in 0..d {
                scale[j] += (p[j] - offset[j]).powi(2) / n;
            }
        }
        for s in &mut scale {
            *s = if *s > 1e-24 { s.sqrt() } else { 1.0 };
        }
        Self { offset, scale }
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        z.iter().zip(self.offset.iter().zip(&self.scale)).map(|(v, (o, s))| (v - o) / s).collect()
    }

    /// Chain rule: turns a gradient w.r.t. scaled inputs into one w.r.t. `z`.
    pub fn pull_back(&self, grad: &mut [f64]) {
        for (g, s) in grad.iter_mut().zip(&self.scale) {
            *g /= s;
        }
    }

    pub fn invert(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(self.offset.iter().zip(&self.scale)).map(|(v, (o, s))| v * s + o).collect()
    }
}
