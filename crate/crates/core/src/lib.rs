//! Constrained Bayesian optimization over continuous design spaces.
//!
//! The objective is modelled by a sparse Gaussian process (FITC approximation,
//! ARD squared-exponential kernel) and the probability that a point satisfies a
//! binary constraint by a Bayesian neural network trained with black-box
//! alpha-divergence minimization. Points are proposed by maximizing expected
//! improvement weighted by that probability (EIC), either one at a time or in
//! batches chosen with the Kriging-Believer heuristic.
//!
//! Alongside the optimizer the crate ships the problems used to exercise it:
//! a disk-constrained Branin-Hoo benchmark, a SMILES tokenizer/validity checker
//! with a one-hot codec, and a synthetic latent-space testbed whose stochastic
//! decoder degrades away from its training anchors.

pub mod acquisition;
pub mod adam;
pub mod branin;
pub mod constraint;
pub mod engine;
pub mod gp;
pub mod rng;
pub mod smiles;
pub mod space;
pub mod testbed;

pub use space::{BoundedBox, InputScaler, LatentPoint, SpaceError};
