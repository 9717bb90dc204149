//! Bayesian optimization for iterative learning processes.
//!
//! Hyperparameters `x` and the training-iteration budget `t` are modelled
//! jointly by two Gaussian processes, one for a compressed learning-curve
//! score and one for the cost of training. Each curve is compressed with a
//! learnable logistic preference, and a few intermediate points of each
//! curve are added to the score GP as long as the covariance stays well
//! conditioned.
//!
//! The crate is `no_std` (with `alloc`); process spawning, file formats and
//! the command line live in the `boil` crate.

#![no_std]
// `!(a <= b)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
extern crate alloc;

pub mod acquisition;
pub mod augmentation;
pub mod compression;
pub mod error;
pub mod gp;
pub mod objective;
pub mod optimizer;
pub mod sobol;
pub mod space;
pub mod stats;
pub mod transform;

pub use error::{BoilError, Result};
pub use space::{Dimension, JointInput, Scale, SearchSpace};
