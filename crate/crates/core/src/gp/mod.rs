//! Gaussian process regression over the joint (hyperparameter, iteration) space.

mod conditioning;
mod fit;
mod kernel;
mod likelihood;
mod model;
#[cfg(test)]
pub(crate) mod test_support;

pub use conditioning::{log_condition_number, log_condition_of};
pub use fit::fit_hyperparameters;
pub use kernel::{gram_matrix, kernel, Hyper, KernelKind, KernelParams};
pub(crate) use kernel::{cross_cov, gram_unchecked, kernel_unchecked};
pub use likelihood::{grad_lml, log_marginal_likelihood, HyperPrior};
pub use model::{posterior_cost_mean, GpDataset, GpModel};
pub(crate) use model::factorize;
