//! Log marginal likelihood with a log-normal hyperprior, and its gradient
//! with respect to the log of each free kernel hyperparameter.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DVector;

use super::kernel::{gram_unchecked, kernel_log_derivative, Hyper, KernelParams};
use super::model::{factorize_matrix, GpModel};
use crate::error::{invalid_input, Result};
use crate::space::JointInput;

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Independent log-normal priors on the kernel hyperparameters, plus the
/// box (in natural units) that fitting is confined to.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HyperPrior {
    pub lengthscale_mode: f64,
    pub noise_mode: f64,
    pub freeze_thaw_mode: f64,
    /// Standard deviation of each prior in log space.
    pub log_scale: f64,
    pub lengthscale_bounds: (f64, f64),
    pub noise_bounds: (f64, f64),
    pub freeze_thaw_bounds: (f64, f64),
}

impl Default for HyperPrior {
    fn default() -> Self {
        HyperPrior {
            lengthscale_mode: 0.3,
            noise_mode: 0.05,
            freeze_thaw_mode: 1.0,
            log_scale: 1.0,
            lengthscale_bounds: (0.01, 10.0),
            noise_bounds: (1e-6, 10.0),
            freeze_thaw_bounds: (0.01, 100.0),
        }
    }
}

impl HyperPrior {
    fn mode(&self, h: Hyper) -> f64 {
        match h {
            Hyper::LengthscaleX | Hyper::LengthscaleT => self.lengthscale_mode,
            Hyper::NoiseVar => self.noise_mode,
            Hyper::FtAlpha | Hyper::FtBeta => self.freeze_thaw_mode,
        }
    }

    pub fn bounds(&self, h: Hyper) -> (f64, f64) {
        match h {
            Hyper::LengthscaleX | Hyper::LengthscaleT => self.lengthscale_bounds,
            Hyper::NoiseVar => self.noise_bounds,
            Hyper::FtAlpha | Hyper::FtBeta => self.freeze_thaw_bounds,
        }
    }

    /// `ln p(v)` for a log-normal density whose mode is `mode(h)`, and its
    /// derivative with respect to `ln v`.
    fn log_density(&self, h: Hyper, v: f64) -> (f64, f64) {
        let s2 = self.log_scale * self.log_scale;
        let mu = libm::log(self.mode(h)) + s2;
        let lv = libm::log(v);
        let val = -(lv - mu) * (lv - mu) / (2.0 * s2) - lv - 0.5 * (LN_2PI + libm::log(s2));
        let d = -(lv - mu) / s2 - 1.0;
        (val, d)
    }

    /// Sum of log prior densities over the free hyperparameters.
    pub fn log_prob(&self, params: &KernelParams) -> f64 {
        params.free().iter().map(|&h| self.log_density(h, params.get(h)).0).sum()
    }
}

/// Value and log-space gradient of `ln p(y | theta) + ln p(theta)`.
pub(crate) fn lml_and_grad(
    inputs: &[JointInput],
    outputs: &[f64],
    params: &KernelParams,
    prior: &HyperPrior,
    with_grad: bool,
) -> Result<(f64, Vec<f64>)> {
    let n = inputs.len();
    if n == 0 {
        return Err(invalid_input!("marginal likelihood of an empty dataset"));
    }
    let k = gram_unchecked(inputs, params);
    let mut a = k.clone();
    for i in 0..n {
        a[(i, i)] += params.noise_var;
    }
    let (chol, _) = factorize_matrix(a)?;
    let y = DVector::from_column_slice(outputs);
    let alpha = chol.solve(&y);
    let log_det: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|d| libm::log(*d)).sum::<f64>();
    let mut value = -0.5 * y.dot(&alpha) - 0.5 * log_det - 0.5 * n as f64 * LN_2PI;
    value += prior.log_prob(params);

    if !with_grad {
        return Ok((value, Vec::new()));
    }
    let w = chol.inverse();
    let free = params.free();
    let mut grad = vec![0.0; free.len()];
    for (g, &h) in grad.iter_mut().zip(free) {
        let mut acc = 0.0;
        if h == Hyper::NoiseVar {
            for i in 0..n {
                acc += alpha[i] * alpha[i] - w[(i, i)];
            }
            acc *= params.noise_var;
        } else {
            for i in 0..n {
                for j in 0..n {
                    let dk = kernel_log_derivative(&inputs[i], &inputs[j], params, k[(i, j)], h);
                    acc += (alpha[i] * alpha[j] - w[(i, j)]) * dk;
                }
            }
        }
        *g = 0.5 * acc + prior.log_density(h, params.get(h)).1;
    }
    Ok((value, grad))
}

/// `L = -1/2 y^T (K + s^2 I)^-1 y - 1/2 ln|K + s^2 I| - n/2 ln 2pi + ln p_hyp`
/// on the model's standardized outputs.
pub fn log_marginal_likelihood(model: &GpModel, prior: &HyperPrior) -> Result<f64> {
    let ds = model.dataset();
    Ok(lml_and_grad(ds.inputs(), ds.outputs(), model.params(), prior, false)?.0)
}

/// Gradient of [`log_marginal_likelihood`] with respect to the log of each
/// hyperparameter in `model.params().free()`, in that order.
pub fn grad_lml(model: &GpModel, prior: &HyperPrior) -> Result<Vec<f64>> {
    let ds = model.dataset();
    Ok(lml_and_grad(ds.inputs(), ds.outputs(), model.params(), prior, true)?.1)
}
