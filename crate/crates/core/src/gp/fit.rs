//! MAP fitting of kernel hyperparameters by gradient ascent in log space.

use alloc::vec::Vec;

use super::kernel::KernelParams;
use super::likelihood::{lml_and_grad, HyperPrior};
use super::model::{GpDataset, GpModel};
use crate::error::Result;

const MAX_STEPS: usize = 200;
const TOLERANCE: f64 = 1e-8;
const MAX_HALVINGS: usize = 40;

fn clamp_theta(theta: &mut [f64], params: &KernelParams, prior: &HyperPrior) {
    for (v, &h) in theta.iter_mut().zip(params.free()) {
        let (lo, hi) = prior.bounds(h);
        *v = v.clamp(libm::log(lo), libm::log(hi));
    }
}

/// Maximizes the log posterior of the kernel hyperparameters starting from
/// `start`. Any numerical failure returns `start` unchanged.
pub fn fit_hyperparameters(
    dataset: &GpDataset,
    prior: &HyperPrior,
    start: &KernelParams,
) -> KernelParams {
    match ascend(dataset, prior, start) {
        Ok(p) => p,
        Err(_) => *start,
    }
}

fn ascend(dataset: &GpDataset, prior: &HyperPrior, start: &KernelParams) -> Result<KernelParams> {
    let inputs = dataset.inputs();
    let outputs = dataset.outputs();
    let eval = |theta: &[f64], grad: bool| {
        lml_and_grad(inputs, outputs, &start.with_log_params(theta), prior, grad)
    };

    let mut theta = start.log_params();
    let (mut value, mut grad) = eval(&theta, true)?;
    let mut step = 0.1;
    for _ in 0..MAX_STEPS {
        let gnorm = libm::sqrt(grad.iter().map(|g| g * g).sum::<f64>());
        if gnorm < 1e-10 {
            break;
        }
        let mut accepted = None;
        let mut s = step;
        for _ in 0..MAX_HALVINGS {
            let mut cand: Vec<f64> = theta.iter().zip(&grad).map(|(t, g)| t + s * g / gnorm).collect();
            clamp_theta(&mut cand, start, prior);
            let moved: f64 = cand.iter().zip(&theta).map(|(c, t)| (c - t) * (c - t)).sum();
            if moved == 0.0 {
                break;
            }
            let predicted: f64 = cand.iter().zip(&theta).zip(&grad).map(|((c, t), g)| (c - t) * g).sum();
            if let Ok((v, _)) = eval(&cand, false) {
                if v >= value + 1e-4 * predicted {
                    accepted = Some((cand, v));
                    break;
                }
            }
            s *= 0.5;
        }
        let Some((cand, v)) = accepted else { break };
        let improvement = v - value;
        theta = cand;
        (value, grad) = eval(&theta, true)?;
        debug_assert!((value - v).abs() < 1e-9 * (1.0 + v.abs()));
        step = (s * 2.0).min(1.0);
        if improvement < TOLERANCE {
            break;
        }
    }
    Ok(start.with_log_params(&theta))
}

impl GpModel {
    /// Refit hyperparameters by MAP from the current values and restandardize.
    pub fn refit(&mut self, prior: &HyperPrior) -> Result<()> {
        self.restandardize();
        let fitted = fit_hyperparameters(self.dataset(), prior, self.params());
        if fitted != *self.params() {
            let start = *self.params();
            if self.set_params(fitted).is_err() {
                self.set_params(start)?;
            }
        }
        Ok(())
    }
}
