//! Expected improvement against the best posterior mean at full budget,
//! divided by the predicted cost, maximized over the joint space.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{BoilError, Result};
use crate::gp::{posterior_cost_mean, GpModel};
use crate::sobol::sobol_points;
use crate::space::JointInput;
use crate::stats::{normal_cdf, normal_pdf, softplus};

/// Maximum GP posterior mean over the incumbent candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct Incumbent {
    pub mu_max: f64,
    /// Unit-cube hyperparameters attaining `mu_max`.
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcquisitionDecision {
    pub z_next: JointInput,
    /// Expected improvement at `z_next`, standardized units.
    pub alpha_value: f64,
    /// Predicted cost at `z_next`, cost units.
    pub cost_mean: f64,
    pub score: f64,
}

/// `sigma phi(l) + (mu - mu_max) Phi(l)` with `l = (mu - mu_max) / sigma`.
pub fn ei_closed_form(mu: f64, sigma: f64, mu_max: f64) -> f64 {
    let diff = mu - mu_max;
    if !(sigma > 1e-12) {
        return diff.max(0.0);
    }
    let lambda = diff / sigma;
    (sigma * normal_pdf(lambda) + diff * normal_cdf(lambda)).max(0.0)
}

pub fn expected_improvement(model: &GpModel, z: &JointInput, inc: &Incumbent) -> Result<f64> {
    let (mu, var) = model.posterior(z)?;
    Ok(ei_closed_form(mu, libm::sqrt(var), inc.mu_max))
}

/// Best posterior mean over the observed hyperparameters moved to `t = T_max`.
pub fn incumbent(model: &GpModel, observed: &[JointInput]) -> Result<Incumbent> {
    let mut best: Option<Incumbent> = None;
    for z in observed {
        let mu = model.posterior_mean(&z.with_t(1.0));
        if best.as_ref().is_none_or(|b| mu > b.mu_max) {
            best = Some(Incumbent { mu_max: mu, x: z.x.clone() });
        }
    }
    best.ok_or_else(|| BoilError::InvalidState("incumbent needs at least one observation".into()))
}

/// `softplus(alpha) / softplus(mu_c)` for already computed terms.
pub fn score_from_terms(alpha: f64, cost_mean: f64) -> f64 {
    softplus(alpha) / softplus(cost_mean)
}

/// Cost-scaled acquisition value at `z`.
pub fn decision_score(
    model: &GpModel,
    cost_model: &GpModel,
    z: &JointInput,
    inc: &Incumbent,
) -> Result<f64> {
    let alpha = expected_improvement(model, z, inc)?;
    let cost = posterior_cost_mean(cost_model, z)?;
    Ok(score_from_terms(alpha, cost))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaximizerOptions {
    pub probes: usize,
    pub starts: usize,
    pub sweeps: usize,
    pub initial_step: f64,
    /// Pin the normalized budget (e.g. `Some(1.0)` for full-budget BO).
    pub fixed_t: Option<f64>,
    /// Divide by predicted cost; when false the score is `softplus(alpha)`.
    pub cost_aware: bool,
}

impl Default for MaximizerOptions {
    fn default() -> Self {
        MaximizerOptions {
            probes: 512,
            starts: 8,
            sweeps: 20,
            initial_step: 0.1,
            fixed_t: None,
            cost_aware: true,
        }
    }
}

struct Scorer<'a> {
    model: &'a GpModel,
    cost_model: &'a GpModel,
    inc: &'a Incumbent,
    cost_aware: bool,
}

impl Scorer<'_> {
    fn eval(&self, z: &JointInput) -> Result<AcquisitionDecision> {
        let (mu, var) = self.model.posterior_unchecked(z)?;
        let alpha = ei_closed_form(mu, libm::sqrt(var), self.inc.mu_max);
        let (cost_mean, score) = if self.cost_aware {
            let c = self.cost_model.posterior_mean_raw(z);
            (c, score_from_terms(alpha, c))
        } else {
            (0.0, softplus(alpha))
        };
        Ok(AcquisitionDecision { z_next: z.clone(), alpha_value: alpha, cost_mean, score })
    }
}

/// Higher score first; ties go to smaller `t`, then lexicographically smaller `x`.
fn compare(a: &AcquisitionDecision, b: &AcquisitionDecision) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.z_next.t.total_cmp(&b.z_next.t))
        .then_with(|| {
            a.z_next
                .x
                .iter()
                .zip(&b.z_next.x)
                .map(|(p, q)| p.total_cmp(q))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
}

/// Multi-start maximization of the decision score over `[0,1]^(d+1)`:
/// quasi-random probes, then coordinate-wise refinement from the best few.
pub fn maximize_decision(
    model: &GpModel,
    cost_model: &GpModel,
    dim: usize,
    seed: u64,
    opts: &MaximizerOptions,
) -> Result<AcquisitionDecision> {
    let inc = incumbent(model, model.dataset().inputs())?;
    maximize_with_incumbent(model, cost_model, &inc, dim, seed, opts)
}

pub fn maximize_with_incumbent(
    model: &GpModel,
    cost_model: &GpModel,
    inc: &Incumbent,
    dim: usize,
    seed: u64,
    opts: &MaximizerOptions,
) -> Result<AcquisitionDecision> {
    let scorer = Scorer { model, cost_model, inc, cost_aware: opts.cost_aware };
    let free_t = opts.fixed_t.is_none();
    let coords = dim + usize::from(free_t);
    let to_input = |p: &[f64]| JointInput {
        x: p[..dim].to_vec(),
        t: opts.fixed_t.unwrap_or_else(|| p[dim]),
    };

    let mut probes = Vec::with_capacity(opts.probes);
    for p in sobol_points(opts.probes.max(1), coords, seed) {
        probes.push(scorer.eval(&to_input(&p))?);
    }
    probes.sort_by(compare);
    let mut best = probes[0].clone();

    for start in probes.iter().take(opts.starts) {
        let mut cur = start.clone();
        let mut step = opts.initial_step;
        for _ in 0..opts.sweeps {
            let mut improved = false;
            for c in 0..coords {
                for dir in [1.0, -1.0] {
                    let mut z = cur.z_next.clone();
                    if c < dim {
                        z.x[c] = (z.x[c] + dir * step).clamp(0.0, 1.0);
                    } else {
                        z.t = (z.t + dir * step).clamp(0.0, 1.0);
                    }
                    let cand = scorer.eval(&z)?;
                    if compare(&cand, &cur) == Ordering::Less && cand.score > cur.score {
                        cur = cand;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        if compare(&cur, &best) == Ordering::Less {
            best = cur;
        }
    }
    Ok(best)
}
