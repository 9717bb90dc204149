//! Evaluation targets and the seeded learning-curve simulator.

use alloc::string::String;
use alloc::vec::Vec;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::compression::{compress_prefix, LearningCurve, PreferenceKind};
use crate::error::{invalid_input, Result};
use crate::space::{Dimension, SearchSpace};

/// Something that trains with hyperparameters `x` (raw units) for `t`
/// iterations and reports the learning curve.
pub trait Objective {
    fn evaluate(&self, x: &[f64], t: u32) -> Result<LearningCurve>;
}

/// Simulated training: `r(u) = A(x) (1 - exp(-u / tau(x))) + noise`, with
/// occasional transient dips. Distances are measured in the unit cube.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SyntheticCurveSpec {
    /// Optimum in unit-cube coordinates.
    pub x_star: Vec<f64>,
    /// Asymptote curvature: `A = max(0, 1 - a |x - x*|^2)`.
    pub a: f64,
    pub tau0: f64,
    /// Timescale growth: `tau = tau0 (1 + b |x - x*|)`.
    pub b: f64,
    pub noise_sd: f64,
    /// Per-iteration dip probability `min(dip_base + dip_slope |x - x*|, 0.95)`.
    pub dip_base: f64,
    pub dip_slope: f64,
    /// Continuation probability of a dip after each iteration.
    pub dip_persist: f64,
    /// Seconds per iteration: `cost_base + cost_weights . x`.
    pub cost_base: f64,
    pub cost_weights: Vec<f64>,
}

const MAX_DIP_PROB: f64 = 0.95;
const WORDS_PER_ITER: u128 = 8;

impl SyntheticCurveSpec {
    /// A smooth, noise-free family with optimum `x_star`.
    pub fn smooth(x_star: Vec<f64>, a: f64, tau0: f64, b: f64) -> Self {
        let d = x_star.len();
        SyntheticCurveSpec {
            x_star,
            a,
            tau0,
            b,
            noise_sd: 0.0,
            dip_base: 0.0,
            dip_slope: 0.0,
            dip_persist: 0.7,
            cost_base: 1.0,
            cost_weights: alloc::vec![0.0; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.x_star.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.x_star.is_empty() || self.x_star.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(invalid_input!("optimum must be a non-empty point of the unit cube"));
        }
        if self.cost_weights.len() != self.dim() {
            return Err(invalid_input!("{} cost weights for {} dimensions", self.cost_weights.len(), self.dim()));
        }
        let finite = [self.a, self.tau0, self.b, self.noise_sd, self.dip_base, self.dip_slope, self.dip_persist, self.cost_base];
        if finite.iter().chain(&self.cost_weights).any(|v| !v.is_finite()) {
            return Err(invalid_input!("synthetic spec has non-finite fields"));
        }
        if self.a < 0.0 || self.b < 0.0 || !(self.tau0 > 0.0) || self.noise_sd < 0.0 {
            return Err(invalid_input!("need a >= 0, b >= 0, tau0 > 0, noise_sd >= 0"));
        }
        if self.dip_base < 0.0 || self.dip_slope < 0.0 || !(0.0..1.0).contains(&self.dip_persist) {
            return Err(invalid_input!("dip parameters out of range"));
        }
        let min_cost = self.cost_base + self.cost_weights.iter().map(|w| w.min(0.0)).sum::<f64>();
        if !(min_cost > 0.0) {
            return Err(invalid_input!("per-iteration cost must be positive everywhere"));
        }
        Ok(())
    }

    fn distance(&self, x: &[f64]) -> f64 {
        libm::sqrt(x.iter().zip(&self.x_star).map(|(p, q)| (p - q) * (p - q)).sum())
    }

    pub fn asymptote(&self, x: &[f64]) -> f64 {
        let r = self.distance(x);
        (1.0 - self.a * r * r).clamp(0.0, 1.0)
    }

    pub fn timescale(&self, x: &[f64]) -> f64 {
        self.tau0 * (1.0 + self.b * self.distance(x))
    }

    pub fn dip_probability(&self, x: &[f64]) -> f64 {
        (self.dip_base + self.dip_slope * self.distance(x)).min(MAX_DIP_PROB)
    }

    pub fn per_iter_cost(&self, x: &[f64]) -> f64 {
        self.cost_base + self.cost_weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }

    /// Noise- and dip-free curve at unit-cube `x`.
    pub fn mean_curve(&self, x: &[f64], t: u32) -> Vec<f64> {
        let (amp, tau) = (self.asymptote(x), self.timescale(x));
        (1..=t).map(|u| amp * (1.0 - libm::exp(-f64::from(u) / tau))).collect()
    }

    /// Noise-free utility of `x` (unit cube) at full budget.
    pub fn utility(&self, x: &[f64], t_max: u32, pref: &PreferenceKind) -> f64 {
        let curve = self.mean_curve(x, t_max);
        compress_prefix(&curve, curve.len(), pref)
    }
}

/// The known optimum (raw units) and its noise-free utility at `T_max`.
pub fn true_best(spec: &SyntheticCurveSpec, space: &SearchSpace, pref: &PreferenceKind) -> Result<(Vec<f64>, f64)> {
    spec.validate()?;
    pref.validate()?;
    if spec.dim() != space.dim() {
        return Err(invalid_input!("spec has {} dimensions, space {}", spec.dim(), space.dim()));
    }
    Ok((space.from_unit(&spec.x_star), spec.utility(&spec.x_star, space.t_max, pref)))
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn unit_f64(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 0.5) / (1u64 << 53) as f64
}

/// [`SyntheticCurveSpec`] bound to a search space and a seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticObjective {
    pub spec: SyntheticCurveSpec,
    pub space: SearchSpace,
    pub seed: u64,
}

impl SyntheticObjective {
    pub fn new(spec: SyntheticCurveSpec, space: SearchSpace, seed: u64) -> Result<Self> {
        spec.validate()?;
        space.validate()?;
        if spec.dim() != space.dim() {
            return Err(invalid_input!("spec has {} dimensions, space {}", spec.dim(), space.dim()));
        }
        Ok(SyntheticObjective { spec, space, seed })
    }

    /// Stream keyed on the seed and the exact bits of `x`; iteration `u`
    /// reads its own block of words, so shorter runs are prefixes of longer ones.
    fn stream(&self, x: &[f64]) -> ChaCha8Rng {
        let mut h = splitmix(self.seed);
        for v in x {
            h = splitmix(h ^ v.to_bits());
        }
        ChaCha8Rng::seed_from_u64(h)
    }
}

impl Objective for SyntheticObjective {
    fn evaluate(&self, x: &[f64], t: u32) -> Result<LearningCurve> {
        if t < self.space.t_min || t > self.space.t_max {
            return Err(invalid_input!("budget {t} outside [{}, {}]", self.space.t_min, self.space.t_max));
        }
        let xu = self.space.to_unit(x)?;
        let spec = &self.spec;
        let (amp, tau) = (spec.asymptote(&xu), spec.timescale(&xu));
        let p_dip = spec.dip_probability(&xu);
        let step_cost = spec.per_iter_cost(&xu);
        let mut rng = self.stream(x);
        let mut scores = Vec::with_capacity(t as usize);
        let mut dip_left = 0u64;
        for u in 1..=t {
            rng.set_word_pos(u128::from(u) * WORDS_PER_ITER);
            let (w1, w2, w3, w4) = (rng.next_u64(), rng.next_u64(), rng.next_u64(), rng.next_u64());
            let noise = if spec.noise_sd > 0.0 {
                let r = libm::sqrt(-2.0 * libm::log(unit_f64(w1)));
                spec.noise_sd * r * libm::cos(core::f64::consts::TAU * unit_f64(w2))
            } else {
                0.0
            };
            if p_dip > 0.0 && unit_f64(w3) < p_dip {
                let len = if spec.dip_persist > 0.0 {
                    1 + (libm::log(unit_f64(w4)) / libm::log(spec.dip_persist)) as u64
                } else {
                    1
                };
                dip_left = dip_left.max(len);
            }
            let mut r = amp * (1.0 - libm::exp(-f64::from(u) / tau)) + noise;
            if dip_left > 0 {
                r -= 0.5 * amp;
                dip_left -= 1;
            }
            scores.push(r);
        }
        let cum_cost = (1..=t).map(|u| f64::from(u) * step_cost).collect();
        LearningCurve::new(x.to_vec(), scores, cum_cost)
    }
}

/// A named search space bound to a synthetic response surface.
#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub name: String,
    pub space: SearchSpace,
    pub spec: SyntheticCurveSpec,
}

impl Fixture {
    pub fn objective(&self, seed: u64) -> Result<SyntheticObjective> {
        SyntheticObjective::new(self.spec.clone(), self.space.clone(), seed)
    }
}

pub const FIXTURE_NAMES: [&str; 5] = ["synthetic-1d", "synthetic-3d", "cartpole", "reacher", "cnn"];

fn noisy(x_star: Vec<f64>, a: f64, tau0: f64, b: f64, cost_base: f64, cost_weights: Vec<f64>) -> SyntheticCurveSpec {
    SyntheticCurveSpec {
        noise_sd: 0.05,
        dip_base: 0.002,
        dip_slope: 0.03,
        cost_base,
        cost_weights,
        ..SyntheticCurveSpec::smooth(x_star, a, tau0, b)
    }
}

pub fn fixture(name: &str) -> Result<Fixture> {
    let (space, spec) = match name {
        "synthetic-1d" => (
            SearchSpace::new(alloc::vec![Dimension::linear("x", 0.0, 1.0)], 20, 200)?,
            noisy(alloc::vec![0.3], 4.0, 30.0, 3.0, 0.001, alloc::vec![0.0005]),
        ),
        "synthetic-3d" => (
            SearchSpace::new(
                alloc::vec![
                    Dimension::linear("x1", 0.0, 1.0),
                    Dimension::linear("x2", 0.0, 1.0),
                    Dimension::linear("x3", 0.0, 1.0),
                ],
                20,
                200,
            )?,
            noisy(alloc::vec![0.3, 0.6, 0.45], 2.0, 30.0, 3.0, 0.001, alloc::vec![0.0006, 0.0004, 0.0002]),
        ),
        "cartpole" => (
            SearchSpace::new(
                alloc::vec![Dimension::linear("gamma", 0.8, 1.0), Dimension::log("learning_rate", 1e-6, 1e-2)],
                300,
                800,
            )?,
            noisy(alloc::vec![0.9, 0.6], 2.0, 120.0, 2.0, 0.0004, alloc::vec![0.0, 0.0]),
        ),
        "reacher" => (
            SearchSpace::new(
                alloc::vec![
                    Dimension::linear("gamma", 0.8, 0.99),
                    Dimension::log("actor_learning_rate", 1e-6, 1e-2),
                    Dimension::log("critic_learning_rate", 1e-6, 1e-2),
                ],
                200,
                500,
            )?,
            noisy(alloc::vec![0.85, 0.5, 0.7], 1.5, 80.0, 2.0, 0.0006, alloc::vec![0.0, 0.0, 0.0]),
        ),
        "cnn" => (
            SearchSpace::new(
                alloc::vec![
                    Dimension::linear("filter_size", 1.0, 8.0),
                    Dimension::linear("pool_size", 1.0, 5.0),
                    Dimension::linear("batch_size", 16.0, 1000.0),
                    Dimension::log("learning_rate", 1e-6, 1e-2),
                    Dimension::linear("momentum", 0.8, 0.999),
                    Dimension::linear("learning_rate_decay", 0.9, 0.999),
                ],
                30,
                150,
            )?,
            noisy(
                alloc::vec![0.4, 0.3, 0.2, 0.7, 0.8, 0.9],
                1.0,
                25.0,
                2.0,
                0.002,
                alloc::vec![0.0008, 0.0004, -0.0006, 0.0, 0.0, 0.0],
            ),
        ),
        other => return Err(invalid_input!("unknown fixture {other:?}")),
    };
    spec.validate()?;
    Ok(Fixture { name: name.into(), space, spec })
}
