//! Learning the logistic preference `(m0, g0)` by maximizing the score GP's
//! log marginal likelihood, with every compressed score recomputed from its
//! source curve prefix.

use alloc::vec::Vec;

use nalgebra::DVector;

use crate::compression::{compress_grad_prefix, compress_prefix, per_iteration, LearningCurve, LogisticTransform, PreferenceKind};
use crate::error::{invalid_input, Result};
use crate::gp::{factorize, KernelParams};
use crate::space::JointInput;

const LN_2PI: f64 = 1.837_877_066_409_345_3;
const MAX_STEPS: usize = 100;
const TOLERANCE: f64 = 1e-8;

/// Where one GP observation's score comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScoreSource {
    /// Compression of `curves[curve][..len]`.
    Prefix { curve: usize, len: usize },
    /// A value that does not depend on the transform (failed evaluations).
    Fixed(f64),
}

/// GP observations traced back to the curves that produced them.
#[derive(Debug, Clone, Copy)]
pub struct CurveObservations<'a> {
    pub curves: &'a [LearningCurve],
    pub inputs: &'a [JointInput],
    pub sources: &'a [ScoreSource],
}

impl CurveObservations<'_> {
    fn validate(&self) -> Result<()> {
        if self.inputs.len() != self.sources.len() || self.inputs.is_empty() {
            return Err(invalid_input!("need one score source per input, and at least one"));
        }
        for s in self.sources {
            if let ScoreSource::Prefix { curve, len } = *s {
                let c = self
                    .curves
                    .get(curve)
                    .ok_or_else(|| invalid_input!("score source references missing curve {curve}"))?;
                if len == 0 || len > c.t() {
                    return Err(invalid_input!("prefix {len} outside curve of length {}", c.t()));
                }
            }
        }
        Ok(())
    }

    /// Compressed scores under a given preference.
    pub fn scores(&self, pref: &PreferenceKind) -> Vec<f64> {
        self.sources
            .iter()
            .map(|s| match *s {
                ScoreSource::Prefix { curve, len } => compress_prefix(&self.curves[curve].scores, len, pref),
                ScoreSource::Fixed(v) => v,
            })
            .collect()
    }

    /// What the score GP sees: compressed scores in per-iteration form.
    /// `Fixed` values are taken to be on that scale already.
    pub fn targets(&self, pref: &PreferenceKind) -> Vec<f64> {
        self.sources
            .iter()
            .map(|s| match *s {
                ScoreSource::Prefix { curve, len } => {
                    per_iteration(compress_prefix(&self.curves[curve].scores, len, pref), len, pref)
                }
                ScoreSource::Fixed(v) => v,
            })
            .collect()
    }
}

/// Box for `(m0, g0)`: `m0` in `[t_min, t_max]`, `g0` in `[g0_min, g0_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformBounds {
    pub t_min: f64,
    pub t_max: f64,
    pub g0_min: f64,
    pub g0_max: f64,
}

impl TransformBounds {
    pub fn for_range(t_min: u32, t_max: u32) -> Self {
        let (lo, hi) = (f64::from(t_min), f64::from(t_max));
        let span = hi - lo;
        TransformBounds { t_min: lo, t_max: hi, g0_min: 0.1 / span, g0_max: 20.0 / span }
    }

    pub fn clamp(&self, tr: LogisticTransform) -> LogisticTransform {
        LogisticTransform {
            m0: tr.m0.clamp(self.t_min, self.t_max),
            g0: tr.g0.clamp(self.g0_min, self.g0_max),
        }
    }

    fn pack(&self, tr: &LogisticTransform) -> [f64; 2] {
        let frac = ((tr.m0 - self.t_min) / (self.t_max - self.t_min)).clamp(1e-9, 1.0 - 1e-9);
        [libm::log(frac / (1.0 - frac)), libm::log(tr.g0.clamp(self.g0_min, self.g0_max))]
    }

    fn unpack(&self, v: &[f64; 2]) -> (LogisticTransform, [f64; 2]) {
        let s = 1.0 / (1.0 + libm::exp(-v[0]));
        let span = self.t_max - self.t_min;
        let g0 = libm::exp(v[1].clamp(libm::log(self.g0_min), libm::log(self.g0_max)));
        // d m0 / d a, d g0 / d b
        (LogisticTransform { m0: self.t_min + span * s, g0 }, [span * s * (1.0 - s), g0])
    }
}

/// Log marginal likelihood of the standardized per-iteration scores as a
/// function of `(m0, g0)` with the kernel fixed, and its two partial
/// derivatives `(L, dL/dm0, dL/dg0)`. The hyperprior is omitted because it
/// does not depend on the transform.
pub fn transform_lml(
    obs: &CurveObservations<'_>,
    params: &KernelParams,
    tr: &LogisticTransform,
) -> Result<(f64, f64, f64)> {
    obs.validate()?;
    let (chol, _) = factorize(obs.inputs, params)?;
    Ok(transform_lml_with(obs, &chol, tr))
}

fn transform_lml_with(
    obs: &CurveObservations<'_>,
    chol: &nalgebra::Cholesky<f64, nalgebra::Dyn>,
    tr: &LogisticTransform,
) -> (f64, f64, f64) {
    let n = obs.inputs.len();
    let nf = n as f64;
    let raw = obs.targets(&PreferenceKind::Sigmoid(*tr));
    let mean = raw.iter().sum::<f64>() / nf;
    let var = raw.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / nf;
    let sd = libm::sqrt(var);
    let constant = !(sd > 1e-12 * (1.0 + mean.abs()));
    let sd = if constant { 1.0 } else { sd };
    let ys = DVector::from_iterator(n, raw.iter().map(|y| (y - mean) / sd));
    let w = chol.solve(&ys);
    let log_det: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|d| libm::log(*d)).sum::<f64>();
    let value = -0.5 * ys.dot(&w) - 0.5 * log_det - 0.5 * nf * LN_2PI;
    if constant {
        return (value, 0.0, 0.0);
    }

    // dL/dys = -w; chain through the standardization to the raw scores.
    let g: Vec<f64> = w.iter().map(|v| -v).collect();
    let g_mean = g.iter().sum::<f64>() / nf;
    let g_dot_ys: f64 = g.iter().zip(ys.iter()).map(|(a, b)| a * b).sum();
    let mut dm = 0.0;
    let mut dg = 0.0;
    for (i, src) in obs.sources.iter().enumerate() {
        if let ScoreSource::Prefix { curve, len } = *src {
            let dl_draw = (g[i] - g_mean) / sd - g_dot_ys * ys[i] / (nf * sd);
            let (cm, cg) = compress_grad_prefix(&obs.curves[curve].scores, len, tr);
            dm += dl_draw * cm / len as f64;
            dg += dl_draw * cg / len as f64;
        }
    }
    (value, dm, dg)
}

/// Gradient ascent on `(m0, g0)` with the kernel fixed. Returns `start`
/// whenever the likelihood cannot be evaluated or would not improve.
pub fn fit_transform(
    obs: &CurveObservations<'_>,
    params: &KernelParams,
    start: &LogisticTransform,
    bounds: &TransformBounds,
) -> LogisticTransform {
    if obs.validate().is_err() {
        return *start;
    }
    let Ok((chol, _)) = factorize(obs.inputs, params) else {
        return *start;
    };
    let eval = |v: &[f64; 2]| {
        let (tr, jac) = bounds.unpack(v);
        let (l, dm, dg) = transform_lml_with(obs, &chol, &tr);
        (tr, l, [dm * jac[0], dg * jac[1]])
    };

    let (start_value, _, _) = transform_lml_with(obs, &chol, start);
    let mut v = bounds.pack(start);
    let (mut tr, mut value, mut grad) = eval(&v);
    let mut step = 0.5;
    for _ in 0..MAX_STEPS {
        let gnorm = libm::hypot(grad[0], grad[1]);
        if !(gnorm > 1e-12) || !value.is_finite() {
            break;
        }
        let mut accepted = None;
        let mut s = step;
        for _ in 0..40 {
            let cand = [v[0] + s * grad[0] / gnorm, v[1] + s * grad[1] / gnorm];
            let (ctr, cv, cg) = eval(&cand);
            if cv.is_finite() && cv > value {
                accepted = Some((cand, ctr, cv, cg));
                break;
            }
            s *= 0.5;
        }
        let Some((cand, ctr, cv, cg)) = accepted else { break };
        let improvement = cv - value;
        v = cand;
        tr = ctr;
        value = cv;
        grad = cg;
        step = (2.0 * s).min(2.0);
        if improvement < TOLERANCE {
            break;
        }
    }
    if value >= start_value {
        tr
    } else {
        *start
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    struct Family {
        curves: Vec<LearningCurve>,
        inputs: Vec<JointInput>,
        sources: Vec<ScoreSource>,
    }

    impl Family {
        fn obs(&self) -> CurveObservations<'_> {
            CurveObservations { curves: &self.curves, inputs: &self.inputs, sources: &self.sources }
        }
    }

    /// Curves over `[10, 110]`: the first 60 iterations are pure noise; after
    /// that the score depends smoothly on x.
    fn late_separating_family(seed: u64) -> Family {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = Family { curves: vec![], inputs: vec![], sources: vec![] };
        for i in 0..16 {
            let x = i as f64 / 15.0;
            let t = 110;
            let scores: Vec<f64> = (1..=t)
                .map(|u| if u <= 60 { rng.random_range(-3.0..3.0) } else { 1.0 - (x - 0.3) * (x - 0.3) * 4.0 })
                .collect();
            let cost = (1..=t).map(|u| u as f64).collect();
            f.curves.push(LearningCurve::new(vec![x], scores, cost).unwrap());
            f.inputs.push(JointInput::new(vec![x], 1.0).unwrap());
            f.sources.push(ScoreSource::Prefix { curve: i, len: t });
        }
        f
    }

    fn random_family(seed: u64) -> Family {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = Family { curves: vec![], inputs: vec![], sources: vec![] };
        for i in 0..5 {
            let x = rng.random_range(0.0..1.0);
            let t = rng.random_range(20..60);
            let scores: Vec<f64> = (1..=t).map(|u| (u as f64 / 20.0).tanh() * (1.0 + x) + rng.random_range(-0.2..0.2)).collect();
            let cost = (1..=t).map(|u| u as f64).collect();
            f.curves.push(LearningCurve::new(vec![x], scores, cost).unwrap());
            f.inputs.push(JointInput::new(vec![x], (t - 10) as f64 / 50.0).unwrap());
            f.sources.push(ScoreSource::Prefix { curve: i, len: t });
            let len = rng.random_range(10..t);
            f.inputs.push(JointInput::new(vec![x], (len - 10) as f64 / 50.0).unwrap());
            f.sources.push(ScoreSource::Prefix { curve: i, len });
        }
        f
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let params = KernelParams::se(0.4, 0.3, 0.05);
        for seed in 0..20 {
            let fam = random_family(seed);
            let tr = LogisticTransform { m0: 25.0 + seed as f64, g0: 0.1 + 0.01 * seed as f64 };
            let (_, dm, dg) = transform_lml(&fam.obs(), &params, &tr).unwrap();
            let l = |m0: f64, g0: f64| transform_lml(&fam.obs(), &params, &LogisticTransform { m0, g0 }).unwrap().0;
            let hm = 1e-4;
            let hg = 1e-6;
            let fdm = (l(tr.m0 + hm, tr.g0) - l(tr.m0 - hm, tr.g0)) / (2.0 * hm);
            let fdg = (l(tr.m0, tr.g0 + hg) - l(tr.m0, tr.g0 - hg)) / (2.0 * hg);
            assert!((dm - fdm).abs() / fdm.abs().max(1e-6) <= 1e-4, "m0: {dm} vs {fdm}");
            assert!((dg - fdg).abs() / fdg.abs().max(1e-6) <= 1e-4, "g0: {dg} vs {fdg}");
        }
    }

    #[test]
    fn identical_curves_leave_transform_in_bounds() {
        let scores: Vec<f64> = (1..=50).map(|u| u as f64 / 50.0).collect();
        let cost: Vec<f64> = (1..=50).map(|u| u as f64).collect();
        let curves = vec![LearningCurve::new(vec![0.5], scores, cost).unwrap(); 4];
        let inputs: Vec<JointInput> = (0..4).map(|i| JointInput::new(vec![i as f64 / 4.0], 1.0).unwrap()).collect();
        let sources: Vec<ScoreSource> = (0..4).map(|i| ScoreSource::Prefix { curve: i, len: 50 }).collect();
        let obs = CurveObservations { curves: &curves, inputs: &inputs, sources: &sources };
        let bounds = TransformBounds::for_range(10, 50);
        let start = LogisticTransform::initial(10, 50);
        let got = fit_transform(&obs, &KernelParams::default(), &start, &bounds);
        assert_eq!(got, start);
    }

    #[test]
    fn late_separation_moves_midpoint_late() {
        let fam = late_separating_family(17);
        let params = KernelParams::se(0.3, 0.3, 0.05);
        let bounds = TransformBounds::for_range(10, 110);
        let start = LogisticTransform::initial(10, 110);
        let threshold = 10.0 + 0.25 * 100.0;

        // Grid oracle over the admissible box.
        let mut best = (f64::NEG_INFINITY, start);
        for i in 0..=50 {
            for j in 0..=30 {
                let m0 = 10.0 + 100.0 * i as f64 / 50.0;
                let g0 = libm::exp(libm::log(bounds.g0_min) + (libm::log(bounds.g0_max) - libm::log(bounds.g0_min)) * j as f64 / 30.0);
                let tr = LogisticTransform { m0, g0 };
                let l = transform_lml(&fam.obs(), &params, &tr).unwrap().0;
                if l > best.0 {
                    best = (l, tr);
                }
            }
        }
        assert!(best.1.m0 > threshold, "grid optimum m0 = {}", best.1.m0);

        let fitted = fit_transform(&fam.obs(), &params, &start, &bounds);
        assert!(fitted.m0 > threshold, "fitted m0 = {}", fitted.m0);
        let l_start = transform_lml(&fam.obs(), &params, &start).unwrap().0;
        let l_fit = transform_lml(&fam.obs(), &params, &fitted).unwrap().0;
        assert!(l_fit >= l_start - 1e-9);
    }

    #[test]
    fn never_decreases_likelihood() {
        let params = KernelParams::se(0.4, 0.3, 0.05);
        let bounds = TransformBounds::for_range(10, 60);
        for seed in 0..10 {
            let fam = random_family(100 + seed);
            let start = LogisticTransform { m0: 12.0 + 4.0 * seed as f64, g0: 0.05 };
            let fitted = fit_transform(&fam.obs(), &params, &start, &bounds);
            let l0 = transform_lml(&fam.obs(), &params, &start).unwrap().0;
            let l1 = transform_lml(&fam.obs(), &params, &fitted).unwrap().0;
            assert!(l1 >= l0 - 1e-9);
            assert!(fitted.m0 >= 10.0 && fitted.m0 <= 60.0);
        }
    }
}
