//! Learning curves and their compression into a scalar utility.
//!
//! The sigmoid preference weights iteration `u` of a curve by
//! `l(u) = 1 / (1 + exp(-g0 (u - m0)))`, so early fluctuations get little
//! credit and sustained late performance gets close to full credit.

use alloc::vec::Vec;

use crate::error::{invalid_input, Result};

/// Per-iteration scores of one training run, with cumulative cost.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LearningCurve {
    /// Hyperparameters (raw units) that produced the curve.
    pub x: Vec<f64>,
    pub scores: Vec<f64>,
    pub cum_cost: Vec<f64>,
}

impl LearningCurve {
    pub fn new(x: Vec<f64>, scores: Vec<f64>, cum_cost: Vec<f64>) -> Result<Self> {
        let curve = LearningCurve { x, scores, cum_cost };
        curve.validate()?;
        Ok(curve)
    }

    pub fn validate(&self) -> Result<()> {
        if self.scores.is_empty() {
            return Err(invalid_input!("learning curve is empty"));
        }
        if self.scores.len() != self.cum_cost.len() {
            return Err(invalid_input!(
                "{} scores but {} cost entries",
                self.scores.len(),
                self.cum_cost.len()
            ));
        }
        if self.scores.iter().chain(&self.cum_cost).any(|v| !v.is_finite()) {
            return Err(invalid_input!("learning curve contains non-finite values"));
        }
        if self.cum_cost.windows(2).any(|w| w[1] < w[0]) {
            return Err(invalid_input!("cumulative cost must be non-decreasing"));
        }
        Ok(())
    }

    /// Length in iterations.
    pub fn t(&self) -> usize {
        self.scores.len()
    }

    pub fn final_cost(&self) -> f64 {
        self.cum_cost.last().copied().unwrap_or(0.0)
    }

    /// The curve truncated to its first `len` iterations.
    pub fn prefix(&self, len: usize) -> Result<LearningCurve> {
        if len == 0 || len > self.t() {
            return Err(invalid_input!("prefix length {len} outside 1..={}", self.t()));
        }
        Ok(LearningCurve {
            x: self.x.clone(),
            scores: self.scores[..len].to_vec(),
            cum_cost: self.cum_cost[..len].to_vec(),
        })
    }
}

/// Midpoint `m0` (iterations) and growth rate `g0` (1/iterations) of the
/// logistic preference.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LogisticTransform {
    pub m0: f64,
    pub g0: f64,
}

impl LogisticTransform {
    /// Mid-range midpoint with a moderate slope.
    pub fn initial(t_min: u32, t_max: u32) -> Self {
        let (lo, hi) = (f64::from(t_min), f64::from(t_max));
        LogisticTransform { m0: 0.5 * (lo + hi), g0: 10.0 / (hi - lo) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
pub enum PreferenceKind {
    Sigmoid(LogisticTransform),
    /// Weights `ln(1+u) / ln(1+t)` over a curve of length `t`.
    Log,
    /// Mean of the last `window` scores.
    Average { window: usize },
}

impl PreferenceKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PreferenceKind::Average { window: 0 } => {
                Err(invalid_input!("average window must be at least 1"))
            }
            PreferenceKind::Sigmoid(tr) if !(tr.g0 > 0.0 && tr.m0.is_finite()) => {
                Err(invalid_input!("logistic transform needs g0 > 0 and finite m0"))
            }
            _ => Ok(()),
        }
    }
}

/// `1 / (1 + exp(-g0 (u - m0)))`.
pub fn logistic_weight(u: f64, tr: &LogisticTransform) -> f64 {
    1.0 / (1.0 + libm::exp(-tr.g0 * (u - tr.m0)))
}

/// Compress a whole curve into one utility value.
pub fn compress(curve: &LearningCurve, pref: &PreferenceKind) -> Result<f64> {
    curve.validate()?;
    pref.validate()?;
    Ok(compress_prefix(&curve.scores, curve.t(), pref))
}

/// Per-iteration form of a compressed score `y` of a `len`-long prefix: the
/// weighted sums are divided by `len`, the average passes through. Without
/// this, scores of short prefixes sit near zero for every `x` and the score
/// GP reads the curve length as the dominant signal.
pub fn per_iteration(y: f64, len: usize, pref: &PreferenceKind) -> f64 {
    match pref {
        PreferenceKind::Sigmoid(_) | PreferenceKind::Log => y / len.max(1) as f64,
        PreferenceKind::Average { .. } => y,
    }
}

/// Compression of `scores[..len]`; `len` must be in `1..=scores.len()`.
pub(crate) fn compress_prefix(scores: &[f64], len: usize, pref: &PreferenceKind) -> f64 {
    let scores = &scores[..len];
    match *pref {
        PreferenceKind::Sigmoid(tr) => scores
            .iter()
            .enumerate()
            .map(|(i, r)| r * logistic_weight((i + 1) as f64, &tr))
            .sum(),
        PreferenceKind::Log => {
            let norm = libm::log1p(len as f64);
            scores
                .iter()
                .enumerate()
                .map(|(i, r)| r * libm::log1p((i + 1) as f64) / norm)
                .sum()
        }
        PreferenceKind::Average { window } => {
            let w = window.min(len);
            scores[len - w..].iter().sum::<f64>() / w as f64
        }
    }
}

/// `(d y / d m0, d y / d g0)` of the sigmoid compression.
pub fn compress_grad(curve: &LearningCurve, tr: &LogisticTransform) -> (f64, f64) {
    compress_grad_prefix(&curve.scores, curve.t(), tr)
}

pub(crate) fn compress_grad_prefix(scores: &[f64], len: usize, tr: &LogisticTransform) -> (f64, f64) {
    let mut dm = 0.0;
    let mut dg = 0.0;
    for (i, r) in scores[..len].iter().enumerate() {
        let u = (i + 1) as f64;
        let l = logistic_weight(u, tr);
        // exp(-g0(u-m0)) / (1 + exp(-g0(u-m0)))^2 == l (1 - l)
        let s = l * (1.0 - l);
        dm += r * (-tr.g0) * s;
        dg += r * (u - tr.m0) * s;
    }
    (dm, dg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn curve(scores: &[f64]) -> LearningCurve {
        let cost = (1..=scores.len()).map(|u| u as f64).collect();
        LearningCurve::new(vec![0.5], scores.to_vec(), cost).unwrap()
    }

    #[test]
    fn logistic_examples() {
        let tr = LogisticTransform { m0: 200.0, g0: 0.05 };
        assert_eq!(logistic_weight(200.0, &tr), 0.5);
        let w = logistic_weight(300.0, &tr);
        assert!((w - 1.0 / (1.0 + libm::exp(-5.0))).abs() < 1e-15);
        assert!((w - 0.99331).abs() < 1e-5);
        let flat = LogisticTransform { m0: 10.0, g0: 1e-14 };
        assert!((logistic_weight(1.0, &flat) - 0.5).abs() < 1e-12);
        assert!((logistic_weight(1e4, &flat) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn compress_examples() {
        let flat = PreferenceKind::Sigmoid(LogisticTransform { m0: 2.0, g0: 1e-14 });
        assert!((compress(&curve(&[1.0, 1.0, 1.0]), &flat).unwrap() - 1.5).abs() < 1e-12);
        let avg = PreferenceKind::Average { window: 2 };
        assert_eq!(compress(&curve(&[0.0, 10.0, 20.0]), &avg).unwrap(), 15.0);
        let long_window = PreferenceKind::Average { window: 10 };
        assert_eq!(compress(&curve(&[0.0, 10.0, 20.0]), &long_window).unwrap(), 10.0);
        let log = PreferenceKind::Log;
        let expected = (2f64.ln() + 3f64.ln()) / 3f64.ln();
        assert!((compress(&curve(&[1.0, 1.0]), &log).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn invalid_inputs() {
        assert!(LearningCurve::new(vec![], vec![], vec![]).is_err());
        assert!(LearningCurve::new(vec![], vec![1.0, 2.0], vec![2.0, 1.0]).is_err());
        assert!(LearningCurve::new(vec![], vec![1.0], vec![1.0, 2.0]).is_err());
        let bad = PreferenceKind::Average { window: 0 };
        assert!(compress(&curve(&[1.0]), &bad).is_err());
        assert!(curve(&[1.0, 2.0]).prefix(3).is_err());
    }

    #[test]
    fn matches_naive_loop() {
        let scores: Vec<f64> = (0..137).map(|i| ((i * 7919) % 101) as f64 / 50.0 - 1.0).collect();
        let tr = LogisticTransform { m0: 61.3, g0: 0.083 };
        let c = curve(&scores);
        let mut naive = 0.0;
        for u in 1..=scores.len() {
            naive += scores[u - 1] / (1.0 + (-(tr.g0) * (u as f64 - tr.m0)).exp());
        }
        let got = compress(&c, &PreferenceKind::Sigmoid(tr)).unwrap();
        assert!((got - naive).abs() <= 1e-12 * naive.abs().max(1.0));
    }

    #[test]
    fn gradient_limits() {
        // Flat logistic: d/dm0 -> -g0 * sum(r) / 4.
        let tr = LogisticTransform { m0: 5.0, g0: 1e-9 };
        let (dm, _) = compress_grad(&curve(&[1.0; 9]), &tr);
        assert!((dm - (-1e-9 * 9.0 / 4.0)).abs() < 1e-15);
        // Symmetric unit curve around m0: d/dg0 vanishes.
        let tr = LogisticTransform { m0: 6.0, g0: 0.7 };
        let (_, dg) = compress_grad(&curve(&[1.0; 11]), &tr);
        assert!(dg.abs() < 1e-12);
    }

    fn fd_check(scores: &[f64], tr: LogisticTransform) -> (f64, f64) {
        let c = curve(scores);
        let (dm, dg) = compress_grad(&c, &tr);
        let f = |m0: f64, g0: f64| compress(&c, &PreferenceKind::Sigmoid(LogisticTransform { m0, g0 })).unwrap();
        // Five-point stencils keep truncation error well below the tolerance.
        let five = |g: &dyn Fn(f64) -> f64, h: f64| {
            (-g(2.0 * h) + 8.0 * g(h) - 8.0 * g(-h) + g(-2.0 * h)) / (12.0 * h)
        };
        let fdm = five(&|d| f(tr.m0 + d, tr.g0), 1e-3 * (1.0 + tr.m0.abs()));
        let fdg = five(&|d| f(tr.m0, tr.g0 + d), 1e-3 * tr.g0);
        // Relative to the summed term magnitudes: mixed-sign curves can cancel
        // the derivative down to rounding level.
        let abs_curve = curve(&scores.iter().map(|r| r.abs()).collect::<Vec<_>>());
        let (sm, _) = compress_grad(&abs_curve, &tr);
        let sg: f64 = scores
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let u = (i + 1) as f64;
                let l = logistic_weight(u, &tr);
                (r * (u - tr.m0) * l * (1.0 - l)).abs()
            })
            .sum();
        let rel = |a: f64, b: f64, scale: f64| (a - b).abs() / b.abs().max(scale.abs()).max(1e-300);
        (rel(dm, fdm, sm), rel(dg, fdg, sg))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]

        #[test]
        fn gradient_matches_finite_differences(
            scores in prop::collection::vec(-2.0..2.0f64, 5..120),
            m0 in 1.0..100.0f64,
            g0 in 0.01..0.5f64,
        ) {
            let (em, eg) = fd_check(&scores, LogisticTransform { m0, g0 });
            prop_assert!(em <= 1e-6, "m0 rel err {}", em);
            prop_assert!(eg <= 1e-6, "g0 rel err {}", eg);
        }

        #[test]
        fn weights_increase_and_saturate(u in 1.0..500.0f64, du in 0.5..50.0f64, m0 in 1.0..400.0f64, g0 in 0.001..0.5f64) {
            let tr = LogisticTransform { m0, g0 };
            let (a, b) = (logistic_weight(u, &tr), logistic_weight(u + du, &tr));
            prop_assert!(a > 0.0 && b <= 1.0);
            prop_assert!(b >= a);
        }

        #[test]
        fn dominating_curves_compress_higher(
            base in prop::collection::vec(-1.0..1.0f64, 1..60),
            lift in prop::collection::vec(0.0..1.0f64, 60),
            m0 in 1.0..60.0f64, g0 in 0.01..1.0f64,
        ) {
            let upper: Vec<f64> = base.iter().zip(&lift).map(|(b, l)| b + l).collect();
            for pref in [PreferenceKind::Sigmoid(LogisticTransform { m0, g0 }), PreferenceKind::Log, PreferenceKind::Average { window: 5 }] {
                let lo = compress(&curve(&base), &pref).unwrap();
                let hi = compress(&curve(&upper), &pref).unwrap();
                prop_assert!(hi >= lo - 1e-12);
            }
        }

        #[test]
        fn appending_nonnegative_scores_never_hurts(
            base in prop::collection::vec(-1.0..1.0f64, 1..60),
            extra in 0.0..2.0f64, m0 in 1.0..60.0f64, g0 in 0.01..1.0f64,
        ) {
            let pref = PreferenceKind::Sigmoid(LogisticTransform { m0, g0 });
            let mut longer = base.clone();
            longer.push(extra);
            prop_assert!(compress(&curve(&longer), &pref).unwrap() >= compress(&curve(&base), &pref).unwrap());
        }
    }
}
