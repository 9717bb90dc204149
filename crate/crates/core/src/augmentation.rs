//! Intermediate points of a finished learning curve, added to the GP as
//! extra observations while the covariance stays well conditioned.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::compression::{compress_prefix, LearningCurve, PreferenceKind};
use crate::error::{invalid_input, BoilError, Result};
use crate::gp::{cross_cov, kernel_unchecked, GpModel, KernelParams};
use crate::space::{JointInput, SearchSpace};

pub const DEFAULT_MAX_POINTS: usize = 15;
pub const DEFAULT_DELTA: f64 = 20.0;
/// Diagonal used by the conditioning gate when the fitted noise is larger.
pub const DEFAULT_GATE_NUGGET: f64 = 1e-10;
const MAX_CANDIDATES: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AugmentOptions {
    pub max_points: usize,
    pub delta: f64,
    /// The gate measures `ln cond(K + min(noise_var, gate_nugget) I)`.
    pub gate_nugget: f64,
}

impl Default for AugmentOptions {
    fn default() -> Self {
        AugmentOptions {
            max_points: DEFAULT_MAX_POINTS,
            delta: DEFAULT_DELTA,
            gate_nugget: DEFAULT_GATE_NUGGET,
        }
    }
}

impl AugmentOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta >= 0.0) || !self.delta.is_finite() {
            return Err(invalid_input!("delta must be finite and non-negative, got {}", self.delta));
        }
        if !(self.gate_nugget > 0.0) {
            return Err(invalid_input!("gate nugget must be positive"));
        }
        Ok(())
    }

    fn nugget(&self, params: &KernelParams) -> f64 {
        params.noise_var.min(self.gate_nugget)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedPoint {
    /// Iteration count of the prefix, raw units.
    pub t: u32,
    pub z: JointInput,
    pub y: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedBatch {
    pub points: Vec<AugmentedPoint>,
    pub source_eval_id: usize,
    /// `ln cond(K + noise_var I)` of the model data plus the batch.
    pub log_cond_model: f64,
    /// The gated quantity after the batch.
    pub log_cond_gate: f64,
}

impl AugmentedBatch {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn candidate_grid(t_min: u32, t: u32) -> Vec<u32> {
    if t < t_min {
        return Vec::new();
    }
    let span = t - t_min;
    if (span as usize) < MAX_CANDIDATES {
        return (t_min..=t).collect();
    }
    let mut out: Vec<u32> = (0..MAX_CANDIDATES)
        .map(|i| {
            let f = i as f64 / (MAX_CANDIDATES - 1) as f64;
            t_min + libm::round(f * f64::from(span)) as u32
        })
        .collect();
    out.dedup();
    out
}

fn same_x(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(p, q)| (p - q).abs() <= 1e-12)
}

/// Log condition numbers of `K + nugget I` for each nugget, from one
/// eigendecomposition of `K`.
fn log_conds(k: &DMatrix<f64>, nuggets: &[f64]) -> Vec<f64> {
    if k.nrows() == 0 {
        return nuggets.iter().map(|_| 0.0).collect();
    }
    let eig = k.clone().symmetric_eigenvalues();
    let lo = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    nuggets
        .iter()
        .map(|&s| {
            let (a, b) = (hi + s, lo + s);
            if b > 0.0 && a.is_finite() {
                libm::log(a / b)
            } else {
                f64::INFINITY
            }
        })
        .collect()
}

fn extend_gram(k: &DMatrix<f64>, inputs: &[JointInput], z: &JointInput, p: &KernelParams) -> DMatrix<f64> {
    let n = k.nrows();
    let col = cross_cov(inputs, z, p);
    let mut out = k.clone().insert_row(n, 0.0).insert_column(n, 0.0);
    for (i, c) in col.iter().enumerate() {
        out[(i, n)] = *c;
        out[(n, i)] = *c;
    }
    out[(n, n)] = kernel_unchecked(z, z, p);
    out
}

/// Posterior covariance among candidates, updated as candidates are
/// conditioned on one by one.
struct CandidateCovariance {
    prior: DMatrix<f64>,
    v: DMatrix<f64>,
    updates: Vec<DVector<f64>>,
    var: Vec<f64>,
}

impl CandidateCovariance {
    fn new(model: &GpModel, cands: &[JointInput]) -> Result<Self> {
        let p = model.params();
        let c = cands.len();
        let prior = DMatrix::from_fn(c, c, |i, j| kernel_unchecked(&cands[i], &cands[j], p));
        let inputs = model.dataset().inputs();
        let v = match model.cholesky() {
            Some(chol) => {
                let kstar = DMatrix::from_fn(inputs.len(), c, |i, j| kernel_unchecked(&inputs[i], &cands[j], p));
                chol.l_dirty()
                    .solve_lower_triangular(&kstar)
                    .ok_or_else(|| BoilError::Numerical("singular triangular factor".into()))?
            }
            None => DMatrix::zeros(0, c),
        };
        let var = (0..c)
            .map(|j| prior[(j, j)] - v.column(j).norm_squared())
            .collect();
        Ok(CandidateCovariance { prior, v, updates: Vec::new(), var })
    }

    fn column(&self, j: usize) -> DVector<f64> {
        let mut col: DVector<f64> = self.prior.column(j) - self.v.tr_mul(&self.v.column(j));
        for u in &self.updates {
            col.axpy(-u[j], u, 1.0);
        }
        col
    }

    /// Condition on a noisy observation at candidate `j`.
    fn observe(&mut self, j: usize, noise: f64) {
        let col = self.column(j);
        let denom = libm::sqrt(col[j].max(0.0) + noise);
        let u = col / denom;
        for (v, ui) in self.var.iter_mut().zip(u.iter()) {
            *v -= ui * ui;
        }
        self.updates.push(u);
    }
}

/// Index of the largest value; near-ties go to the entry closest to the
/// middle of the list, then to the earlier entry.
fn argmax_mid_tie(values: &[f64], allowed: &[bool]) -> Option<usize> {
    let top = values
        .iter()
        .zip(allowed)
        .filter(|(_, a)| **a)
        .map(|(v, _)| *v)
        .fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return None;
    }
    let tol = 1e-12 * top.abs().max(1e-300);
    let mid = (values.len() - 1) as f64 / 2.0;
    (0..values.len())
        .filter(|&i| allowed[i] && values[i] >= top - tol)
        .min_by(|&a, &b| (a as f64 - mid).abs().total_cmp(&(b as f64 - mid).abs()).then(a.cmp(&b)))
}

/// Greedily pick prefixes of `curve` where the model is most uncertain,
/// stopping at `max_points` or at the first candidate that would push the
/// gated log condition number above `delta`.
pub fn select_augmented(
    curve: &LearningCurve,
    model: &GpModel,
    space: &SearchSpace,
    pref: &PreferenceKind,
    opts: &AugmentOptions,
    source_eval_id: usize,
) -> Result<AugmentedBatch> {
    curve.validate()?;
    pref.validate()?;
    opts.validate()?;
    let t = u32::try_from(curve.t()).map_err(|_| invalid_input!("curve too long"))?;
    if t < space.t_min || t > space.t_max {
        return Err(invalid_input!("curve length {t} outside [{}, {}]", space.t_min, space.t_max));
    }
    let x = space.to_unit(&curve.x)?;
    let params = model.params();
    let nugget = opts.nugget(params);
    let noise = params.noise_var + model.jitter();
    let inputs = model.dataset().inputs();

    let grid = candidate_grid(space.t_min, t);
    let cands: Vec<JointInput> = grid
        .iter()
        .map(|&tc| JointInput { x: x.clone(), t: space.t_to_unit(f64::from(tc)) })
        .collect();
    let unit_iter = 1.0 / space.t_span();
    let mut taken: Vec<f64> = inputs.iter().filter(|z| same_x(&z.x, &x)).map(|z| z.t).collect();
    let mut allowed: Vec<bool> = cands.iter().map(|c| taken.iter().all(|s| (c.t - s).abs() >= unit_iter * (1.0 - 1e-9))).collect();

    let mut gram = crate::gp::gram_unchecked(inputs, params);
    let mut all_inputs: Vec<JointInput> = inputs.to_vec();
    let mut cov = CandidateCovariance::new(model, &cands)?;
    let mut points = Vec::new();
    let mut conds = log_conds(&gram, &[noise, nugget]);

    while points.len() < opts.max_points {
        let Some(j) = argmax_mid_tie(&cov.var, &allowed) else {
            break;
        };
        let trial = extend_gram(&gram, &all_inputs, &cands[j], params);
        let trial_conds = log_conds(&trial, &[noise, nugget]);
        if !(trial_conds[1] <= opts.delta) {
            break;
        }
        gram = trial;
        conds = trial_conds;
        all_inputs.push(cands[j].clone());
        cov.observe(j, noise);
        taken.push(cands[j].t);
        for (i, c) in cands.iter().enumerate() {
            if (c.t - cands[j].t).abs() < unit_iter * (1.0 - 1e-9) {
                allowed[i] = false;
            }
        }
        let len = grid[j] as usize;
        points.push(AugmentedPoint {
            t: grid[j],
            z: cands[j].clone(),
            y: compress_prefix(&curve.scores, len, pref),
            cost: curve.cum_cost[len - 1],
        });
    }
    Ok(AugmentedBatch {
        points,
        source_eval_id,
        log_cond_model: conds[0],
        log_cond_gate: conds[1],
    })
}

/// Gated log condition number if every prefix `T_min..=t` of the curve were
/// added (no greedy selection, no threshold).
pub fn full_curve_log_condition(
    curve: &LearningCurve,
    model: &GpModel,
    space: &SearchSpace,
    opts: &AugmentOptions,
) -> Result<f64> {
    let x = space.to_unit(&curve.x)?;
    let t = u32::try_from(curve.t()).map_err(|_| invalid_input!("curve too long"))?;
    let params = model.params();
    let mut inputs = model.dataset().inputs().to_vec();
    for tc in space.t_min..=t.min(space.t_max) {
        let z = JointInput { x: x.clone(), t: space.t_to_unit(f64::from(tc)) };
        if !inputs.iter().any(|s| same_x(&s.x, &z.x) && (s.t - z.t).abs() < 1e-12) {
            inputs.push(z);
        }
    }
    let k = crate::gp::gram_unchecked(&inputs, params);
    Ok(log_conds(&k, &[opts.nugget(params)])[0])
}

/// Budget in `[t_lo, t_hi]` (raw iterations) maximizing the posterior
/// standard deviation at fixed unit-cube `x`: best point of the integer grid,
/// then golden-section refinement within the neighbouring cells.
pub fn one_d_variance_argmax(
    model: &GpModel,
    space: &SearchSpace,
    x: &[f64],
    t_lo: u32,
    t_hi: u32,
) -> Result<f64> {
    if t_lo > t_hi {
        return Err(invalid_input!("empty budget range [{t_lo}, {t_hi}]"));
    }
    let var_at = |t: f64| -> Result<f64> {
        Ok(model.posterior(&JointInput { x: x.to_vec(), t: space.t_to_unit(t) })?.1)
    };
    let grid = candidate_grid(t_lo, t_hi);
    let vals = grid.iter().map(|&t| var_at(f64::from(t))).collect::<Result<Vec<_>>>()?;
    let allowed = alloc::vec![true; vals.len()];
    let k = argmax_mid_tie(&vals, &allowed).unwrap_or(0);
    let top = vals[k];
    if vals.iter().all(|v| (v - top).abs() <= 1e-12 * top.abs().max(1e-300)) {
        return Ok(f64::from(grid[k]));
    }
    let mut a = f64::from(grid[k.saturating_sub(1)]);
    let mut b = f64::from(grid[(k + 1).min(grid.len() - 1)]);
    let ratio = (libm::sqrt(5.0) - 1.0) / 2.0;
    let (mut best_t, mut best_v) = (f64::from(grid[k]), top);
    for _ in 0..40 {
        if b - a < 1e-6 {
            break;
        }
        let c = b - ratio * (b - a);
        let d = a + ratio * (b - a);
        let (vc, vd) = (var_at(c)?, var_at(d)?);
        for (tt, vv) in [(c, vc), (d, vd)] {
            if vv > best_v {
                best_v = vv;
                best_t = tt;
            }
        }
        if vc >= vd {
            b = d;
        } else {
            a = c;
        }
    }
    Ok(best_t)
}
