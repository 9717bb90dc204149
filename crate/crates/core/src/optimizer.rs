//! The outer optimization loop and the baselines it is compared against.

use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::acquisition::{incumbent, maximize_with_incumbent, Incumbent, MaximizerOptions};
use crate::augmentation::{select_augmented, AugmentOptions};
use crate::compression::{compress, per_iteration, LearningCurve, LogisticTransform, PreferenceKind};
use crate::error::{invalid_input, BoilError, Result};
use crate::gp::{fit_hyperparameters, log_condition_number, GpDataset, GpModel, HyperPrior, KernelKind, KernelParams};
use crate::objective::Objective;
use crate::sobol::sobol_points;
use crate::space::{JointInput, SearchSpace};
use crate::stats::std_dev;
use crate::transform::{fit_transform, CurveObservations, ScoreSource, TransformBounds};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Method {
    #[cfg_attr(feature = "serde", serde(rename = "boil"))]
    Boil,
    #[cfg_attr(feature = "serde", serde(rename = "bo"))]
    BoVanilla,
    #[cfg_attr(feature = "serde", serde(rename = "bo-l"))]
    BoL,
    #[cfg_attr(feature = "serde", serde(rename = "cmtf"))]
    CmtfBo,
    #[cfg_attr(feature = "serde", serde(rename = "random"))]
    Random,
    #[cfg_attr(feature = "serde", serde(rename = "hyperband"))]
    Hyperband,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Boil,
        Method::BoVanilla,
        Method::BoL,
        Method::CmtfBo,
        Method::Random,
        Method::Hyperband,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Method::Boil => "boil",
            Method::BoVanilla => "bo",
            Method::BoL => "bo-l",
            Method::CmtfBo => "cmtf",
            Method::Random => "random",
            Method::Hyperband => "hyperband",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.tag() == tag)
    }

    fn uses_gp(self) -> bool {
        matches!(self, Method::Boil | Method::BoVanilla | Method::BoL | Method::CmtfBo)
    }

    fn full_budget_only(self) -> bool {
        matches!(self, Method::BoVanilla | Method::BoL | Method::Random)
    }
}

/// Which compression the score GP is trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
pub enum PreferenceChoice {
    /// Logistic weights, refitted with the GP.
    #[default]
    Sigmoid,
    Log,
    /// Mean of the last `window` iterations; `None` uses 10% of `T_max`.
    Average { window: Option<usize> },
}

impl PreferenceChoice {
    pub fn tag(self) -> &'static str {
        match self {
            PreferenceChoice::Sigmoid => "sigmoid",
            PreferenceChoice::Log => "log",
            PreferenceChoice::Average { .. } => "average",
        }
    }
}

fn tenth(t: u32) -> usize {
    (libm::round(0.1 * f64::from(t)) as usize).max(1)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OptimizerConfig {
    /// Optimization steps after the initial design.
    pub n_iterations: usize,
    /// Initial design size; `None` means `3 d`.
    pub initial_design: Option<usize>,
    /// Evaluations between hyperparameter refits; `None` means `3 d`.
    pub refit_every: Option<usize>,
    pub augment: AugmentOptions,
    pub kernel: KernelKind,
    pub preference: PreferenceChoice,
    pub prior: HyperPrior,
    /// Stop starting new evaluations once this much cost has been spent.
    pub cost_budget: Option<f64>,
    /// Failed evaluations tolerated before the run aborts.
    pub max_failures: usize,
    pub probes: usize,
    pub starts: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        let m = MaximizerOptions::default();
        OptimizerConfig {
            n_iterations: 40,
            initial_design: None,
            refit_every: None,
            augment: AugmentOptions::default(),
            kernel: KernelKind::SeProduct,
            preference: PreferenceChoice::Sigmoid,
            prior: HyperPrior::default(),
            cost_budget: None,
            max_failures: 5,
            probes: m.probes,
            starts: m.starts,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        self.augment.validate()?;
        if self.initial_design == Some(0) {
            return Err(invalid_input!("initial design needs at least one point"));
        }
        if self.refit_every == Some(0) {
            return Err(invalid_input!("refit interval must be at least 1"));
        }
        if let PreferenceChoice::Average { window: Some(0) } = self.preference {
            return Err(invalid_input!("average window must be at least 1"));
        }
        if self.probes == 0 {
            return Err(invalid_input!("acquisition needs at least one probe"));
        }
        if let Some(b) = self.cost_budget {
            if !(b > 0.0) {
                return Err(invalid_input!("cost budget must be positive"));
            }
        }
        Ok(())
    }

    pub fn initial_params(&self) -> KernelParams {
        match self.kernel {
            KernelKind::SeProduct => KernelParams::default(),
            KernelKind::FreezeThawTime => {
                let d = KernelParams::default();
                KernelParams::freeze_thaw(d.lengthscale_x, 1.0, 1.0, d.noise_var)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Provenance {
    Direct,
    Augmented,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Phase {
    Initial,
    Search,
}

/// One observation added during a run: a training run, or an intermediate
/// point of the curve of the training run `eval_id`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TraceRecord {
    pub eval_id: usize,
    /// Counts training runs, initial design included, from 1.
    pub step: usize,
    pub phase: Phase,
    pub provenance: Provenance,
    pub x: Vec<f64>,
    pub t: u32,
    pub y: f64,
    /// Cost of the run, or the measured cost up to `t` for augmented points.
    pub cost: f64,
    pub cum_cost: f64,
    pub best_so_far: f64,
    pub failed: bool,
    pub acquisition: Option<f64>,
    /// Current recommendation (raw units), set on direct records.
    pub recommended_x: Option<Vec<f64>>,
    pub m0: Option<f64>,
    pub g0: Option<f64>,
    pub lengthscale_x: Option<f64>,
    pub lengthscale_t: Option<f64>,
    pub ln_cond: Option<f64>,
    pub ln_cond_gate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub method: Method,
    pub seed: u64,
    pub x_star: Vec<f64>,
    pub y_star: f64,
    pub total_cost: f64,
    pub evaluations: usize,
    pub failures: usize,
    pub augmented: usize,
    pub kernel: KernelKind,
    pub transform: Option<LogisticTransform>,
    pub trace: Vec<TraceRecord>,
}

impl TuneResult {
    pub fn direct_records(&self) -> impl Iterator<Item = &TraceRecord> {
        self.trace.iter().filter(|r| r.provenance == Provenance::Direct)
    }

    /// Augmented points added after each search step, in step order.
    pub fn augmented_per_search_step(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for r in &self.trace {
            if r.phase != Phase::Search {
                continue;
            }
            match r.provenance {
                Provenance::Direct => out.push(0),
                Provenance::Augmented => {
                    if let Some(last) = out.last_mut() {
                        *last += 1;
                    }
                }
            }
        }
        out
    }
}

/// `k` quasi-random points (raw units) with budgets alternating between
/// `T_min` and the middle of the range.
pub fn initial_design(space: &SearchSpace, k: usize, seed: u64) -> Result<Vec<(Vec<f64>, u32)>> {
    space.validate()?;
    if k == 0 {
        return Err(invalid_input!("initial design needs at least one point"));
    }
    let mid = space.t_min + (space.t_max - space.t_min) / 2;
    Ok(sobol_points(k, space.dim(), seed)
        .into_iter()
        .enumerate()
        .map(|(i, u)| (space.from_unit(&u), if i % 2 == 0 { space.t_min } else { mid }))
        .collect())
}

fn mix(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

struct Evaluation {
    x: Vec<f64>,
    t: u32,
    z: JointInput,
    y: f64,
    failed: bool,
}

struct Run<'a, O: Objective + ?Sized> {
    objective: &'a O,
    space: &'a SearchSpace,
    cfg: &'a OptimizerConfig,
    method: Method,
    seed: u64,
    learn_transform: bool,
    transform: LogisticTransform,
    bounds: TransformBounds,
    evals: Vec<Evaluation>,
    curves: Vec<LearningCurve>,
    inputs: Vec<JointInput>,
    sources: Vec<ScoreSource>,
    failed_rows: Vec<bool>,
    score_gp: GpModel,
    cost_gp: GpModel,
    cum_cost: f64,
    best: f64,
    failures: usize,
    augmented: usize,
    since_fit: usize,
    trace: Vec<TraceRecord>,
    on_record: &'a mut dyn FnMut(&TraceRecord),
}

impl<O: Objective + ?Sized> Run<'_, O> {
    fn pref_for(&self, t: u32) -> PreferenceKind {
        match (self.method, self.cfg.preference) {
            (Method::Hyperband, _) => PreferenceKind::Average { window: tenth(t) },
            (Method::BoVanilla, _) => PreferenceKind::Average { window: tenth(self.space.t_max) },
            (Method::BoL, _) | (_, PreferenceChoice::Sigmoid) => PreferenceKind::Sigmoid(self.transform),
            (_, PreferenceChoice::Log) => PreferenceKind::Log,
            (_, PreferenceChoice::Average { window }) => PreferenceKind::Average {
                window: window.unwrap_or_else(|| tenth(self.space.t_max)),
            },
        }
    }

    fn budget_left(&self) -> bool {
        self.cfg.cost_budget.is_none_or(|b| self.cum_cost < b)
    }

    fn emit(&mut self, rec: TraceRecord) {
        (self.on_record)(&rec);
        self.trace.push(rec);
    }

    fn sentinel(&self) -> f64 {
        let valid: Vec<f64> = self
            .score_gp
            .dataset()
            .raw_outputs()
            .iter()
            .zip(&self.failed_rows)
            .filter(|(_, f)| !**f)
            .map(|(y, _)| *y)
            .collect();
        if valid.is_empty() {
            return 0.0;
        }
        let min = valid.iter().copied().fold(f64::INFINITY, f64::min);
        let sd = if valid.len() > 1 { std_dev(&valid) } else { 0.0 };
        min - if sd > 0.0 { sd } else { 1.0 }
    }

    fn gp_fields(&self) -> (Option<f64>, Option<f64>) {
        if !self.method.uses_gp() {
            return (None, None);
        }
        let p = self.score_gp.params();
        let lt = match p.kind {
            KernelKind::SeProduct => Some(p.lengthscale_t),
            KernelKind::FreezeThawTime => None,
        };
        (Some(p.lengthscale_x), lt)
    }

    /// Best evaluated configuration. Model-based methods take the live
    /// evaluation with the highest posterior mean at its own `(x, t)`, which
    /// smooths out lucky noisy runs; the others take the best score at the
    /// largest budget tried.
    fn recommendation(&self) -> Option<usize> {
        let live = self.evals.iter().enumerate().filter(|(_, e)| !e.failed);
        if self.method.uses_gp() && !self.score_gp.is_empty() {
            live.map(|(i, e)| (i, self.score_gp.posterior_mean(&e.z)))
                .fold(None, |acc: Option<(usize, f64)>, c| match acc {
                    Some(a) if a.1 >= c.1 => Some(a),
                    _ => Some(c),
                })
                .map(|(i, _)| i)
        } else {
            live.map(|(i, e)| (i, e.t, e.y))
                .fold(None, |acc: Option<(usize, u32, f64)>, c| match acc {
                    Some(a) if (a.1, a.2) >= (c.1, c.2) => Some(a),
                    _ => Some(c),
                })
                .map(|(i, _, _)| i)
        }
    }

    fn observe(&mut self, x: Vec<f64>, t: u32, phase: Phase, acquisition: Option<f64>) -> Result<()> {
        let z = self.space.joint(&x, t)?;
        let eval_id = self.evals.len();
        let step = eval_id + 1;
        let outcome = self.objective.evaluate(&x, t);
        let pref = self.pref_for(t);
        let (y, cost, failed, curve) = match outcome {
            Ok(curve) => {
                if curve.t() != t as usize {
                    return Err(BoilError::Objective(alloc::format!(
                        "objective returned {} iterations, expected {t}",
                        curve.t()
                    )));
                }
                let y = compress(&curve, &pref)?;
                (y, curve.final_cost(), false, Some(curve))
            }
            Err(BoilError::Objective(msg)) => {
                self.failures += 1;
                log::warn!("evaluation {eval_id} failed: {msg}");
                if self.failures > self.cfg.max_failures {
                    return Err(BoilError::Objective(alloc::format!(
                        "{} failed evaluations, last: {msg}",
                        self.failures
                    )));
                }
                (self.sentinel(), 0.0, true, None)
            }
            Err(e) => return Err(e),
        };
        self.cum_cost += cost;
        if !failed {
            self.best = self.best.max(y);
        }
        self.evals.push(Evaluation { x: x.clone(), t, z: z.clone(), y, failed });
        self.since_fit += 1;

        let curve_idx = curve.as_ref().map(|c| {
            self.curves.push(c.clone());
            self.curves.len() - 1
        });
        let mut batch = None;
        let mut ln_cond = None;
        if self.method.uses_gp() {
            self.inputs.push(z.clone());
            // failed runs carry the sentinel, already on the GP scale
            let target = if failed { y } else { per_iteration(y, t as usize, &pref) };
            self.sources.push(match curve_idx {
                Some(i) => ScoreSource::Prefix { curve: i, len: t as usize },
                None => ScoreSource::Fixed(target),
            });
            self.failed_rows.push(failed);
            self.score_gp.push(z.clone(), target)?;
            if !failed {
                self.cost_gp.push(z.clone(), cost)?;
            }
            if let (Method::Boil, Some(curve)) = (self.method, curve.as_ref()) {
                let b = select_augmented(curve, &self.score_gp, self.space, &pref, &self.cfg.augment, eval_id)?;
                for p in &b.points {
                    self.inputs.push(p.z.clone());
                    self.sources.push(ScoreSource::Prefix { curve: curve_idx.unwrap_or(0), len: p.t as usize });
                    self.failed_rows.push(false);
                    self.score_gp.push(p.z.clone(), per_iteration(p.y, p.t as usize, &pref))?;
                    self.cost_gp.push(p.z.clone(), p.cost)?;
                }
                self.augmented += b.len();
                ln_cond = Some(b.log_cond_model);
                batch = Some(b);
            } else {
                ln_cond = Some(log_condition_number(self.score_gp.dataset().inputs(), self.score_gp.params()));
            }
        }

        let (lx, lt) = self.gp_fields();
        let tr = (self.method.uses_gp() && self.learn_transform).then_some(self.transform);
        let recommended = self.recommendation().map(|i| self.evals[i].x.clone());
        let direct = TraceRecord {
            eval_id,
            step,
            phase,
            provenance: Provenance::Direct,
            x: x.clone(),
            t,
            y,
            cost,
            cum_cost: self.cum_cost,
            best_so_far: self.best,
            failed,
            acquisition,
            recommended_x: recommended,
            m0: tr.map(|t| t.m0),
            g0: tr.map(|t| t.g0),
            lengthscale_x: lx,
            lengthscale_t: lt,
            ln_cond,
            ln_cond_gate: batch.as_ref().map(|b| b.log_cond_gate),
        };
        self.emit(direct.clone());
        if let Some(b) = batch {
            for p in b.points {
                self.emit(TraceRecord {
                    provenance: Provenance::Augmented,
                    t: p.t,
                    y: p.y,
                    cost: p.cost,
                    acquisition: None,
                    recommended_x: None,
                    ..direct.clone()
                });
            }
        }
        Ok(())
    }

    fn rescore(&mut self) -> Result<()> {
        let pref = self.pref_for(self.space.t_max);
        let obs = CurveObservations { curves: &self.curves, inputs: &self.inputs, sources: &self.sources };
        let compressed = obs.scores(&pref);
        let mut scores = obs.targets(&pref);
        let valid: Vec<f64> = scores.iter().zip(&self.failed_rows).filter(|(_, f)| !**f).map(|(y, _)| *y).collect();
        if !valid.is_empty() {
            let min = valid.iter().copied().fold(f64::INFINITY, f64::min);
            let sd = if valid.len() > 1 { std_dev(&valid) } else { 0.0 };
            let sentinel = min - if sd > 0.0 { sd } else { 1.0 };
            for (s, f) in scores.iter_mut().zip(&self.failed_rows) {
                if *f {
                    *s = sentinel;
                }
            }
        }
        let mut row = 0;
        for e in self.evals.iter_mut() {
            if let Some(pos) = self.inputs[row..].iter().position(|z| *z == e.z) {
                row += pos;
                e.y = if e.failed { scores[row] } else { compressed[row] };
                row += 1;
            }
        }
        self.score_gp.set_raw_outputs(scores)
    }

    fn refit(&mut self) -> Result<()> {
        self.since_fit = 0;
        if !self.method.uses_gp() || self.score_gp.is_empty() {
            return Ok(());
        }
        let prior = &self.cfg.prior;
        self.score_gp.restandardize();
        let mut params = fit_hyperparameters(self.score_gp.dataset(), prior, self.score_gp.params());
        if self.learn_transform {
            for _ in 0..2 {
                let obs = CurveObservations { curves: &self.curves, inputs: &self.inputs, sources: &self.sources };
                let tr = fit_transform(&obs, &params, &self.transform, &self.bounds);
                if tr == self.transform {
                    break;
                }
                self.transform = tr;
                self.rescore()?;
                params = fit_hyperparameters(self.score_gp.dataset(), prior, &params);
            }
        }
        self.score_gp.set_params(params)?;
        if !self.cost_gp.is_empty() {
            self.cost_gp.restandardize();
            let cp = fit_hyperparameters(self.cost_gp.dataset(), prior, self.cost_gp.params());
            self.cost_gp.set_params(cp)?;
        }
        Ok(())
    }

    fn incumbent(&self) -> Option<Incumbent> {
        let live: Vec<JointInput> = self.evals.iter().filter(|e| !e.failed).map(|e| e.z.clone()).collect();
        if live.is_empty() {
            return None;
        }
        incumbent(&self.score_gp, &live).ok()
    }

    fn finish(self) -> TuneResult {
        // The last logged recommendation, so a replayed log agrees with the
        // result; a refit after the final evaluation does not change it.
        let x_star = match self.trace.iter().rev().find_map(|r| r.recommended_x.clone()) {
            Some(x) => x,
            None => self.recommendation().map(|i| self.evals[i].x.clone()).unwrap_or_default(),
        };
        let y_star = self
            .trace
            .iter()
            .map(|r| r.best_so_far)
            .fold(f64::NEG_INFINITY, f64::max);
        TuneResult {
            method: self.method,
            seed: self.seed,
            x_star,
            y_star,
            total_cost: self.cum_cost,
            evaluations: self.evals.len(),
            failures: self.failures,
            augmented: self.augmented,
            kernel: self.cfg.kernel,
            transform: (self.method.uses_gp() && self.learn_transform).then_some(self.transform),
            trace: self.trace,
        }
    }
}

/// BOIL: the joint-space optimizer with curve compression and augmentation.
pub fn run_boil<O: Objective + ?Sized>(
    objective: &O,
    space: &SearchSpace,
    cfg: &OptimizerConfig,
    seed: u64,
) -> Result<TuneResult> {
    run(Method::Boil, objective, space, cfg, seed, &mut |_| {})
}

pub fn run_baseline<O: Objective + ?Sized>(
    method: Method,
    objective: &O,
    space: &SearchSpace,
    cfg: &OptimizerConfig,
    seed: u64,
) -> Result<TuneResult> {
    run(method, objective, space, cfg, seed, &mut |_| {})
}

/// Runs `method`, handing every trace record to `on_record` as it is produced.
pub fn run<O: Objective + ?Sized>(
    method: Method,
    objective: &O,
    space: &SearchSpace,
    cfg: &OptimizerConfig,
    seed: u64,
    on_record: &mut dyn FnMut(&TraceRecord),
) -> Result<TuneResult> {
    cfg.validate()?;
    space.validate()?;
    let d = space.dim();
    let learn_transform = match method {
        Method::BoL => true,
        Method::Boil | Method::CmtfBo => cfg.preference == PreferenceChoice::Sigmoid,
        _ => false,
    };
    let params = cfg.initial_params();
    let mut state = Run {
        objective,
        space,
        cfg,
        method,
        seed,
        learn_transform,
        transform: LogisticTransform::initial(space.t_min, space.t_max),
        bounds: TransformBounds::for_range(space.t_min, space.t_max),
        evals: Vec::new(),
        curves: Vec::new(),
        inputs: Vec::new(),
        sources: Vec::new(),
        failed_rows: Vec::new(),
        score_gp: GpModel::new(GpDataset::default(), params)?,
        cost_gp: GpModel::new(GpDataset::default(), params)?,
        cum_cost: 0.0,
        best: f64::NEG_INFINITY,
        failures: 0,
        augmented: 0,
        since_fit: 0,
        trace: Vec::new(),
        on_record,
    };
    match method {
        Method::Random => run_random(&mut state)?,
        Method::Hyperband => run_hyperband(&mut state)?,
        _ => run_model_based(&mut state, d)?,
    }
    Ok(state.finish())
}

fn run_model_based<O: Objective + ?Sized>(s: &mut Run<'_, O>, d: usize) -> Result<()> {
    let k = s.cfg.initial_design.unwrap_or(3 * d);
    let refit_every = s.cfg.refit_every.unwrap_or(3 * d);
    for (x, t) in initial_design(s.space, k, mix(s.seed, 1))? {
        if !s.budget_left() {
            break;
        }
        let t = if s.method.full_budget_only() { s.space.t_max } else { t };
        s.observe(x, t, Phase::Initial, None)?;
    }
    s.refit()?;
    let opts = MaximizerOptions {
        probes: s.cfg.probes,
        starts: s.cfg.starts,
        fixed_t: s.method.full_budget_only().then_some(1.0),
        cost_aware: matches!(s.method, Method::Boil | Method::CmtfBo),
        ..MaximizerOptions::default()
    };
    for n in 1..=s.cfg.n_iterations {
        if !s.budget_left() {
            break;
        }
        let Some(inc) = s.incumbent() else {
            return Err(BoilError::InvalidState("no successful evaluation to build on".into()));
        };
        let decision = maximize_with_incumbent(&s.score_gp, &s.cost_gp, &inc, d, mix(s.seed, 100 + n as u64), &opts)?;
        let t = if s.method.full_budget_only() { s.space.t_max } else { s.space.t_round(decision.z_next.t) };
        let x = s.space.from_unit(&decision.z_next.x);
        s.observe(x, t, Phase::Search, Some(decision.score))?;
        if s.since_fit >= refit_every {
            s.refit()?;
        }
    }
    Ok(())
}

fn random_x<R: Rng>(rng: &mut R, space: &SearchSpace) -> Vec<f64> {
    let u: Vec<f64> = (0..space.dim()).map(|_| rng.random_range(0.0..1.0)).collect();
    space.from_unit(&u)
}

fn run_random<O: Objective + ?Sized>(s: &mut Run<'_, O>) -> Result<()> {
    let total = s.cfg.initial_design.unwrap_or(3 * s.space.dim()) + s.cfg.n_iterations;
    let mut rng = ChaCha8Rng::seed_from_u64(mix(s.seed, 2));
    for _ in 0..total {
        if !s.budget_left() {
            break;
        }
        let x = random_x(&mut rng, s.space);
        s.observe(x, s.space.t_max, Phase::Search, None)?;
    }
    Ok(())
}

/// Successive-halving brackets with `eta = 3`, budgets measured in
/// iterations from `T_min` up to `T_max`, repeated until the evaluation
/// count matches the other methods.
fn run_hyperband<O: Objective + ?Sized>(s: &mut Run<'_, O>) -> Result<()> {
    const ETA: f64 = 3.0;
    let total = s.cfg.initial_design.unwrap_or(3 * s.space.dim()) + s.cfg.n_iterations;
    let mut rng = ChaCha8Rng::seed_from_u64(mix(s.seed, 3));
    let ratio = f64::from(s.space.t_max) / f64::from(s.space.t_min.max(1));
    let s_max = (libm::floor(libm::log(ratio) / libm::log(ETA) + 1e-9)).max(0.0) as i32;
    let mut done = 0usize;
    let to_t = |r: f64, space: &SearchSpace| -> u32 {
        (libm::round(f64::from(space.t_min.max(1)) * r) as u32).clamp(space.t_min, space.t_max)
    };
    'outer: loop {
        for bracket in (0..=s_max).rev() {
            let mut n = libm::ceil(f64::from(s_max + 1) / f64::from(bracket + 1) * libm::pow(ETA, f64::from(bracket))) as usize;
            let mut r = ratio * libm::pow(ETA, -f64::from(bracket));
            let mut configs: Vec<Vec<f64>> = (0..n).map(|_| random_x(&mut rng, s.space)).collect();
            for rung in 0..=bracket {
                let t = to_t(r, s.space);
                let mut scored = Vec::with_capacity(configs.len());
                for x in configs {
                    if done >= total || !s.budget_left() {
                        break 'outer;
                    }
                    s.observe(x.clone(), t, Phase::Search, None)?;
                    done += 1;
                    let e = s.evals.last().map(|e| if e.failed { f64::NEG_INFINITY } else { e.y });
                    scored.push((e.unwrap_or(f64::NEG_INFINITY), x));
                }
                if rung == bracket {
                    break;
                }
                scored.sort_by(|a, b| b.0.total_cmp(&a.0));
                n = ((n as f64 / ETA) as usize).max(1);
                configs = scored.into_iter().take(n).map(|(_, x)| x).collect();
                r *= ETA;
            }
        }
    }
    Ok(())
}

/// A short label for logs.
pub fn describe(method: Method, cfg: &OptimizerConfig) -> String {
    alloc::format!("{} ({}, {})", method.tag(), cfg.kernel.tag(), cfg.preference.tag())
}
