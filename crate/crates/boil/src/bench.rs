//! Running (method, seed) jobs to disk and scoring them against ground truth.

use std::path::Path;

use boil_core::compression::{LogisticTransform, PreferenceKind};
use boil_core::objective::SyntheticCurveSpec;
use boil_core::optimizer::{run, Method, TuneResult};
use boil_core::SearchSpace;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::Resolved;
use crate::records::{log_path, summary_path, EvalRecord, LogWriter, RunSummary};
use crate::{CliError, CliResult};

/// Runs one job, streaming its log to `<output_dir>/<method>-<seed>.jsonl`
/// and writing the summary next to it.
pub fn run_job(cfg: &Resolved, method: Method, seed: u64) -> CliResult<TuneResult> {
    let dir = &cfg.config.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))?;
    let objective = cfg.objective(seed)?;
    let path = log_path(dir, method, seed);
    let mut log = LogWriter::create(&path)?;
    let mut write_err = None;
    let kernel = cfg.optimizer.kernel;
    log::info!("starting {} seed {seed}", boil_core::optimizer::describe(method, &cfg.optimizer));
    let result = run(method, &objective, &cfg.space, &cfg.optimizer, seed, &mut |r| {
        if write_err.is_none() {
            write_err = log.append(&EvalRecord::from_trace(method, seed, kernel, r)).err();
        }
    });
    if let Some(e) = write_err {
        return Err(e);
    }
    let result = result?;
    RunSummary::new(&result, cfg.optimizer.preference.tag(), &path).write(&summary_path(dir, method, seed))?;
    log::info!("{} seed {seed}: {} evaluations, cost {}", method.tag(), result.evaluations, result.total_cost);
    Ok(result)
}

/// Runs every (method, seed) pair in parallel. Results come back in
/// (method, seed) order; the first failure in that order is returned.
pub fn run_all(cfg: &Resolved, methods: &[Method]) -> CliResult<Vec<TuneResult>> {
    let jobs: Vec<(Method, u64)> = methods.iter().flat_map(|&m| cfg.config.seeds.iter().map(move |&s| (m, s))).collect();
    let results: Vec<CliResult<TuneResult>> = jobs.par_iter().map(|&(m, s)| run_job(cfg, m, s)).collect();
    results.into_iter().collect()
}

/// The preference that ground-truth utility is measured with, whatever
/// preference the optimizer itself was given.
pub fn reference_preference(space: &SearchSpace) -> PreferenceKind {
    PreferenceKind::Sigmoid(LogisticTransform::initial(space.t_min, space.t_max))
}

/// Noise-free utility of raw-unit `x` at full budget.
pub fn true_utility(spec: &SyntheticCurveSpec, space: &SearchSpace, x: &[f64]) -> f64 {
    match space.to_unit(x) {
        Ok(u) => spec.utility(&u, space.t_max, &reference_preference(space)),
        Err(_) => f64::NEG_INFINITY,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub method: String,
    pub seed: u64,
    pub cumulative_cost: f64,
    pub best_utility: f64,
}

/// One row per training run. With ground truth, `best_utility` is the best
/// true utility among the recommendations so far; without it, the best
/// observed score.
pub fn report_rows(r: &TuneResult, truth: Option<(&SyntheticCurveSpec, &SearchSpace)>) -> Vec<ReportRow> {
    let mut best = f64::NEG_INFINITY;
    r.direct_records()
        .map(|d| {
            let u = match (truth, &d.recommended_x) {
                (Some((spec, space)), Some(x)) => true_utility(spec, space, x),
                (Some(_), None) => f64::NEG_INFINITY,
                (None, _) => d.best_so_far,
            };
            best = best.max(u);
            ReportRow { method: r.method.tag().into(), seed: r.seed, cumulative_cost: d.cum_cost, best_utility: best }
        })
        .collect()
}

/// Cumulative cost at which `best_utility` first reaches `target`.
pub fn cost_to_reach(rows: &[ReportRow], target: f64) -> f64 {
    rows.iter().find(|r| r.best_utility >= target).map_or(f64::INFINITY, |r| r.cumulative_cost)
}

pub fn write_report(path: &Path, rows: &[ReportRow]) -> CliResult<()> {
    let io = |e: csv::Error| CliError::io(format!("writing {}", path.display()), e.into());
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    for r in rows {
        w.serialize(r).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}
