//! JSONL run logs, run summaries, replay and CSV export.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use boil_core::gp::KernelKind;
use boil_core::optimizer::{Method, Phase, Provenance, TraceRecord, TuneResult};
use boil_core::stats::spearman;
use serde::{Deserialize, Serialize};

use crate::{CliError, CliResult};

/// One line of a run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub eval_id: usize,
    pub method: Method,
    pub seed: u64,
    pub step: usize,
    pub phase: Phase,
    pub provenance: Provenance,
    pub x: Vec<f64>,
    pub t: u32,
    pub y: f64,
    pub cost: f64,
    pub cum_cost: f64,
    /// `None` until some evaluation has succeeded.
    pub best_so_far: Option<f64>,
    pub failed: bool,
    pub acquisition: Option<f64>,
    pub recommended_x: Option<Vec<f64>>,
    pub m0: Option<f64>,
    pub g0: Option<f64>,
    pub lengthscale_x: Option<f64>,
    pub lengthscale_t: Option<f64>,
    pub ln_cond: Option<f64>,
    pub ln_cond_gate: Option<f64>,
    pub kernel: KernelKind,
}

impl EvalRecord {
    pub fn from_trace(method: Method, seed: u64, kernel: KernelKind, r: &TraceRecord) -> Self {
        EvalRecord {
            eval_id: r.eval_id,
            method,
            seed,
            step: r.step,
            phase: r.phase,
            provenance: r.provenance,
            x: r.x.clone(),
            t: r.t,
            y: r.y,
            cost: r.cost,
            cum_cost: r.cum_cost,
            best_so_far: r.best_so_far.is_finite().then_some(r.best_so_far),
            failed: r.failed,
            acquisition: r.acquisition,
            recommended_x: r.recommended_x.clone(),
            m0: r.m0,
            g0: r.g0,
            lengthscale_x: r.lengthscale_x,
            lengthscale_t: r.lengthscale_t,
            ln_cond: r.ln_cond,
            ln_cond_gate: r.ln_cond_gate,
            kernel,
        }
    }
}

pub fn log_path(dir: &Path, method: Method, seed: u64) -> PathBuf {
    dir.join(format!("{}-{seed}.jsonl", method.tag()))
}

pub fn summary_path(dir: &Path, method: Method, seed: u64) -> PathBuf {
    dir.join(format!("{}-{seed}.summary.json", method.tag()))
}

/// Appends records to a log, one flushed line each, so a crashed run
/// leaves every finished record readable.
pub struct LogWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl LogWriter {
    pub fn create(path: &Path) -> CliResult<Self> {
        let file = File::create(path).map_err(|e| CliError::io(format!("creating {}", path.display()), e))?;
        Ok(LogWriter { path: path.to_path_buf(), out: BufWriter::new(file) })
    }

    pub fn append(&mut self, rec: &EvalRecord) -> CliResult<()> {
        let line = serde_json::to_string(rec).expect("records serialize");
        let wrap = |e| CliError::io(format!("writing {}", self.path.display()), e);
        self.out.write_all(line.as_bytes()).map_err(wrap)?;
        self.out.write_all(b"\n").map_err(wrap)?;
        self.out.flush().map_err(wrap)
    }
}

/// What is left of a run once it has finished, written next to its log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub method: Method,
    pub seed: u64,
    pub kernel: KernelKind,
    pub preference: String,
    pub x_star: Vec<f64>,
    pub y_star: Option<f64>,
    pub total_cost: f64,
    pub evaluations: usize,
    pub failures: usize,
    pub augmented: usize,
    pub augmented_per_step: Vec<usize>,
    pub m0: Option<f64>,
    pub g0: Option<f64>,
    pub log: String,
}

impl RunSummary {
    pub fn new(r: &TuneResult, preference: &str, log: &Path) -> Self {
        RunSummary {
            method: r.method,
            seed: r.seed,
            kernel: r.kernel,
            preference: preference.to_string(),
            x_star: r.x_star.clone(),
            y_star: r.y_star.is_finite().then_some(r.y_star),
            total_cost: r.total_cost,
            evaluations: r.evaluations,
            failures: r.failures,
            augmented: r.augmented,
            augmented_per_step: r.augmented_per_search_step(),
            m0: r.transform.map(|t| t.m0),
            g0: r.transform.map(|t| t.g0),
            log: log.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default(),
        }
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let text = serde_json::to_string_pretty(self).expect("summary serializes") + "\n";
        std::fs::write(path, text).map_err(|e| CliError::io(format!("writing {}", path.display()), e))
    }
}

/// A log read back from disk.
#[derive(Debug, Clone)]
pub struct LoadedLog {
    pub records: Vec<EvalRecord>,
    /// The final line was cut off and has been dropped.
    pub truncated: bool,
}

pub fn read_log(path: &Path) -> CliResult<LoadedLog> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
    let bad = |msg: String| CliError::Log { path: path.display().to_string(), msg };
    let text = String::from_utf8(bytes).map_err(|_| bad("not UTF-8".into()))?;
    let complete = text.ends_with('\n');
    let lines: Vec<&str> = text.lines().collect();
    let mut records: Vec<EvalRecord> = Vec::with_capacity(lines.len());
    let mut truncated = false;
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<EvalRecord>(line) {
            Ok(r) => {
                if let Some(prev) = records.last() {
                    if r.eval_id < prev.eval_id || r.cum_cost < prev.cum_cost {
                        return Err(bad(format!("line {}: records out of order", i + 1)));
                    }
                    if (r.method, r.seed) != (prev.method, prev.seed) {
                        return Err(bad(format!("line {}: log mixes runs", i + 1)));
                    }
                }
                records.push(r);
            }
            Err(_) if i + 1 == lines.len() && !complete => {
                log::warn!("{}: truncated final line ignored", path.display());
                truncated = true;
            }
            Err(e) => return Err(bad(format!("line {}: {e}", i + 1))),
        }
    }
    if records.is_empty() {
        return Err(bad("no records".into()));
    }
    Ok(LoadedLog { records, truncated })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplaySummary {
    pub method: Method,
    pub seed: u64,
    pub kernel: KernelKind,
    pub records: usize,
    pub direct: usize,
    pub augmented: usize,
    pub x_star: Option<Vec<f64>>,
    pub y_star: Option<f64>,
    pub total_cost: f64,
    pub augmented_per_step: Vec<usize>,
    /// Spearman correlation between search step and augmented count.
    pub trend: Option<f64>,
    pub truncated: bool,
}

pub fn replay(log: &LoadedLog) -> ReplaySummary {
    let recs = &log.records;
    let first = &recs[0];
    let mut per_step: Vec<usize> = Vec::new();
    for r in recs.iter().filter(|r| r.phase == Phase::Search) {
        match r.provenance {
            Provenance::Direct => per_step.push(0),
            Provenance::Augmented => {
                if let Some(last) = per_step.last_mut() {
                    *last += 1;
                }
            }
        }
    }
    let trend = (per_step.len() >= 2).then(|| {
        let idx: Vec<f64> = (0..per_step.len()).map(|i| i as f64).collect();
        let counts: Vec<f64> = per_step.iter().map(|&c| c as f64).collect();
        spearman(&idx, &counts)
    });
    let direct = recs.iter().filter(|r| r.provenance == Provenance::Direct).count();
    ReplaySummary {
        method: first.method,
        seed: first.seed,
        kernel: first.kernel,
        records: recs.len(),
        direct,
        augmented: recs.len() - direct,
        x_star: recs.iter().rev().find_map(|r| r.recommended_x.clone()),
        y_star: recs.iter().filter_map(|r| r.best_so_far).reduce(f64::max),
        total_cost: recs.iter().map(|r| r.cum_cost).fold(0.0, f64::max),
        augmented_per_step: per_step,
        trend: trend.filter(|v| v.is_finite()),
        truncated: log.truncated,
    }
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("[{}]", parts.join(", "))
}

impl std::fmt::Display for ReplaySummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "method: {}  seed: {}  kernel: {}", self.method.tag(), self.seed, self.kernel.tag())?;
        writeln!(f, "records: {} ({} direct, {} augmented)", self.records, self.direct, self.augmented)?;
        match &self.x_star {
            Some(x) => writeln!(f, "x*: {}", fmt_vec(x))?,
            None => writeln!(f, "x*: none")?,
        }
        match self.y_star {
            Some(y) => writeln!(f, "y*: {y}")?,
            None => writeln!(f, "y*: none")?,
        }
        writeln!(f, "total cost: {}", self.total_cost)?;
        let counts: Vec<String> = self.augmented_per_step.iter().map(|c| c.to_string()).collect();
        writeln!(f, "augmented per step: {}", counts.join(" "))?;
        match self.trend {
            Some(r) => writeln!(f, "augmentation trend (spearman): {r:.3}")?,
            None => writeln!(f, "augmentation trend (spearman): n/a")?,
        }
        if self.truncated {
            writeln!(f, "warning: truncated final line ignored")?;
        }
        Ok(())
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Flattens a log to CSV; vectors are `;`-separated, missing values empty.
pub fn export_csv<W: Write>(log: &LoadedLog, out: W) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| CliError::io("writing csv", e.into());
    w.write_record([
        "eval_id", "method", "seed", "step", "phase", "provenance", "x", "t", "y", "cost", "cum_cost", "best_so_far",
        "failed", "acquisition", "recommended_x", "m0", "g0", "lengthscale_x", "lengthscale_t", "ln_cond",
        "ln_cond_gate", "kernel",
    ])
    .map_err(io)?;
    for r in &log.records {
        w.write_record([
            r.eval_id.to_string(),
            r.method.tag().to_string(),
            r.seed.to_string(),
            r.step.to_string(),
            format!("{:?}", r.phase).to_lowercase(),
            format!("{:?}", r.provenance).to_lowercase(),
            join(&r.x),
            r.t.to_string(),
            r.y.to_string(),
            r.cost.to_string(),
            r.cum_cost.to_string(),
            opt(r.best_so_far),
            r.failed.to_string(),
            opt(r.acquisition),
            r.recommended_x.as_deref().map(join).unwrap_or_default(),
            opt(r.m0),
            opt(r.g0),
            opt(r.lengthscale_x),
            opt(r.lengthscale_t),
            opt(r.ln_cond),
            opt(r.ln_cond_gate),
            r.kernel.tag().to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io("writing csv", e))
}
