//! The run configuration file and its command-line overrides.

use std::path::{Path, PathBuf};

use boil_core::augmentation::AugmentOptions;
use boil_core::gp::KernelKind;
use boil_core::objective::{fixture, SyntheticCurveSpec, SyntheticObjective, FIXTURE_NAMES};
use boil_core::optimizer::{Method, OptimizerConfig, PreferenceChoice};
use boil_core::SearchSpace;
use serde::{Deserialize, Serialize};

use crate::external::ExternalObjective;
use crate::{CliError, CliResult};

/// Where curves come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ObjectiveConfig {
    /// The simulator; `spec` overrides the fixture's response surface.
    Synthetic {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        spec: Option<SyntheticCurveSpec>,
    },
    /// A training process speaking the line protocol. `command` is an argv
    /// list, run without a shell.
    External {
        command: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        working_dir: Option<PathBuf>,
        timeout_s: f64,
    },
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        ObjectiveConfig::Synthetic { spec: None }
    }
}

fn default_method() -> Method {
    Method::Boil
}
fn default_n() -> usize {
    40
}
fn default_m() -> usize {
    boil_core::augmentation::DEFAULT_MAX_POINTS
}
fn default_delta() -> f64 {
    boil_core::augmentation::DEFAULT_DELTA
}
fn default_seeds() -> Vec<u64> {
    vec![0]
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}
fn default_max_failures() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_method")]
    pub method: Method,
    /// Methods compared by `bench`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub methods: Vec<Method>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixture: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<SearchSpace>,
    #[serde(default)]
    pub objective: ObjectiveConfig,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub preference: PreferenceChoice,
    #[serde(default)]
    pub kernel: KernelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_design: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_budget: Option<f64>,
    #[serde(default = "default_max_failures")]
    pub max_failures: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            method: default_method(),
            methods: Vec::new(),
            fixture: None,
            space: None,
            objective: ObjectiveConfig::default(),
            n: default_n(),
            m: default_m(),
            delta: default_delta(),
            seeds: default_seeds(),
            output_dir: default_output_dir(),
            preference: PreferenceChoice::default(),
            kernel: KernelKind::default(),
            initial_design: None,
            cost_budget: None,
            max_failures: default_max_failures(),
        }
    }
}

/// A validated configuration with its search space and objective worked out.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: RunConfig,
    pub space: SearchSpace,
    /// Ground truth, when the objective is the simulator.
    pub spec: Option<SyntheticCurveSpec>,
    pub optimizer: OptimizerConfig,
}

/// The objective bound to one seed.
pub enum RunObjective {
    Synthetic(SyntheticObjective),
    External(ExternalObjective),
}

impl boil_core::objective::Objective for RunObjective {
    fn evaluate(&self, x: &[f64], t: u32) -> boil_core::Result<boil_core::compression::LearningCurve> {
        match self {
            RunObjective::Synthetic(o) => o.evaluate(x, t),
            RunObjective::External(o) => o.evaluate(x, t),
        }
    }
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl RunConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| bad(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(m) => bad(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn optimizer_config(&self) -> OptimizerConfig {
        OptimizerConfig {
            n_iterations: self.n,
            initial_design: self.initial_design,
            augment: AugmentOptions { max_points: self.m, delta: self.delta, ..AugmentOptions::default() },
            kernel: self.kernel,
            preference: self.preference,
            cost_budget: self.cost_budget,
            max_failures: self.max_failures,
            ..OptimizerConfig::default()
        }
    }

    pub fn resolve(&self) -> CliResult<Resolved> {
        if self.seeds.is_empty() {
            return Err(bad("seeds must not be empty"));
        }
        let (space, fixture_spec) = match (&self.fixture, &self.space) {
            (Some(_), Some(_)) => return Err(bad("give either a fixture or an inline space, not both")),
            (None, None) => return Err(bad(format!("no search space: set a fixture ({}) or an inline space", FIXTURE_NAMES.join(", ")))),
            (Some(name), None) => {
                let fx = fixture(name).map_err(|_| bad(format!("unknown fixture {name:?}; known: {}", FIXTURE_NAMES.join(", "))))?;
                (fx.space, Some(fx.spec))
            }
            (None, Some(space)) => (space.clone(), None),
        };
        space.validate().map_err(|e| bad(e.to_string()))?;
        let spec = match &self.objective {
            ObjectiveConfig::Synthetic { spec } => {
                let spec = spec.clone().or(fixture_spec).ok_or_else(|| bad("a synthetic objective on an inline space needs a spec"))?;
                spec.validate().map_err(|e| bad(e.to_string()))?;
                if spec.dim() != space.dim() {
                    return Err(bad(format!("spec has {} dimensions but the space has {}", spec.dim(), space.dim())));
                }
                Some(spec)
            }
            ObjectiveConfig::External { command, timeout_s, .. } => {
                if command.is_empty() || command[0].is_empty() {
                    return Err(bad("external objective needs a command"));
                }
                if !(*timeout_s > 0.0) || !timeout_s.is_finite() {
                    return Err(bad("timeout_s must be positive"));
                }
                None
            }
        };
        let optimizer = self.optimizer_config();
        optimizer.validate().map_err(|e| bad(e.to_string()))?;
        Ok(Resolved { config: self.clone(), space, spec, optimizer })
    }
}

impl Resolved {
    pub fn objective(&self, seed: u64) -> CliResult<RunObjective> {
        match &self.config.objective {
            ObjectiveConfig::Synthetic { .. } => {
                let spec = self.spec.clone().expect("synthetic runs carry a spec");
                Ok(RunObjective::Synthetic(SyntheticObjective::new(spec, self.space.clone(), seed)?))
            }
            ObjectiveConfig::External { command, working_dir, timeout_s } => Ok(RunObjective::External(
                ExternalObjective::new(command.clone(), working_dir.clone(), *timeout_s, &self.space, seed)?,
            )),
        }
    }
}

/// `sigmoid`, `log`, `average` or `average:W`.
pub fn parse_preference(s: &str) -> Result<PreferenceChoice, String> {
    match s.split_once(':') {
        None => match s {
            "sigmoid" => Ok(PreferenceChoice::Sigmoid),
            "log" => Ok(PreferenceChoice::Log),
            "average" => Ok(PreferenceChoice::Average { window: None }),
            _ => Err(format!("unknown preference {s:?}; use sigmoid, log, average or average:W")),
        },
        Some(("average", w)) => match w.parse::<usize>() {
            Ok(w) if w > 0 => Ok(PreferenceChoice::Average { window: Some(w) }),
            _ => Err(format!("average window must be a positive integer, got {w:?}")),
        },
        Some(_) => Err(format!("only average takes a window, got {s:?}")),
    }
}

pub fn parse_method(s: &str) -> Result<Method, String> {
    Method::from_tag(s).ok_or_else(|| {
        let tags: Vec<&str> = Method::ALL.iter().map(|m| m.tag()).collect();
        format!("unknown method {s:?}; use one of {}", tags.join(", "))
    })
}

pub fn parse_kernel(s: &str) -> Result<KernelKind, String> {
    KernelKind::from_tag(s).ok_or_else(|| format!("unknown kernel {s:?}; use se-product or freeze-thaw-t"))
}

/// Comma-separated seeds and ranges: `3`, `1,4,9`, `0..20`, `0..=19`.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim) {
        let num = |v: &str| v.trim().parse::<u64>().map_err(|_| format!("bad seed {v:?} in {s:?}"));
        if let Some((a, b)) = part.split_once("..=") {
            out.extend(num(a)?..=num(b)?);
        } else if let Some((a, b)) = part.split_once("..") {
            out.extend(num(a)?..num(b)?);
        } else {
            out.push(num(part)?);
        }
    }
    if out.is_empty() {
        return Err(format!("no seeds in {s:?}"));
    }
    Ok(out)
}
