//! Subcommands: `tune`, `bench`, `replay`, `export`.

use std::io::Write;
use std::path::PathBuf;

use boil_core::gp::KernelKind;
use boil_core::objective::true_best;
use boil_core::optimizer::{Method, PreferenceChoice};
use boil_core::stats::median;
use clap::{Args, Parser, Subcommand};

use crate::bench::{cost_to_reach, reference_preference, report_rows, run_all, write_report};
use crate::config::{parse_kernel, parse_method, parse_preference, parse_seeds, Resolved, RunConfig};
use crate::records::{export_csv, read_log, replay};
use crate::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "boil", version, about = "Bayesian optimization over hyperparameters and training length")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one method for each seed.
    Tune(Overrides),
    /// Run several methods for each seed and write report.csv.
    Bench(Overrides),
    /// Summarize a run log.
    Replay {
        log: PathBuf,
        /// Print the summary as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Convert a run log to CSV.
    Export {
        log: PathBuf,
        /// Output file; standard output when omitted.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

/// Parsed `--seeds`; a newtype so clap takes it as one value.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedList(pub Vec<u64>);

fn parse_seed_list(s: &str) -> Result<SeedList, String> {
    parse_seeds(s).map(SeedList)
}

#[derive(Debug, Args, Default)]
pub struct Overrides {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// A single seed.
    #[arg(long, conflicts_with = "seeds")]
    pub seed: Option<u64>,
    /// Seeds as a list or range: `1,2,5`, `0..20`, `0..=19`.
    #[arg(long, value_parser = parse_seed_list)]
    pub seeds: Option<SeedList>,
    #[arg(long, value_parser = parse_method)]
    pub method: Option<Method>,
    /// Comma-separated methods for `bench`.
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    pub methods: Option<Vec<Method>>,
    #[arg(long)]
    pub fixture: Option<String>,
    /// Search steps after the initial design.
    #[arg(long)]
    pub n: Option<usize>,
    /// Most augmented points per curve.
    #[arg(long)]
    pub m: Option<usize>,
    /// Log condition-number threshold for augmentation.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, value_parser = parse_kernel)]
    pub kernel: Option<KernelKind>,
    /// sigmoid, log, average or average:W.
    #[arg(long, value_parser = parse_preference)]
    pub preference: Option<PreferenceChoice>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self) -> CliResult<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            c.seeds = vec![s];
        }
        if let Some(s) = &self.seeds {
            c.seeds = s.0.clone();
        }
        if let Some(m) = self.method {
            c.method = m;
        }
        if let Some(m) = &self.methods {
            c.methods = m.clone();
        }
        if let Some(f) = &self.fixture {
            c.fixture = Some(f.clone());
            c.space = None;
        }
        if let Some(n) = self.n {
            c.n = n;
        }
        if let Some(m) = self.m {
            c.m = m;
        }
        if let Some(d) = self.delta {
            c.delta = d;
        }
        if let Some(k) = self.kernel {
            c.kernel = k;
        }
        if let Some(p) = self.preference {
            c.preference = p;
        }
        if let Some(o) = &self.output_dir {
            c.output_dir = o.clone();
        }
        Ok(c)
    }
}

fn fmt_x(x: &[f64]) -> String {
    let parts: Vec<String> = x.iter().map(|v| format!("{v:.6}")).collect();
    format!("[{}]", parts.join(", "))
}

pub fn tune(cfg: &Resolved) -> CliResult<()> {
    let results = run_all(cfg, &[cfg.config.method])?;
    for r in &results {
        println!(
            "{} seed {}: x* {} y* {:.6} cost {:.6} evaluations {} augmented {}",
            r.method.tag(),
            r.seed,
            fmt_x(&r.x_star),
            r.y_star,
            r.total_cost,
            r.evaluations,
            r.augmented
        );
    }
    Ok(())
}

pub fn bench(cfg: &Resolved) -> CliResult<()> {
    let methods = &cfg.config.methods;
    if methods.len() < 2 {
        return Err(CliError::Config("bench needs at least two methods".into()));
    }
    let results = run_all(cfg, methods)?;
    let truth = cfg.spec.as_ref().map(|s| (s, &cfg.space));
    let per_run: Vec<_> = results.iter().map(|r| report_rows(r, truth)).collect();
    let rows: Vec<_> = per_run.iter().flatten().cloned().collect();
    let path = cfg.config.output_dir.join("report.csv");
    write_report(&path, &rows)?;
    println!("wrote {} ({} rows)", path.display(), rows.len());
    if let Some(spec) = &cfg.spec {
        let (_, u_star) = true_best(spec, &cfg.space, &reference_preference(&cfg.space))?;
        for m in methods {
            let costs: Vec<f64> = results
                .iter()
                .zip(&per_run)
                .filter(|(r, _)| r.method == *m)
                .map(|(_, rows)| cost_to_reach(rows, 0.95 * u_star))
                .collect();
            println!("{:10} median cost to 95% of best utility: {:.6}", m.tag(), median(&costs));
        }
    }
    Ok(())
}

pub fn main_with(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Tune(o) => tune(&o.apply()?.resolve()?),
        Command::Bench(o) => bench(&o.apply()?.resolve()?),
        Command::Replay { log, json } => {
            let s = replay(&read_log(&log)?);
            if json {
                println!("{}", serde_json::to_string_pretty(&s).expect("summary serializes"));
            } else {
                print!("{s}");
            }
            Ok(())
        }
        Command::Export { log, output } => {
            let loaded = read_log(&log)?;
            match output {
                Some(p) => {
                    let f = std::fs::File::create(&p).map_err(|e| CliError::io(format!("creating {}", p.display()), e))?;
                    export_csv(&loaded, f)
                }
                None => {
                    let stdout = std::io::stdout();
                    let mut lock = stdout.lock();
                    export_csv(&loaded, &mut lock)?;
                    lock.flush().map_err(|e| CliError::io("writing stdout", e))
                }
            }
        }
    }
}
