//! Runs an external training process for each evaluation.
//!
//! The child gets one JSON object on stdin,
//! `{"params": {name: value, ...}, "max_iter": t, "seed": s}`, and answers
//! with one `ITER <u> SCORE <float> COST <float>` line per iteration on
//! stdout. Lines starting with `#` are comments.

use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::{Child, Command, Stdio};
use std::sync::mpsc;
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use boil_core::compression::LearningCurve;
use boil_core::objective::Objective;
use boil_core::{BoilError, SearchSpace};
use wait_timeout::ChildExt;

/// Lines of stderr kept in failure messages.
const STDERR_TAIL: usize = 20;

#[derive(Debug)]
pub struct ExternalObjective {
    command: Vec<String>,
    working_dir: Option<PathBuf>,
    timeout: Duration,
    names: Vec<String>,
    seed: u64,
    // one child at a time per handle
    lock: Mutex<()>,
}

impl ExternalObjective {
    pub fn new(
        command: Vec<String>,
        working_dir: Option<PathBuf>,
        timeout_s: f64,
        space: &SearchSpace,
        seed: u64,
    ) -> boil_core::Result<Self> {
        if command.is_empty() {
            return Err(BoilError::InvalidInput("external objective needs a command".into()));
        }
        if !(timeout_s > 0.0) || !timeout_s.is_finite() {
            return Err(BoilError::InvalidInput(format!("timeout must be positive, got {timeout_s}")));
        }
        Ok(ExternalObjective {
            command,
            working_dir,
            timeout: Duration::from_secs_f64(timeout_s),
            names: space.dims.iter().map(|d| d.name.clone()).collect(),
            seed,
            lock: Mutex::new(()),
        })
    }

    pub fn request(&self, x: &[f64], t: u32) -> String {
        let params: serde_json::Map<String, serde_json::Value> =
            self.names.iter().cloned().zip(x.iter().map(|v| serde_json::json!(v))).collect();
        serde_json::json!({ "params": params, "max_iter": t, "seed": self.seed }).to_string()
    }

    fn spawn(&self) -> std::io::Result<Child> {
        let mut cmd = Command::new(&self.command[0]);
        cmd.args(&self.command[1..]).stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped());
        if let Some(dir) = &self.working_dir {
            cmd.current_dir(dir);
        }
        cmd.spawn()
    }
}

fn fail(msg: String, stderr: &str) -> BoilError {
    let lines: Vec<&str> = stderr.lines().collect();
    let tail = lines[lines.len().saturating_sub(STDERR_TAIL)..].join("\n");
    if tail.trim().is_empty() {
        BoilError::Objective(msg)
    } else {
        BoilError::Objective(format!("{msg}\nstderr:\n{tail}"))
    }
}

fn drain<R: Read + Send + 'static>(pipe: Option<R>) -> mpsc::Receiver<String> {
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        let mut buf = Vec::new();
        if let Some(mut p) = pipe {
            let _ = p.read_to_end(&mut buf);
        }
        let _ = tx.send(String::from_utf8_lossy(&buf).into_owned());
    });
    rx
}

impl Objective for ExternalObjective {
    fn evaluate(&self, x: &[f64], t: u32) -> boil_core::Result<LearningCurve> {
        if x.len() != self.names.len() {
            return Err(BoilError::InvalidInput(format!("expected {} parameters, got {}", self.names.len(), x.len())));
        }
        let _guard = self.lock.lock().unwrap_or_else(|p| p.into_inner());
        let mut child = self
            .spawn()
            .map_err(|e| BoilError::Objective(format!("cannot start {:?}: {e}", self.command[0])))?;
        let stdout = drain(child.stdout.take());
        let stderr = drain(child.stderr.take());
        if let Some(mut stdin) = child.stdin.take() {
            // a child that exits without reading its input is judged by its exit status
            let _ = stdin.write_all(self.request(x, t).as_bytes());
        }
        let status = match child.wait_timeout(self.timeout) {
            Ok(Some(status)) => status,
            Ok(None) => {
                let _ = child.kill();
                let _ = child.wait();
                // grandchildren may still hold the pipes open, so do not wait long
                let err = stderr.recv_timeout(Duration::from_millis(200)).unwrap_or_default();
                return Err(fail(format!("timed out after {:.3} s", self.timeout.as_secs_f64()), &err));
            }
            Err(e) => {
                let _ = child.kill();
                return Err(BoilError::Objective(format!("waiting for the trainer failed: {e}")));
            }
        };
        let out = stdout.recv().unwrap_or_default();
        let err = stderr.recv().unwrap_or_default();
        if !status.success() {
            return Err(fail(format!("trainer exited with {status}"), &err));
        }
        parse_curve(&out, x, t).map_err(|m| fail(m, &err))
    }
}

/// Parses a trainer's standard output into a curve of exactly `t` iterations.
pub fn parse_curve(stdout: &str, x: &[f64], t: u32) -> Result<LearningCurve, String> {
    let mut scores = Vec::with_capacity(t as usize);
    let mut costs = Vec::with_capacity(t as usize);
    for (lineno, line) in stdout.lines().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let bad = |why: &str| format!("line {}: {why}: {line:?}", lineno + 1);
        let tok: Vec<&str> = line.split_whitespace().collect();
        let [ "ITER", u, "SCORE", score, "COST", cost ] = tok[..] else {
            return Err(bad("expected `ITER <u> SCORE <float> COST <float>`"));
        };
        let u: u32 = u.parse().map_err(|_| bad("iteration is not an integer"))?;
        if u as usize != scores.len() + 1 {
            return Err(bad(&format!("expected iteration {}", scores.len() + 1)));
        }
        if u > t {
            return Err(bad(&format!("more than the {t} iterations requested")));
        }
        let score: f64 = score.parse().map_err(|_| bad("score is not a number"))?;
        let cost: f64 = cost.parse().map_err(|_| bad("cost is not a number"))?;
        if !score.is_finite() || !cost.is_finite() {
            return Err(bad("non-finite value"));
        }
        scores.push(score);
        costs.push(cost);
    }
    if scores.len() != t as usize {
        return Err(format!("trainer reported {} of {t} iterations", scores.len()));
    }
    LearningCurve::new(x.to_vec(), scores, costs).map_err(|e| e.to_string())
}
