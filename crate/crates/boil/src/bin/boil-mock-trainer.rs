//! A stand-in trainer for the external objective: reads a request on
//! stdin and prints the simulator's curve for it using the line protocol.
//! The extra flags make it misbehave on purpose.

use std::io::{Read, Write};
use std::process::ExitCode;
use std::time::Duration;

use boil_core::objective::{fixture, Objective};
use clap::Parser;
use serde::Deserialize;

#[derive(Parser)]
struct Args {
    /// Search space and response surface to simulate.
    #[arg(long, default_value = "synthetic-1d")]
    fixture: String,
    /// Exit with this status after printing the curve.
    #[arg(long, default_value_t = 0)]
    exit_code: u8,
    /// Print a malformed line in place of this iteration.
    #[arg(long)]
    garbage_at: Option<u32>,
    /// Sleep before answering.
    #[arg(long)]
    sleep_ms: Option<u64>,
}

#[derive(Deserialize)]
struct Request {
    params: serde_json::Map<String, serde_json::Value>,
    max_iter: u32,
    seed: u64,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mut input = String::new();
    if let Err(e) = std::io::stdin().read_to_string(&mut input) {
        eprintln!("reading request: {e}");
        return ExitCode::from(3);
    }
    let req: Request = match serde_json::from_str(&input) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("bad request: {e}");
            return ExitCode::from(3);
        }
    };
    let fx = match fixture(&args.fixture) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(3);
        }
    };
    let mut x = Vec::with_capacity(fx.space.dim());
    for d in &fx.space.dims {
        match req.params.get(&d.name).and_then(|v| v.as_f64()) {
            Some(v) => x.push(v),
            None => {
                eprintln!("missing parameter {:?}", d.name);
                return ExitCode::from(3);
            }
        }
    }
    if let Some(ms) = args.sleep_ms {
        std::thread::sleep(Duration::from_millis(ms));
    }
    let curve = match fx.objective(req.seed).and_then(|o| o.evaluate(&x, req.max_iter)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(3);
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let _ = writeln!(out, "# mock trainer, fixture {}", args.fixture);
    for (i, (s, c)) in curve.scores.iter().zip(&curve.cum_cost).enumerate() {
        let u = i as u32 + 1;
        if args.garbage_at == Some(u) {
            let _ = writeln!(out, "ITER {u} SCORE oops");
            continue;
        }
        // Display prints the shortest string that parses back to the same f64
        let _ = writeln!(out, "ITER {u} SCORE {s} COST {c}");
    }
    let _ = out.flush();
    if args.exit_code != 0 {
        eprintln!("giving up as asked");
    }
    ExitCode::from(args.exit_code)
}
