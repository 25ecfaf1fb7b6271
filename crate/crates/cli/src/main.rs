//! Experiment runner: seeded linearization runs, one CSV row per run.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use linearize::engine::{default_max_rounds, run_scenario, Corruption, Scenario, Topology};
use linearize::experiment::{run_experiments, write_csv, ExperimentSpec};
use linearize::protocol::Variant;
use linearize::supervisor::SupervisorMode;

#[derive(Debug, Parser)]
#[command(name = "linearize", version, about = "Run seeded linearization experiments and emit metrics as CSV")]
struct Cli {
    /// Number of nodes.
    #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u64).range(1..=100_000))]
    n: u64,

    /// Initial topology: random_connected, path, star, two_clusters, far_pair.
    #[arg(long, default_value = "random_connected")]
    topology: Topology,

    /// Supervisor: honest, none, split, sybil, wrong-vids, cycle, partial, stale.
    #[arg(long, default_value = "honest")]
    supervisor: SupervisorMode,

    /// Seed of the first run; run k uses seed + k.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Runs per invocation.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    reps: u64,

    /// Round cap per run [default: max(10·n, 200)].
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    max_rounds: Option<u64>,

    /// Initial-state corruption: none, garbage_flyover_vars, stale_channel_messages, all.
    #[arg(long, default_value = "none")]
    corruption: Corruption,

    /// CSV output path [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,

    /// Write per-round JSON trace records to this file.
    #[arg(long)]
    trace: Option<PathBuf>,
}

impl Cli {
    fn scenario(&self) -> Scenario {
        let n = self.n as usize;
        Scenario {
            n,
            topology: self.topology,
            supervisor: self.supervisor,
            seed: self.seed,
            max_rounds: self.max_rounds.unwrap_or_else(|| default_max_rounds(n)),
            corruption: self.corruption,
            variant: Variant::Standard,
        }
    }
}

fn write_traces(spec: &ExperimentSpec, path: &PathBuf) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    for s in spec.runs() {
        writeln!(w, "{{\"run_seed\":{}}}", s.seed)?;
        run_scenario(&s, Some(&mut w))?;
    }
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    let spec = ExperimentSpec { scenarios: vec![cli.scenario()], reps: cli.reps, out: cli.out.clone() };
    let rows = run_experiments(&spec)?;
    match &spec.out {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            write_csv(&rows, BufWriter::new(file))?;
        }
        None => write_csv(&rows, io::stdout().lock())?,
    }
    if let Some(path) = &cli.trace {
        write_traces(&spec, path)?;
    }
    Ok(rows.iter().all(|r| !r.has_violation()))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: a run recorded a connectivity or sybil violation");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
