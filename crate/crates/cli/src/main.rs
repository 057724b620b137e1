//! `roughshe`: reproducible experiment runner.
//!
//! Exit codes: 0 all checks pass, 1 an assertion failed, 2 invalid
//! configuration, 3 numerical failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod artifacts;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{Map, Value};

use config::{Experiment, ExperimentConfig};

#[derive(Parser)]
#[command(name = "roughshe", version, about = "Experiments for the stochastic heat equation with rough spatial noise")]
struct Cli {
    /// Worker threads; defaults to ROUGHSHE_WORKERS, then all cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    VerifyKernels(RunArgs),
    Isometry(RunArgs),
    SimulateAdditive(RunArgs),
    SupGrowth(RunArgs),
    Holder(RunArgs),
    Nsup(RunArgs),
    Nonlinear(RunArgs),
    Factorization(RunArgs),
    /// Re-render a summary from an artifact directory's CSV.
    Report {
        #[arg(long)]
        dir: PathBuf,
    },
}

#[derive(Args, Default)]
struct RunArgs {
    /// JSON config file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Artifact directory [default: runs/<experiment>].
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    l: Option<Vec<f64>>,
    #[arg(long)]
    nt: Option<usize>,
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    shifts: Option<Vec<f64>>,
    /// Increment direction for `holder`.
    #[arg(long, value_parser = ["space", "time"])]
    kind: Option<String>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    psi0_l: Option<Vec<f64>>,
    #[arg(long)]
    psi0_shift: Option<f64>,
    /// sin, u, or const:<value>.
    #[arg(long)]
    sigma: Option<String>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    p: Option<u32>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    probes: Option<Vec<f64>>,
}

impl RunArgs {
    fn flags(&self) -> Map<String, Value> {
        let mut m = Map::new();
        let mut put = |k: &str, v: Option<Value>| {
            if let Some(v) = v {
                m.insert(k.into(), v);
            }
        };
        put("h", self.h.map(Value::from));
        put("t", self.t.map(Value::from));
        put("l", self.l.clone().map(Value::from));
        put("nt", self.nt.map(Value::from));
        put("nx", self.nx.map(Value::from));
        put("paths", self.paths.map(Value::from));
        put("seed", self.seed.map(Value::from));
        put("shifts", self.shifts.clone().map(Value::from));
        put("kind", self.kind.clone().map(Value::from));
        put("theta", self.theta.map(Value::from));
        put("psi0_l", self.psi0_l.clone().map(Value::from));
        put("psi0_shift", self.psi0_shift.map(Value::from));
        put("sigma", self.sigma.clone().map(Value::from));
        put("eps", self.eps.map(Value::from));
        put("p", self.p.map(Value::from));
        put("tol", self.tol.map(Value::from));
        put("max_iter", self.max_iter.map(Value::from));
        put("alphas", self.alphas.clone().map(Value::from));
        put("probes", self.probes.clone().map(Value::from));
        m
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    use roughshe::Error::*;
    match e.downcast_ref::<roughshe::Error>() {
        Some(Domain(_) | Config(_)) => 2,
        Some(Quadrature { .. } | Extrapolation(_) | Cholesky(_) | Numerical(_) | NotConverged { .. }) => 3,
        None => 3,
    }
}

fn init_workers(flag: Option<usize>) -> anyhow::Result<()> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var("ROUGHSHE_WORKERS") {
            Ok(v) => Some(v.trim().parse().map_err(|_| anyhow::anyhow!("ROUGHSHE_WORKERS = {v:?} is not a worker count"))?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            anyhow::bail!("worker count must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run_experiment(experiment: Experiment, args: RunArgs) -> ExitCode {
    let config = match ExperimentConfig::resolve(experiment, args.config.as_deref(), args.flags()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let out = args.out.unwrap_or_else(|| PathBuf::from("runs").join(experiment.name()));
    let art = match commands::run(&config) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(exit_code(&e));
        }
    };
    if let Err(e) = artifacts::write_run(&out, &config, &art) {
        eprintln!("error: {e:#}");
        return ExitCode::from(3);
    }
    println!("{}: {} ({})", experiment.name(), if art.pass { "PASS" } else { "FAIL" }, out.display());
    ExitCode::from(if art.pass { 0 } else { 1 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_workers(cli.workers) {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    let (experiment, args) = match cli.command {
        Command::Report { dir } => {
            return match artifacts::report(&dir) {
                Ok((text, pass)) => {
                    print!("{text}");
                    if let Err(e) = std::fs::write(dir.join("report.txt"), &text) {
                        eprintln!("error: writing report.txt: {e}");
                        return ExitCode::from(3);
                    }
                    ExitCode::from(if pass { 0 } else { 1 })
                }
                Err(e) => {
                    eprintln!("error: {e:#}");
                    ExitCode::from(2)
                }
            };
        }
        Command::VerifyKernels(a) => (Experiment::VerifyKernels, a),
        Command::Isometry(a) => (Experiment::Isometry, a),
        Command::SimulateAdditive(a) => (Experiment::SimulateAdditive, a),
        Command::SupGrowth(a) => (Experiment::SupGrowth, a),
        Command::Holder(a) => (Experiment::Holder, a),
        Command::Nsup(a) => (Experiment::Nsup, a),
        Command::Nonlinear(a) => (Experiment::Nonlinear, a),
        Command::Factorization(a) => (Experiment::Factorization, a),
    };
    run_experiment(experiment, args)
}
