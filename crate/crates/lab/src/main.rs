use clap::{Args, Parser, Subcommand, ValueEnum};
use lab::harness::{self, Experiment, ExperimentConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "lab",
    about = "Teacher/student CNN recovery experiments and lemma verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Success-rate grid over (k, ratio) cells
    Table1(CommonArgs),
    /// Per-iteration trajectories of the annealed algorithms
    Trajectory(CommonArgs),
    /// Overparameterized finite-sample run from the spurious point
    Overparam(CommonArgs),
    /// Monte-Carlo verification of the expectation bounds
    Verify(CommonArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Pgd,
    Gd,
    Psgd,
}

#[derive(Args)]
struct CommonArgs {
    /// Flat key = value config file
    #[arg(long)]
    config: PathBuf,
    /// Master seed (falls back to LAB_SEED, then the config file)
    #[arg(long, env = "LAB_SEED")]
    seed: Option<u64>,
    /// Trials per cell / per experiment
    #[arg(long)]
    trials: Option<usize>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    algorithm: Option<AlgorithmArg>,
    /// Relative squared tolerance on ‖a − a*‖²
    #[arg(long)]
    tol_a: Option<f64>,
    /// Tolerance on the final angle to w*
    #[arg(long)]
    tol_phi: Option<f64>,
}

impl CommonArgs {
    fn into_config(self, experiment: Experiment) -> lab::Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(experiment, &self.config)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(trials) = self.trials {
            cfg.trials = trials;
        }
        if let Some(out) = self.out {
            cfg.out_dir = out;
        }
        if let Some(algorithm) = self.algorithm {
            cfg.algorithm = match algorithm {
                AlgorithmArg::Pgd => harness::Algorithm::Pgd,
                AlgorithmArg::Gd => harness::Algorithm::Gd,
                AlgorithmArg::Psgd => harness::Algorithm::Psgd,
            };
        }
        if let Some(tol_a) = self.tol_a {
            cfg.tol_a = tol_a;
        }
        if let Some(tol_phi) = self.tol_phi {
            cfg.tol_phi = tol_phi;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run() -> lab::Result<ExitCode> {
    match Cli::parse().command {
        Command::Table1(args) => {
            let cfg = args.into_config(Experiment::Table1)?;
            let table = harness::run_table1(&cfg)?;
            print!("{}", table.to_csv());
        }
        Command::Trajectory(args) => {
            let cfg = args.into_config(Experiment::Trajectory)?;
            let summary = harness::run_trajectory(&cfg)?;
            let transitions = summary.phase_transitions.iter().filter(|x| **x).count();
            println!(
                "trials: {}  successes: {}  phase transitions: {}",
                summary.trials, summary.successes, transitions
            );
        }
        Command::Overparam(args) => {
            let cfg = args.into_config(Experiment::Overparam)?;
            let report = harness::run_overparam(&cfg)?;
            println!(
                "loss: {} -> {}  grad norm: {} -> {}",
                report.initial_loss,
                report.final_loss,
                report.initial_grad_norm,
                report.final_grad_norm
            );
        }
        Command::Verify(args) => {
            let cfg = args.into_config(Experiment::Verify)?;
            let results = harness::run_verify(&cfg)?;
            let failures = results.iter().filter(|c| !c.pass).count();
            println!(
                "{} claims checked, {} failed (report in {})",
                results.len(),
                failures,
                cfg.out_dir.display()
            );
            if failures > 0 {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
