use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use snla::harness::{evaluate_checkpoint, parse_list, run_experiment, ExperimentConfig, ExperimentReport};
use snla::nnopt::AlgorithmTag;
use snla::{Error, Result};

#[derive(Parser)]
#[command(name = "snla", version, about = "Link adaptation experiments for short-packet industrial links")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train, test and gate the configured trials.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// sac, ddpg, td3, ql, ra or mr.
        #[arg(long)]
        algo: Option<String>,
        /// Outage weight ω1 for every trial.
        #[arg(long)]
        w1: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Test a saved checkpoint with the deterministic policy.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Random-weight trials and their Pareto front.
    Pareto {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// One trial per listed outage weight.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated ω1 values.
        #[arg(long)]
        weights: String,
    },
}

fn load(path: &Path) -> Result<ExperimentConfig> {
    ExperimentConfig::from_file(path)
}

fn finish(cfg: ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let report = run_experiment(&cfg)?;
    for r in &report.records {
        println!(
            "trial {:>3}  {}  w1={:.4}  gate={}  pass={:.3}  energy={:.4}  exceed={:.3e}  max_run={}",
            r.trial_index,
            r.algorithm,
            r.weight_outage,
            if r.result.gate_passed { "pass" } else { "fail" },
            r.result.pass_fraction(cfg.env.availability_target),
            r.result.mean_energy_fraction,
            r.result.exceedance_prob,
            r.result.max_run_length,
        );
    }
    println!("front: {} point(s), artifacts in {}", report.front.len(), cfg.output_dir.display());
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(report)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train {
            config,
            algo,
            w1,
            seed,
            out,
        } => {
            let mut cfg = load(&config)?;
            if let Some(name) = algo {
                cfg.algorithm = AlgorithmTag::parse(&name)
                    .ok_or_else(|| Error::Config {
                        field: "algo".into(),
                        reason: format!("unknown algorithm {name:?}"),
                    })?;
            }
            if let Some(w) = w1 {
                cfg.weight_list = vec![w];
            }
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            if let Some(dir) = out {
                cfg.output_dir = dir;
            }
            finish(cfg)?;
        }
        Command::Eval {
            checkpoint,
            config,
            seed,
        } => {
            let cfg = load(&config)?;
            let r = evaluate_checkpoint(&checkpoint, &cfg, seed)?;
            let summary = json!({
                "gate_passed": r.gate_passed,
                "pass_fraction": r.pass_fraction(cfg.env.availability_target),
                "mean_energy_fraction": r.mean_energy_fraction,
                "exceedance_prob": r.exceedance_prob,
                "run_exceedance_prob": r.run_exceedance_prob,
                "max_run_length": r.max_run_length,
                "mean_reward": r.mean_reward,
                "episodes": r.episode_availability.len(),
            });
            println!("{}", serde_json::to_string_pretty(&summary).expect("plain json"));
        }
        Command::Pareto { config, trials } => {
            let mut cfg = load(&config)?;
            cfg.weight_list.clear();
            if let Some(t) = trials {
                cfg.trials = t;
            }
            finish(cfg)?;
        }
        Command::Sweep { config, weights } => {
            let mut cfg = load(&config)?;
            cfg.weight_list = parse_list("weights", &weights)?;
            if cfg.weight_list.is_empty() {
                return Err(Error::Config {
                    field: "weights".into(),
                    reason: "at least one weight is required".into(),
                });
            }
            cfg.trials = cfg.weight_list.len();
            finish(cfg)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
