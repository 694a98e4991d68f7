//! Trial orchestration: train, test with the deterministic policy, apply the
//! availability gate, persist checkpoints and artifacts.

mod artifacts;
mod config;
mod seed;

pub use artifacts::{write_artifacts, ARTIFACT_FILES};
pub use config::{parse_list, ExperimentConfig, RANDOM_WEIGHT_RANGE};
pub use seed::derive_seed;

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agents::{agent_from_checkpoint, new_agent, ActMode, Agent};
use crate::environment::{EnvConfig, Environment};
use crate::error::{Error, Result};
use crate::metrics::{pareto_filter, EpisodeLog, ParetoPoint, TrialResult};
use crate::nnopt::{AlgorithmTag, Checkpoint};

/// Environment variable capping the number of trials run in parallel.
pub const WORKERS_ENV: &str = "SNLA_WORKERS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_index: usize,
    pub algorithm: String,
    pub weight_outage: f64,
    pub agent_seed: u64,
    pub train_seed: u64,
    pub test_seed: u64,
    /// Present iff the gate passed.
    pub checkpoint_path: Option<PathBuf>,
    pub result: TrialResult,
    /// Mean reward of every training episode.
    pub training_reward_trace: Vec<f64>,
    pub train_steps: u64,
    pub converged: bool,
}

impl TrialRecord {
    pub fn label(&self) -> String {
        format!("{}-t{}-w{:.4}", self.algorithm, self.trial_index, self.weight_outage)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub records: Vec<TrialRecord>,
    pub front: Vec<ParetoPoint>,
    pub warnings: Vec<String>,
}

/// Outcome of the training phase.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSummary {
    pub reward_trace: Vec<f64>,
    pub steps: u64,
    pub converged: bool,
}

/// `|mean(last W) − mean(previous W)| < tol` once `2W` episodes exist.
pub fn has_converged(trace: &[f64], window: usize, tol: f64) -> bool {
    if window == 0 || trace.len() < 2 * window {
        return false;
    }
    let n = trace.len();
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    (mean(&trace[n - window..]) - mean(&trace[n - 2 * window..n - window])).abs() < tol
}

/// ω1 of a trial: cycled from the list, or drawn uniformly on
/// [`RANDOM_WEIGHT_RANGE`] when the list is empty.
pub fn trial_weight(cfg: &ExperimentConfig, trial: usize) -> f64 {
    if cfg.weight_list.is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.master_seed, trial as u64, "weight"));
        let (lo, hi) = RANDOM_WEIGHT_RANGE;
        rng.gen_range(lo..hi)
    } else {
        cfg.weight_list[trial % cfg.weight_list.len()]
    }
}

/// Runs training episodes of `env.episode_steps` until the budget is spent
/// or the reward trace plateaus.
pub fn train_agent(
    agent: &mut dyn Agent,
    env_cfg: &EnvConfig,
    budget_steps: u64,
    window: usize,
    tol: f64,
    seed: u64,
) -> Result<TrainingSummary> {
    let mut env = Environment::new(env_cfg.clone())?;
    let mut trace = Vec::new();
    let mut steps = 0u64;
    let mut converged = false;
    let mut episode = 0u64;
    while steps < budget_steps {
        let mut obs = env.reset(derive_seed(seed, episode, "episode"));
        let mut total = 0.0;
        let mut n = 0u32;
        while n < env_cfg.episode_steps && steps < budget_steps {
            let action = agent.act(obs, ActMode::Explore);
            let out = env.step(&action)?;
            if let Some(stats) = agent.learn(obs, &action, out.reward, out.next_state_sinr_db)? {
                let losses = [stats.critic1_loss, stats.critic2_loss.unwrap_or(0.0), stats.actor_loss.unwrap_or(0.0)];
                if losses.iter().any(|l| !l.is_finite()) {
                    return Err(Error::Diverged {
                        step: steps,
                        reason: "non-finite loss".into(),
                    });
                }
            }
            total += out.reward;
            obs = out.next_state_sinr_db;
            steps += 1;
            n += 1;
        }
        agent.end_episode();
        if !agent.params_finite() {
            return Err(Error::Diverged {
                step: steps,
                reason: "non-finite parameters".into(),
            });
        }
        trace.push(total / f64::from(n));
        episode += 1;
        if has_converged(&trace, window, tol) {
            converged = true;
            break;
        }
    }
    Ok(TrainingSummary {
        reward_trace: trace,
        steps,
        converged,
    })
}

/// Deterministic rollouts over `episodes` fresh episodes seeded from `seed`.
pub fn test_policy(
    agent: &mut dyn Agent,
    env_cfg: &EnvConfig,
    episodes: usize,
    steps: u32,
    seed: u64,
) -> Result<Vec<EpisodeLog>> {
    let mut env = Environment::new(env_cfg.clone())?;
    let mut logs = Vec::with_capacity(episodes);
    for e in 0..episodes {
        let mut obs = env.reset(derive_seed(seed, e as u64, "episode"));
        let mut log = EpisodeLog::with_capacity(steps as usize);
        for _ in 0..steps {
            let action = agent.act(obs, ActMode::Deterministic);
            let out = env.step(&action)?;
            log.push(&out);
            obs = out.next_state_sinr_db;
        }
        logs.push(log);
    }
    Ok(logs)
}

/// Rebuilds the policy from `checkpoint` and runs the test phase.
pub fn evaluate_policy(
    checkpoint: &Checkpoint,
    env_cfg: &EnvConfig,
    episodes: usize,
    steps: u32,
    seed: u64,
) -> Result<TrialResult> {
    let mut agent = agent_from_checkpoint(checkpoint, env_cfg, seed)?;
    let logs = test_policy(agent.as_mut(), env_cfg, episodes, steps, seed)?;
    TrialResult::from_logs(&logs, env_cfg)
}

/// Test phase of a saved checkpoint under `cfg`, with ω1 taken from the
/// first entry of `weight_list` when there is one.
pub fn evaluate_checkpoint(path: &Path, cfg: &ExperimentConfig, seed: u64) -> Result<TrialResult> {
    cfg.validate()?;
    let checkpoint = Checkpoint::load(path)?;
    let w1 = cfg.weight_list.first().copied().unwrap_or(cfg.env.weight_outage);
    evaluate_policy(&checkpoint, &cfg.env_with_weight(w1), cfg.test_episodes, cfg.test_steps, seed)
}

/// Creates `dir` and checks that files can be written there.
pub fn ensure_writable(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let probe = dir.join(".snla-write-probe");
    fs::write(&probe, b"").map_err(|e| Error::io(&probe, e))?;
    fs::remove_file(&probe).map_err(|e| Error::io(&probe, e))
}

pub fn checkpoint_file_name(algorithm: AlgorithmTag, trial: usize) -> String {
    format!("{}_trial_{trial:03}.ckpt", algorithm.name())
}

/// One pass of the train–test–gate loop.
pub fn run_trial(cfg: &ExperimentConfig, trial_index: usize) -> Result<TrialRecord> {
    cfg.validate()?;
    ensure_writable(&cfg.output_dir)?;
    let t = trial_index as u64;
    let weight = trial_weight(cfg, trial_index);
    let env_cfg = cfg.env_with_weight(weight);
    let agent_seed = derive_seed(cfg.master_seed, t, "agent");
    let train_seed = derive_seed(cfg.master_seed, t, "train");
    let test_seed = derive_seed(cfg.master_seed, t, "test");

    let mut agent = new_agent(cfg.algorithm, &env_cfg, agent_seed)?;
    let summary = match cfg.algorithm {
        AlgorithmTag::Mr | AlgorithmTag::Ra => TrainingSummary {
            reward_trace: Vec::new(),
            steps: 0,
            converged: true,
        },
        _ => train_agent(
            agent.as_mut(),
            &env_cfg,
            cfg.train_budget_steps,
            cfg.convergence_window,
            cfg.convergence_tol,
            train_seed,
        )?,
    };

    // testing goes through the checkpoint so a saved model reproduces it
    let checkpoint = agent.checkpoint();
    let result = evaluate_policy(&checkpoint, &env_cfg, cfg.test_episodes, cfg.test_steps, test_seed)?;
    let checkpoint_path = if result.gate_passed {
        let path = cfg.output_dir.join(checkpoint_file_name(cfg.algorithm, trial_index));
        checkpoint.save(&path)?;
        Some(path)
    } else {
        None
    };
    Ok(TrialRecord {
        trial_index,
        algorithm: cfg.algorithm.name().to_string(),
        weight_outage: weight,
        agent_seed,
        train_seed,
        test_seed,
        checkpoint_path,
        result,
        training_reward_trace: summary.reward_trace,
        train_steps: summary.steps,
        converged: summary.converged,
    })
}

/// Worker count from [`WORKERS_ENV`], if set.
pub fn configured_workers() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(Error::config(WORKERS_ENV, format!("expected a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(None),
    }
}

/// Pareto points of the gate-passing trials.
pub fn gated_points(records: &[TrialRecord]) -> Result<Vec<ParetoPoint>> {
    records
        .iter()
        .filter(|r| r.result.gate_passed)
        .map(|r| ParetoPoint::new(r.result.mean_scaled_energy, r.result.exceedance_prob, r.label()))
        .collect()
}

/// Runs all trials (in parallel up to the worker cap), filters the front
/// and writes the artifacts to `cfg.output_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    ensure_writable(&cfg.output_dir)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = configured_workers()? {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::State(format!("cannot start worker pool: {e}")))?;
    let records = pool.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| run_trial(cfg, t))
            .collect::<Result<Vec<_>>>()
    })?;
    let front = pareto_filter(&gated_points(&records)?);
    let mut warnings = Vec::new();
    if front.is_empty() {
        warnings.push(format!(
            "no trial passed the availability gate; the Pareto front is empty ({} trials)",
            records.len()
        ));
    }
    let report = ExperimentReport {
        records,
        front,
        warnings,
    };
    write_artifacts(cfg, &report)?;
    Ok(report)
}
