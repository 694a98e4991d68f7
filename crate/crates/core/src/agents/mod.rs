//! Decision makers. Every agent maps an SINR observation (dB) to an
//! [`Action`] inside the configured box and may learn from the resulting
//! transition; none of them needs anything else from the environment.

mod ddpg;
mod qlearning;
mod reference;
mod sac;
mod td3;

pub use ddpg::{DdpgAgent, DdpgConfig};
pub use qlearning::{QlConfig, TabularQAgent};
pub use reference::{MaxResources, RandomAssignment};
pub use sac::{SacAgent, SacConfig};
pub use td3::{Td3Agent, Td3Config};

use crate::environment::{Action, EnvConfig, OBS_MAX_DB, OBS_MIN_DB};
use crate::error::{Error, Result};
use crate::nnopt::{AlgorithmTag, Checkpoint, Matrix, Transition};

/// Whether an action is for exploration (training) or evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActMode {
    Explore,
    Deterministic,
}

/// Loss diagnostics of one gradient update.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateStats {
    pub critic1_loss: f64,
    pub critic2_loss: Option<f64>,
    pub actor_loss: Option<f64>,
    pub mean_entropy: Option<f64>,
}

pub trait Agent: Send {
    fn algorithm(&self) -> AlgorithmTag;

    fn act(&mut self, obs_db: f64, mode: ActMode) -> Action;

    /// Records one transition and performs whatever learning the agent does
    /// per environment step.
    fn learn(&mut self, _obs_db: f64, _action: &Action, _reward: f64, _next_obs_db: f64) -> Result<Option<UpdateStats>> {
        Ok(None)
    }

    fn end_episode(&mut self) {}

    fn checkpoint(&self) -> Checkpoint;

    fn params_finite(&self) -> bool {
        true
    }
}

/// Affine map of the clipped observation range onto `[−1, 1]`.
pub fn scale_obs(obs_db: f64) -> f64 {
    let mid = 0.5 * (OBS_MAX_DB + OBS_MIN_DB);
    let half = 0.5 * (OBS_MAX_DB - OBS_MIN_DB);
    (obs_db.clamp(OBS_MIN_DB, OBS_MAX_DB) - mid) / half
}

pub(crate) fn make_transition(
    obs_db: f64,
    action: &Action,
    reward: f64,
    next_obs_db: f64,
    config: &EnvConfig,
) -> Transition {
    Transition {
        state: [scale_obs(obs_db)],
        action: action.to_unit(config),
        reward,
        next_state: [scale_obs(next_obs_db)],
        done: false,
    }
}

/// Row-stacked batch tensors of a set of transitions.
pub struct Batch {
    pub states: Matrix,
    pub actions: Matrix,
    pub rewards: Vec<f64>,
    pub next_states: Matrix,
    pub not_done: Vec<f64>,
}

impl Batch {
    pub fn new(batch: &[Transition]) -> Result<Self> {
        if batch.is_empty() {
            return Err(Error::Domain("update requires a non-empty batch".into()));
        }
        let states = Matrix::from_rows(&batch.iter().map(|t| t.state).collect::<Vec<_>>());
        let actions = Matrix::from_rows(&batch.iter().map(|t| t.action).collect::<Vec<_>>());
        let next_states = Matrix::from_rows(&batch.iter().map(|t| t.next_state).collect::<Vec<_>>());
        Ok(Self {
            states,
            actions,
            rewards: batch.iter().map(|t| t.reward).collect(),
            next_states,
            not_done: batch.iter().map(|t| if t.done { 0.0 } else { 1.0 }).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }
}

/// Mean squared error against `targets` and its gradient `2(q − y)/B`.
pub(crate) fn mse_with_grad(q: &Matrix, targets: &[f64]) -> (f64, Matrix) {
    let b = targets.len() as f64;
    let mut grad = Matrix::zeros(q.rows(), 1);
    let mut loss = 0.0;
    for (r, y) in targets.iter().enumerate() {
        let d = q.get(r, 0) - y;
        loss += d * d;
        grad.set(r, 0, 2.0 * d / b);
    }
    (loss / b, grad)
}

fn check_dense_shape(ck: &Checkpoint, idx: usize, input: usize, output: usize) -> Result<()> {
    let s = ck
        .sections
        .get(idx)
        .ok_or_else(|| Error::Compatibility(format!("checkpoint lacks section {idx}")))?;
    let dims = &s.dims;
    if dims.first().copied() != Some(input as u32) || dims.last().copied() != Some(output as u32) {
        return Err(Error::Compatibility(format!(
            "section {idx} has widths {dims:?}, expected {input} inputs and {output} outputs"
        )));
    }
    Ok(())
}

/// Fresh agent with default hyperparameters for `algorithm`.
pub fn new_agent(algorithm: AlgorithmTag, config: &EnvConfig, seed: u64) -> Result<Box<dyn Agent>> {
    let env = config.clone();
    Ok(match algorithm {
        AlgorithmTag::Sac => Box::new(SacAgent::new(SacConfig::default(), env, seed)?),
        AlgorithmTag::Ddpg => Box::new(DdpgAgent::new(DdpgConfig::default(), env, seed)?),
        AlgorithmTag::Td3 => Box::new(Td3Agent::new(Td3Config::default(), env, seed)?),
        AlgorithmTag::Ql => Box::new(TabularQAgent::new(QlConfig::default(), env, seed)?),
        AlgorithmTag::Ra => Box::new(RandomAssignment::new(env, seed)),
        AlgorithmTag::Mr => Box::new(MaxResources::new(env)),
    })
}

/// Rebuilds any agent from a checkpoint for the given scenario.
pub fn agent_from_checkpoint(ck: &Checkpoint, config: &EnvConfig, seed: u64) -> Result<Box<dyn Agent>> {
    Ok(match ck.algorithm {
        AlgorithmTag::Sac => Box::new(SacAgent::from_checkpoint(ck, config, seed)?),
        AlgorithmTag::Ddpg => Box::new(DdpgAgent::from_checkpoint(ck, config, seed)?),
        AlgorithmTag::Td3 => Box::new(Td3Agent::from_checkpoint(ck, config, seed)?),
        AlgorithmTag::Ql => Box::new(TabularQAgent::from_checkpoint(ck, config, seed)?),
        AlgorithmTag::Ra => Box::new(RandomAssignment::new(config.clone(), seed)),
        AlgorithmTag::Mr => Box::new(MaxResources::new(config.clone())),
    })
}
