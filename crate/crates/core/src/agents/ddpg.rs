use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::sac::{net_dims, validate_common};
use super::{check_dense_shape, make_transition, mse_with_grad, ActMode, Agent, Batch, UpdateStats};
use crate::environment::{Action, EnvConfig};
use crate::error::{Error, Result};
use crate::nnopt::{
    AdamState, AlgorithmTag, Checkpoint, DenseNet, Matrix, ReplayBuffer, Section, Transition, ACT_DIM, OBS_DIM,
};

#[derive(Debug, Clone, PartialEq)]
pub struct DdpgConfig {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub discount: f64,
    pub retention: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub warmup_steps: u64,
    /// Std of the additive Gaussian exploration noise, normalized units.
    pub exploration_std: f64,
}

impl Default for DdpgConfig {
    fn default() -> Self {
        Self {
            hidden: vec![400, 300],
            learning_rate: 1e-3,
            discount: 0.99,
            retention: 0.995,
            batch_size: 256,
            buffer_capacity: 1_000_000,
            warmup_steps: 1000,
            exploration_std: 0.1,
        }
    }
}

impl DdpgConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.discount) {
            return Err(Error::config("discount", "must lie in [0, 1)"));
        }
        if !(self.retention > 0.0 && self.retention <= 1.0) {
            return Err(Error::config("retention", "must lie in (0, 1]"));
        }
        if !(self.exploration_std >= 0.0) {
            return Err(Error::config("exploration_std", "must be non-negative"));
        }
        validate_common(&self.hidden, self.learning_rate, self.batch_size, self.buffer_capacity)
    }
}

/// `tanh(actor(s))` for every row.
pub(crate) fn policy_actions(actor: &DenseNet, states: &Matrix) -> Result<Matrix> {
    let mut a = actor.predict(states)?;
    a.as_mut_slice().iter_mut().for_each(|v| *v = v.tanh());
    Ok(a)
}

pub(crate) fn explore_unit<R: Rng + ?Sized>(actor: &DenseNet, scaled_obs: f64, std: f64, rng: &mut R) -> [f64; 2] {
    let out = actor.forward_vec(&[scaled_obs]).expect("actor input width is fixed");
    let mut a = [out[0].tanh(), out[1].tanh()];
    if std > 0.0 {
        let noise = Normal::new(0.0, std).expect("std is validated");
        for v in &mut a {
            *v = (*v + noise.sample(rng)).clamp(-1.0, 1.0);
        }
    }
    a
}

/// One Adam step on the actor minimizing `−E[Q(s, tanh(actor(s)))]`.
pub(crate) fn deterministic_actor_step(
    actor: &mut DenseNet,
    adam: &mut AdamState,
    critic: &mut DenseNet,
    states: &Matrix,
) -> Result<f64> {
    let n = states.rows();
    let inv_b = 1.0 / n as f64;
    let mut a = actor.forward(states)?;
    a.as_mut_slice().iter_mut().for_each(|v| *v = v.tanh());
    let q = critic.forward(&states.hconcat(&a)?)?;
    let loss = -q.as_slice().iter().sum::<f64>() * inv_b;
    let up = Matrix::from_vec(n, 1, vec![-inv_b; n])?;
    let dq = critic.backward_input(&up)?.input;
    let mut upstream = Matrix::zeros(n, ACT_DIM);
    for r in 0..n {
        for j in 0..ACT_DIM {
            let t = a.get(r, j);
            upstream.set(r, j, dq.get(r, OBS_DIM + j) * (1.0 - t * t));
        }
    }
    let grads = actor.backward(&upstream)?;
    adam.step(actor.params_mut(), &grads.params)?;
    Ok(loss)
}

pub(crate) fn critic_step(critic: &mut DenseNet, adam: &mut AdamState, batch: &Batch, targets: &[f64]) -> Result<f64> {
    let q = critic.forward(&batch.states.hconcat(&batch.actions)?)?;
    let (loss, grad) = mse_with_grad(&q, targets);
    let g = critic.backward(&grad)?;
    adam.step(critic.params_mut(), &g.params)?;
    Ok(loss)
}

pub struct DdpgAgent {
    config: DdpgConfig,
    env: EnvConfig,
    actor: DenseNet,
    critic: DenseNet,
    target_actor: DenseNet,
    target_critic: DenseNet,
    adam_actor: AdamState,
    adam_critic: AdamState,
    buffer: ReplayBuffer,
    rng: ChaCha8Rng,
    env_steps: u64,
}

impl DdpgAgent {
    pub fn new(config: DdpgConfig, env: EnvConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let actor = DenseNet::new(&net_dims(OBS_DIM, &config.hidden, ACT_DIM), &mut rng)?;
        let critic = DenseNet::new(&net_dims(OBS_DIM + ACT_DIM, &config.hidden, 1), &mut rng)?;
        let (ta, tc) = (actor.clone(), critic.clone());
        Ok(Self::assemble(config, env, actor, critic, ta, tc, rng))
    }

    fn assemble(
        config: DdpgConfig,
        env: EnvConfig,
        actor: DenseNet,
        critic: DenseNet,
        target_actor: DenseNet,
        target_critic: DenseNet,
        rng: ChaCha8Rng,
    ) -> Self {
        Self {
            adam_actor: AdamState::new(actor.params().len(), config.learning_rate),
            adam_critic: AdamState::new(critic.params().len(), config.learning_rate),
            buffer: ReplayBuffer::new(config.buffer_capacity),
            config,
            env,
            actor,
            critic,
            target_actor,
            target_critic,
            rng,
            env_steps: 0,
        }
    }

    /// Sections: actor, critic, target actor, target critic.
    pub fn from_checkpoint(ck: &Checkpoint, env: &EnvConfig, seed: u64) -> Result<Self> {
        if ck.algorithm != AlgorithmTag::Ddpg || ck.sections.len() != 4 {
            return Err(Error::Compatibility("expected a 4-section ddpg checkpoint".into()));
        }
        for (i, (inp, out)) in [(OBS_DIM, ACT_DIM), (OBS_DIM + ACT_DIM, 1), (OBS_DIM, ACT_DIM), (OBS_DIM + ACT_DIM, 1)]
            .into_iter()
            .enumerate()
        {
            check_dense_shape(ck, i, inp, out)?;
        }
        let mut nets = ck.sections.iter().map(|s| s.to_dense()).collect::<Result<Vec<_>>>()?.into_iter();
        let actor = nets.next().unwrap();
        let config = DdpgConfig {
            hidden: actor.dims()[1..actor.dims().len() - 1].to_vec(),
            ..DdpgConfig::default()
        };
        Ok(Self::assemble(
            config,
            env.clone(),
            actor,
            nets.next().unwrap(),
            nets.next().unwrap(),
            nets.next().unwrap(),
            ChaCha8Rng::seed_from_u64(seed),
        ))
    }

    pub fn actor(&self) -> &DenseNet {
        &self.actor
    }

    pub fn critic(&self) -> &DenseNet {
        &self.critic
    }

    pub fn critic_mut(&mut self) -> &mut DenseNet {
        &mut self.critic
    }

    /// `y = r + γ·(1 − done)·Q_target(s', μ_target(s'))`.
    pub fn critic_targets(&self, batch: &Batch) -> Result<Vec<f64>> {
        let a = policy_actions(&self.target_actor, &batch.next_states)?;
        let q = self.target_critic.predict(&batch.next_states.hconcat(&a)?)?;
        let gamma = self.config.discount;
        Ok((0..batch.len())
            .map(|r| {
                if gamma == 0.0 {
                    batch.rewards[r]
                } else {
                    batch.rewards[r] + gamma * batch.not_done[r] * q.get(r, 0)
                }
            })
            .collect())
    }

    pub fn update(&mut self, batch: &[Transition]) -> Result<UpdateStats> {
        let batch = Batch::new(batch)?;
        let targets = self.critic_targets(&batch)?;
        let critic_loss = critic_step(&mut self.critic, &mut self.adam_critic, &batch, &targets)?;
        let actor_loss =
            deterministic_actor_step(&mut self.actor, &mut self.adam_actor, &mut self.critic, &batch.states)?;
        self.target_actor.soft_update_from(&self.actor, self.config.retention)?;
        self.target_critic.soft_update_from(&self.critic, self.config.retention)?;
        Ok(UpdateStats {
            critic1_loss: critic_loss,
            critic2_loss: None,
            actor_loss: Some(actor_loss),
            mean_entropy: None,
        })
    }
}

impl Agent for DdpgAgent {
    fn algorithm(&self) -> AlgorithmTag {
        AlgorithmTag::Ddpg
    }

    fn act(&mut self, obs_db: f64, mode: ActMode) -> Action {
        let unit = match mode {
            ActMode::Explore if self.env_steps < self.config.warmup_steps => {
                [self.rng.gen_range(-1.0..1.0), self.rng.gen_range(-1.0..1.0)]
            }
            ActMode::Explore => explore_unit(
                &self.actor,
                super::scale_obs(obs_db),
                self.config.exploration_std,
                &mut self.rng,
            ),
            ActMode::Deterministic => explore_unit(&self.actor, super::scale_obs(obs_db), 0.0, &mut self.rng),
        };
        Action::from_unit(unit, &self.env)
    }

    fn learn(&mut self, obs_db: f64, action: &Action, reward: f64, next_obs_db: f64) -> Result<Option<UpdateStats>> {
        self.buffer
            .push(make_transition(obs_db, action, reward, next_obs_db, &self.env));
        self.env_steps += 1;
        if self.env_steps < self.config.warmup_steps {
            return Ok(None);
        }
        let n = self.config.batch_size.min(self.buffer.len());
        let batch = self.buffer.sample(n, &mut self.rng)?;
        self.update(&batch).map(Some)
    }

    fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            algorithm: AlgorithmTag::Ddpg,
            sections: [&self.actor, &self.critic, &self.target_actor, &self.target_critic]
                .into_iter()
                .map(Section::dense)
                .collect(),
        }
    }

    fn params_finite(&self) -> bool {
        [&self.actor, &self.critic, &self.target_actor, &self.target_critic]
            .iter()
            .all(|n| n.all_finite())
    }
}
