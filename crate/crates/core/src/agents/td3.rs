use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::ddpg::{critic_step, deterministic_actor_step, explore_unit, policy_actions};
use super::sac::{net_dims, validate_common};
use super::{check_dense_shape, make_transition, ActMode, Agent, Batch, UpdateStats};
use crate::environment::{Action, EnvConfig};
use crate::error::{Error, Result};
use crate::nnopt::{
    AdamState, AlgorithmTag, Checkpoint, DenseNet, Matrix, ReplayBuffer, Section, Transition, ACT_DIM, OBS_DIM,
};

#[derive(Debug, Clone, PartialEq)]
pub struct Td3Config {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub discount: f64,
    pub retention: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub warmup_steps: u64,
    pub exploration_std: f64,
    pub target_noise_std: f64,
    pub target_noise_clip: f64,
    /// The actor and targets move once per this many critic updates.
    pub policy_delay: u64,
}

impl Default for Td3Config {
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
            target_noise_std: 0.2,
            target_noise_clip: 0.5,
            policy_delay: 2,
        }
    }
}

impl Td3Config {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.discount) {
            return Err(Error::config("discount", "must lie in [0, 1)"));
        }
        if !(self.retention > 0.0 && self.retention <= 1.0) {
            return Err(Error::config("retention", "must lie in (0, 1]"));
        }
        if !(self.exploration_std >= 0.0 && self.target_noise_std >= 0.0 && self.target_noise_clip >= 0.0) {
            return Err(Error::config("target_noise_std", "noise scales must be non-negative"));
        }
        if self.policy_delay == 0 {
            return Err(Error::config("policy_delay", "must be at least 1"));
        }
        validate_common(&self.hidden, self.learning_rate, self.batch_size, self.buffer_capacity)
    }
}

pub struct Td3Agent {
    config: Td3Config,
    env: EnvConfig,
    actor: DenseNet,
    critic1: DenseNet,
    critic2: DenseNet,
    target_actor: DenseNet,
    target1: DenseNet,
    target2: DenseNet,
    adam_actor: AdamState,
    adam_critic1: AdamState,
    adam_critic2: AdamState,
    buffer: ReplayBuffer,
    rng: ChaCha8Rng,
    env_steps: u64,
    updates: u64,
}

impl Td3Agent {
    pub fn new(config: Td3Config, env: EnvConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let actor = DenseNet::new(&net_dims(OBS_DIM, &config.hidden, ACT_DIM), &mut rng)?;
        let cd = net_dims(OBS_DIM + ACT_DIM, &config.hidden, 1);
        let critic1 = DenseNet::new(&cd, &mut rng)?;
        let critic2 = DenseNet::new(&cd, &mut rng)?;
        let targets = [actor.clone(), critic1.clone(), critic2.clone()];
        Ok(Self::assemble(config, env, [actor, critic1, critic2], targets, rng))
    }

    fn assemble(config: Td3Config, env: EnvConfig, main: [DenseNet; 3], targets: [DenseNet; 3], rng: ChaCha8Rng) -> Self {
        let [actor, critic1, critic2] = main;
        let [target_actor, target1, target2] = targets;
        let lr = config.learning_rate;
        Self {
            adam_actor: AdamState::new(actor.params().len(), lr),
            adam_critic1: AdamState::new(critic1.params().len(), lr),
            adam_critic2: AdamState::new(critic2.params().len(), lr),
            buffer: ReplayBuffer::new(config.buffer_capacity),
            config,
            env,
            actor,
            critic1,
            critic2,
            target_actor,
            target1,
            target2,
            rng,
            env_steps: 0,
            updates: 0,
        }
    }

    /// Sections: actor, critic 1, critic 2, target actor, target 1, target 2.
    pub fn from_checkpoint(ck: &Checkpoint, env: &EnvConfig, seed: u64) -> Result<Self> {
        if ck.algorithm != AlgorithmTag::Td3 || ck.sections.len() != 6 {
            return Err(Error::Compatibility("expected a 6-section td3 checkpoint".into()));
        }
        for i in 0..6 {
            if i % 3 == 0 {
                check_dense_shape(ck, i, OBS_DIM, ACT_DIM)?;
            } else {
                check_dense_shape(ck, i, OBS_DIM + ACT_DIM, 1)?;
            }
        }
        let mut nets = ck.sections.iter().map(|s| s.to_dense()).collect::<Result<Vec<_>>>()?.into_iter();
        let mut next = || nets.next().unwrap();
        let main = [next(), next(), next()];
        let targets = [next(), next(), next()];
        let config = Td3Config {
            hidden: main[0].dims()[1..main[0].dims().len() - 1].to_vec(),
            ..Td3Config::default()
        };
        Ok(Self::assemble(config, env.clone(), main, targets, ChaCha8Rng::seed_from_u64(seed)))
    }

    pub fn actor(&self) -> &DenseNet {
        &self.actor
    }

    pub fn critics_mut(&mut self) -> (&mut DenseNet, &mut DenseNet) {
        (&mut self.critic1, &mut self.critic2)
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// Target-policy actions with clipped Gaussian smoothing.
    pub fn smoothed_target_actions(&mut self, next_states: &Matrix) -> Result<Matrix> {
        let mut a = policy_actions(&self.target_actor, next_states)?;
        let std = self.config.target_noise_std;
        let clip = self.config.target_noise_clip;
        if std > 0.0 {
            let noise = Normal::new(0.0, std).expect("std is validated");
            for v in a.as_mut_slice() {
                *v = (*v + noise.sample(&mut self.rng).clamp(-clip, clip)).clamp(-1.0, 1.0);
            }
        }
        Ok(a)
    }

    /// Bootstrapped targets for given next actions: the twin minimum and,
    /// for comparison, the first target critic alone.
    pub fn targets_for_actions(&self, batch: &Batch, next_actions: &Matrix) -> Result<(Vec<f64>, Vec<f64>)> {
        let input = batch.next_states.hconcat(next_actions)?;
        let q1 = self.target1.predict(&input)?;
        let q2 = self.target2.predict(&input)?;
        let gamma = self.config.discount;
        let y = |r: usize, q: f64| {
            if gamma == 0.0 {
                batch.rewards[r]
            } else {
                batch.rewards[r] + gamma * batch.not_done[r] * q
            }
        };
        let twin = (0..batch.len()).map(|r| y(r, q1.get(r, 0).min(q2.get(r, 0)))).collect();
        let single = (0..batch.len()).map(|r| y(r, q1.get(r, 0))).collect();
        Ok((twin, single))
    }

    pub fn update(&mut self, batch: &[Transition]) -> Result<UpdateStats> {
        let batch = Batch::new(batch)?;
        let next_actions = self.smoothed_target_actions(&batch.next_states)?;
        let (targets, _) = self.targets_for_actions(&batch, &next_actions)?;
        let c1 = critic_step(&mut self.critic1, &mut self.adam_critic1, &batch, &targets)?;
        let c2 = critic_step(&mut self.critic2, &mut self.adam_critic2, &batch, &targets)?;
        self.updates += 1;
        let mut actor_loss = None;
        if self.updates % self.config.policy_delay == 0 {
            actor_loss = Some(deterministic_actor_step(
                &mut self.actor,
                &mut self.adam_actor,
                &mut self.critic1,
                &batch.states,
            )?);
            let nu = self.config.retention;
            self.target_actor.soft_update_from(&self.actor, nu)?;
            self.target1.soft_update_from(&self.critic1, nu)?;
            self.target2.soft_update_from(&self.critic2, nu)?;
        }
        Ok(UpdateStats {
            critic1_loss: c1,
            critic2_loss: Some(c2),
            actor_loss,
            mean_entropy: None,
        })
    }
}

impl Agent for Td3Agent {
    fn algorithm(&self) -> AlgorithmTag {
        AlgorithmTag::Td3
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
            algorithm: AlgorithmTag::Td3,
            sections: [
                &self.actor,
                &self.critic1,
                &self.critic2,
                &self.target_actor,
                &self.target1,
                &self.target2,
            ]
            .into_iter()
            .map(Section::dense)
            .collect(),
        }
    }

    fn params_finite(&self) -> bool {
        [&self.actor, &self.critic1, &self.critic2, &self.target_actor, &self.target1, &self.target2]
            .iter()
            .all(|n| n.all_finite())
    }
}
