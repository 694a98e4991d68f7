use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_dense_shape, make_transition, mse_with_grad, ActMode, Agent, Batch, UpdateStats};
use crate::environment::{Action, EnvConfig};
use crate::error::{Error, Result};
use crate::nnopt::{
    AdamState, AlgorithmTag, Checkpoint, DenseNet, Matrix, ReplayBuffer, Section, SquashedGaussianHead,
    SquashedSample, Transition, ACT_DIM, OBS_DIM,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SacConfig {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub temperature: f64,
    pub discount: f64,
    pub retention: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub warmup_steps: u64,
}

impl Default for SacConfig {
    fn default() -> Self {
        Self {
            hidden: vec![256, 256],
            learning_rate: 3e-4,
            temperature: 0.2,
            discount: 0.99,
            retention: 0.995,
            batch_size: 256,
            buffer_capacity: 1_000_000,
            warmup_steps: 1000,
        }
    }
}

impl SacConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0) {
            return Err(Error::config("temperature", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.discount) {
            return Err(Error::config("discount", "must lie in [0, 1)"));
        }
        if !(self.retention > 0.0 && self.retention <= 1.0) {
            return Err(Error::config("retention", "must lie in (0, 1]"));
        }
        validate_common(&self.hidden, self.learning_rate, self.batch_size, self.buffer_capacity)
    }
}

pub(crate) fn validate_common(hidden: &[usize], lr: f64, batch: usize, capacity: usize) -> Result<()> {
    if hidden.is_empty() || hidden.contains(&0) {
        return Err(Error::config("hidden", "needs at least one non-empty hidden layer"));
    }
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(Error::config("learning_rate", "must be positive"));
    }
    if batch == 0 || capacity == 0 {
        return Err(Error::config("batch_size", "batch and buffer sizes must be positive"));
    }
    Ok(())
}

pub(crate) fn net_dims(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    let mut dims = Vec::with_capacity(hidden.len() + 2);
    dims.push(input);
    dims.extend_from_slice(hidden);
    dims.push(output);
    dims
}

pub struct SacAgent {
    config: SacConfig,
    env: EnvConfig,
    actor: DenseNet,
    critic1: DenseNet,
    critic2: DenseNet,
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

impl SacAgent {
    pub fn new(config: SacConfig, env: EnvConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let actor = DenseNet::new(&net_dims(OBS_DIM, &config.hidden, 2 * ACT_DIM), &mut rng)?;
        let critic_dims = net_dims(OBS_DIM + ACT_DIM, &config.hidden, 1);
        let critic1 = DenseNet::new(&critic_dims, &mut rng)?;
        let critic2 = DenseNet::new(&critic_dims, &mut rng)?;
        Ok(Self::assemble(config, env, actor, critic1, critic2, None, rng))
    }

    fn assemble(
        config: SacConfig,
        env: EnvConfig,
        actor: DenseNet,
        critic1: DenseNet,
        critic2: DenseNet,
        targets: Option<(DenseNet, DenseNet)>,
        rng: ChaCha8Rng,
    ) -> Self {
        let lr = config.learning_rate;
        let (target1, target2) = targets.unwrap_or_else(|| (critic1.clone(), critic2.clone()));
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
            target1,
            target2,
            rng,
            env_steps: 0,
            updates: 0,
        }
    }

    /// Sections: actor, critic 1, critic 2, target 1, target 2.
    pub fn from_checkpoint(ck: &Checkpoint, env: &EnvConfig, seed: u64) -> Result<Self> {
        if ck.algorithm != AlgorithmTag::Sac || ck.sections.len() != 5 {
            return Err(Error::Compatibility(format!(
                "expected a 5-section sac checkpoint, got {} with {} sections",
                ck.algorithm.name(),
                ck.sections.len()
            )));
        }
        check_dense_shape(ck, 0, OBS_DIM, 2 * ACT_DIM)?;
        for i in 1..5 {
            check_dense_shape(ck, i, OBS_DIM + ACT_DIM, 1)?;
        }
        let nets = ck.sections.iter().map(|s| s.to_dense()).collect::<Result<Vec<_>>>()?;
        let hidden = nets[0].dims()[1..nets[0].dims().len() - 1].to_vec();
        if nets[1..].iter().any(|n| n.dims()[1..n.dims().len() - 1] != hidden[..]) {
            return Err(Error::Compatibility("actor and critics differ in hidden widths".into()));
        }
        let config = SacConfig {
            hidden,
            ..SacConfig::default()
        };
        let mut it = nets.into_iter();
        let (a, c1, c2, t1, t2) = (
            it.next().unwrap(),
            it.next().unwrap(),
            it.next().unwrap(),
            it.next().unwrap(),
            it.next().unwrap(),
        );
        Ok(Self::assemble(
            config,
            env.clone(),
            a,
            c1,
            c2,
            Some((t1, t2)),
            ChaCha8Rng::seed_from_u64(seed),
        ))
    }

    pub fn config(&self) -> &SacConfig {
        &self.config
    }

    pub fn actor(&self) -> &DenseNet {
        &self.actor
    }

    pub fn actor_mut(&mut self) -> &mut DenseNet {
        &mut self.actor
    }

    pub fn critics(&self) -> (&DenseNet, &DenseNet) {
        (&self.critic1, &self.critic2)
    }

    pub fn critics_mut(&mut self) -> (&mut DenseNet, &mut DenseNet) {
        (&mut self.critic1, &mut self.critic2)
    }

    pub fn targets(&self) -> (&DenseNet, &DenseNet) {
        (&self.target1, &self.target2)
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// Policy head for a scaled observation.
    pub fn head(&self, scaled_obs: f64) -> SquashedGaussianHead {
        let raw = self
            .actor
            .forward_vec(&[scaled_obs])
            .expect("actor input width is fixed");
        SquashedGaussianHead::from_raw(&raw)
    }

    /// Action in normalized coordinates `(−1, 1)²`.
    pub fn select_unit(&mut self, obs_db: f64, mode: ActMode) -> [f64; 2] {
        if mode == ActMode::Explore && self.env_steps < self.config.warmup_steps {
            return [self.rng.gen_range(-1.0..1.0), self.rng.gen_range(-1.0..1.0)];
        }
        let head = self.head(super::scale_obs(obs_db));
        let a = match mode {
            ActMode::Deterministic => head.deterministic_action(),
            ActMode::Explore => head.sample(&mut self.rng).action,
        };
        [a[0], a[1]]
    }

    fn sample_policy(&mut self, raw: &Matrix) -> (Vec<SquashedGaussianHead>, Vec<SquashedSample>) {
        let mut heads = Vec::with_capacity(raw.rows());
        let mut samples = Vec::with_capacity(raw.rows());
        for r in 0..raw.rows() {
            let head = SquashedGaussianHead::from_raw(raw.row(r));
            samples.push(head.sample(&mut self.rng));
            heads.push(head);
        }
        (heads, samples)
    }

    fn actions_matrix(samples: &[SquashedSample]) -> Matrix {
        let rows: Vec<[f64; ACT_DIM]> = samples.iter().map(|s| [s.action[0], s.action[1]]).collect();
        Matrix::from_rows(&rows)
    }

    /// `y = r + γ·(1 − done)·[min_i Q_target,i(s', a') − α·log π(a'|s')]`
    /// with `a'` freshly sampled.
    pub fn critic_targets(&mut self, batch: &Batch) -> Result<Vec<f64>> {
        let raw = self.actor.predict(&batch.next_states)?;
        let (_, samples) = self.sample_policy(&raw);
        let input = batch.next_states.hconcat(&Self::actions_matrix(&samples))?;
        let q1 = self.target1.predict(&input)?;
        let q2 = self.target2.predict(&input)?;
        let gamma = self.config.discount;
        let alpha = self.config.temperature;
        Ok((0..batch.len())
            .map(|r| {
                let soft = q1.get(r, 0).min(q2.get(r, 0)) - alpha * samples[r].log_prob;
                // γ = 0 must give y = r even if the bootstrap is not finite
                if gamma == 0.0 {
                    batch.rewards[r]
                } else {
                    batch.rewards[r] + gamma * batch.not_done[r] * soft
                }
            })
            .collect())
    }

    /// One Adam step on each critic towards `targets`; returns both losses.
    pub fn train_critics(&mut self, batch: &Batch, targets: &[f64]) -> Result<(f64, f64)> {
        let input = batch.states.hconcat(&batch.actions)?;
        let mut losses = [0.0; 2];
        for (i, (net, adam)) in [
            (&mut self.critic1, &mut self.adam_critic1),
            (&mut self.critic2, &mut self.adam_critic2),
        ]
        .into_iter()
        .enumerate()
        {
            let q = net.forward(&input)?;
            let (loss, grad) = mse_with_grad(&q, targets);
            let g = net.backward(&grad)?;
            adam.step(net.params_mut(), &g.params)?;
            losses[i] = loss;
        }
        Ok((losses[0], losses[1]))
    }

    /// One Adam step on `E[α·log π(a|s) − min_i Q_i(s, a)]`; returns the
    /// loss and the mean entropy estimate `−E[log π]`.
    pub fn train_actor(&mut self, batch: &Batch) -> Result<(f64, f64)> {
        let n = batch.len();
        let inv_b = 1.0 / n as f64;
        let alpha = self.config.temperature;
        let raw = self.actor.forward(&batch.states)?;
        let (heads, samples) = self.sample_policy(&raw);
        let input = batch.states.hconcat(&Self::actions_matrix(&samples))?;
        let q1 = self.critic1.forward(&input)?;
        let q2 = self.critic2.forward(&input)?;
        let mut up1 = Matrix::zeros(n, 1);
        let mut up2 = Matrix::zeros(n, 1);
        let mut loss = 0.0;
        let mut log_prob_sum = 0.0;
        for r in 0..n {
            let (a, b) = (q1.get(r, 0), q2.get(r, 0));
            if a <= b {
                up1.set(r, 0, -inv_b);
            } else {
                up2.set(r, 0, -inv_b);
            }
            loss += alpha * samples[r].log_prob - a.min(b);
            log_prob_sum += samples[r].log_prob;
        }
        let g1 = self.critic1.backward_input(&up1)?.input;
        let g2 = self.critic2.backward_input(&up2)?.input;
        let mut upstream = Matrix::zeros(n, 2 * ACT_DIM);
        for r in 0..n {
            let dg_da: Vec<f64> = (0..ACT_DIM)
                .map(|j| g1.get(r, OBS_DIM + j) + g2.get(r, OBS_DIM + j))
                .collect();
            let raw_log_std = &raw.row(r)[ACT_DIM..];
            let g = heads[r].reparam_gradient(raw_log_std, &samples[r], alpha * inv_b, &dg_da);
            upstream.row_mut(r).copy_from_slice(&g);
        }
        let grads = self.actor.backward(&upstream)?;
        self.adam_actor.step(self.actor.params_mut(), &grads.params)?;
        Ok((loss * inv_b, -log_prob_sum * inv_b))
    }

    pub fn soft_update_targets(&mut self) -> Result<()> {
        self.target1.soft_update_from(&self.critic1, self.config.retention)?;
        self.target2.soft_update_from(&self.critic2, self.config.retention)
    }

    /// Critic step, actor step, target soft update.
    pub fn update(&mut self, batch: &[Transition]) -> Result<UpdateStats> {
        let batch = Batch::new(batch)?;
        let targets = self.critic_targets(&batch)?;
        let (c1, c2) = self.train_critics(&batch, &targets)?;
        let (actor_loss, entropy) = self.train_actor(&batch)?;
        self.soft_update_targets()?;
        self.updates += 1;
        Ok(UpdateStats {
            critic1_loss: c1,
            critic2_loss: Some(c2),
            actor_loss: Some(actor_loss),
            mean_entropy: Some(entropy),
        })
    }
}

impl Agent for SacAgent {
    fn algorithm(&self) -> AlgorithmTag {
        AlgorithmTag::Sac
    }

    fn act(&mut self, obs_db: f64, mode: ActMode) -> Action {
        Action::from_unit(self.select_unit(obs_db, mode), &self.env)
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
            algorithm: AlgorithmTag::Sac,
            sections: [&self.actor, &self.critic1, &self.critic2, &self.target1, &self.target2]
                .into_iter()
                .map(Section::dense)
                .collect(),
        }
    }

    fn params_finite(&self) -> bool {
        [&self.actor, &self.critic1, &self.critic2, &self.target1, &self.target2]
            .iter()
            .all(|n| n.all_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SacConfig {
        SacConfig {
            hidden: vec![16, 16],
            batch_size: 8,
            warmup_steps: 0,
            ..SacConfig::default()
        }
    }

    fn transitions(n: usize) -> Vec<Transition> {
        (0..n)
            .map(|i| {
                let x = i as f64 / n as f64;
                Transition {
                    state: [x - 0.5],
                    action: [0.3 - x, x * 0.5],
                    reward: 0.2 + x,
                    next_state: [0.5 - x],
                    done: false,
                }
            })
            .collect()
    }

    #[test]
    fn targets_start_equal_to_critics() {
        let agent = SacAgent::new(small(), EnvConfig::default(), 1).unwrap();
        assert_eq!(agent.target1, agent.critic1);
        assert_eq!(agent.target2, agent.critic2);
        assert_ne!(agent.critic1, agent.critic2);
    }

    #[test]
    fn zero_actor_deterministic_is_box_midpoint() {
        let env = EnvConfig::default();
        let mut agent = SacAgent::new(small(), env.clone(), 1).unwrap();
        let n = agent.actor.params().len();
        agent.actor.params_mut().copy_from_slice(&vec![0.0; n]);
        let a = agent.act(3.0, ActMode::Deterministic);
        assert!((a.tx_snr_db() - 10.0).abs() < 1e-9);
        assert_eq!(a.blocklength(), 525);
    }

    #[test]
    fn seeded_stochastic_actions_reproduce() {
        let env = EnvConfig::default();
        let mut a = SacAgent::new(small(), env.clone(), 9).unwrap();
        let mut b = SacAgent::new(small(), env, 9).unwrap();
        for obs in [-3.0, 10.0, 25.0] {
            assert_eq!(a.act(obs, ActMode::Explore), b.act(obs, ActMode::Explore));
        }
    }

    #[test]
    fn zero_discount_targets_are_rewards() {
        let cfg = SacConfig {
            discount: 0.0,
            ..small()
        };
        let mut agent = SacAgent::new(cfg, EnvConfig::default(), 2).unwrap();
        let batch = Batch::new(&transitions(5)).unwrap();
        let y = agent.critic_targets(&batch).unwrap();
        assert_eq!(y, batch.rewards);
    }

    #[test]
    fn unit_retention_freezes_targets() {
        let cfg = SacConfig {
            retention: 1.0,
            ..small()
        };
        let mut agent = SacAgent::new(cfg, EnvConfig::default(), 3).unwrap();
        let before = agent.target1.clone();
        for _ in 0..3 {
            agent.update(&transitions(8)).unwrap();
        }
        assert_eq!(agent.target1, before);
        assert_ne!(agent.critic1, before);
    }

    #[test]
    fn soft_update_follows_geometric_law() {
        let cfg = SacConfig {
            retention: 0.9,
            ..small()
        };
        let mut agent = SacAgent::new(cfg, EnvConfig::default(), 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        agent.critic1 = DenseNet::new(agent.critic1.dims(), &mut rng).unwrap();
        let gap0: Vec<f64> = agent
            .target1
            .params()
            .iter()
            .zip(agent.critic1.params())
            .map(|(t, m)| t - m)
            .collect();
        let k = 7;
        for _ in 0..k {
            agent.soft_update_targets().unwrap();
        }
        let factor = 0.9f64.powi(k);
        for ((t, m), g0) in agent.target1.params().iter().zip(agent.critic1.params()).zip(&gap0) {
            assert!(((t - m) - factor * g0).abs() < 1e-12 * (1.0 + g0.abs()));
        }
    }

    #[test]
    fn critic_regresses_single_transition() {
        let mut agent = SacAgent::new(small(), EnvConfig::default(), 5).unwrap();
        let one = transitions(1);
        let batch = Batch::new(&one).unwrap();
        // targets frozen once, actor untouched
        let y = agent.critic_targets(&batch).unwrap();
        let input = batch.states.hconcat(&batch.actions).unwrap();
        let mut converged_at = None;
        for step in 1..=5000 {
            agent.train_critics(&batch, &y).unwrap();
            let q1 = agent.critic1.predict(&input).unwrap().get(0, 0);
            let q2 = agent.critic2.predict(&input).unwrap().get(0, 0);
            if (q1 - y[0]).abs() < 1e-3 && (q2 - y[0]).abs() < 1e-3 {
                converged_at = Some(step);
                break;
            }
        }
        assert!(converged_at.is_some());
    }

    #[test]
    fn empty_batch_is_rejected() {
        let mut agent = SacAgent::new(small(), EnvConfig::default(), 6).unwrap();
        assert!(matches!(agent.update(&[]), Err(Error::Domain(_))));
    }

    #[test]
    fn update_reports_finite_diagnostics() {
        let mut agent = SacAgent::new(small(), EnvConfig::default(), 7).unwrap();
        let stats = agent.update(&transitions(8)).unwrap();
        assert!(stats.critic1_loss.is_finite());
        assert!(stats.actor_loss.unwrap().is_finite());
        assert!(stats.mean_entropy.unwrap().is_finite());
        assert!(agent.params_finite());
    }

    #[test]
    fn checkpoint_round_trip() {
        let env = EnvConfig::default();
        let mut agent = SacAgent::new(small(), env.clone(), 8).unwrap();
        agent.update(&transitions(8)).unwrap();
        let ck = agent.checkpoint();
        let bytes = ck.to_bytes();
        let back = SacAgent::from_checkpoint(&Checkpoint::from_bytes(&bytes).unwrap(), &env, 0).unwrap();
        assert_eq!(back.checkpoint().to_bytes(), bytes);
        let mut a = agent;
        let mut b = back;
        assert_eq!(a.act(4.0, ActMode::Deterministic), b.act(4.0, ActMode::Deterministic));
    }

    #[test]
    fn invalid_hyperparameters_are_rejected() {
        for cfg in [
            SacConfig { temperature: 0.0, ..small() },
            SacConfig { discount: 1.0, ..small() },
            SacConfig { retention: 0.0, ..small() },
            SacConfig { hidden: vec![], ..small() },
        ] {
            assert!(matches!(SacAgent::new(cfg, EnvConfig::default(), 0), Err(Error::Config { .. })));
        }
    }
}
