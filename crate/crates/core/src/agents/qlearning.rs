use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ActMode, Agent, UpdateStats};
use crate::environment::{db_to_linear, Action, EnvConfig, OBS_MAX_DB, OBS_MIN_DB};
use crate::error::{Error, Result};
use crate::nnopt::{AlgorithmTag, Checkpoint, Section, SectionKind};

#[derive(Debug, Clone, PartialEq)]
pub struct QlConfig {
    pub state_bins: usize,
    pub power_levels: usize,
    pub blocklength_levels: usize,
    pub learning_rate: f64,
    pub discount: f64,
    pub epsilon_start: f64,
    pub epsilon_decay: f64,
    pub epsilon_min: f64,
}

impl Default for QlConfig {
    fn default() -> Self {
        Self {
            state_bins: 20,
            power_levels: 5,
            blocklength_levels: 5,
            learning_rate: 0.1,
            discount: 0.99,
            epsilon_start: 1.0,
            epsilon_decay: 0.99,
            epsilon_min: 0.01,
        }
    }
}

impl QlConfig {
    pub fn validate(&self) -> Result<()> {
        if self.state_bins == 0 || self.power_levels == 0 || self.blocklength_levels == 0 {
            return Err(Error::config("state_bins", "bin and grid counts must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::config("learning_rate", "must lie in (0, 1]"));
        }
        if !(0.0..1.0).contains(&self.discount) {
            return Err(Error::config("discount", "must lie in [0, 1)"));
        }
        for (name, v) in [
            ("epsilon_start", self.epsilon_start),
            ("epsilon_decay", self.epsilon_decay),
            ("epsilon_min", self.epsilon_min),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(name, "must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    pub fn num_actions(&self) -> usize {
        self.power_levels * self.blocklength_levels
    }
}

/// Evenly spaced points of `[lo, hi]`; a single level sits at `lo`.
fn levels(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// ε-greedy tabular learner over binned SINR observations and a
/// power × blocklength grid. Action index `p·L + l`.
pub struct TabularQAgent {
    config: QlConfig,
    q: Vec<f64>,
    grid: Vec<Action>,
    epsilon: f64,
    rng: ChaCha8Rng,
}

impl TabularQAgent {
    pub fn new(config: QlConfig, env: EnvConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let powers = levels(env.min_tx_snr_db, env.max_tx_snr_db, config.power_levels);
        let lengths = levels(
            f64::from(env.min_blocklength),
            f64::from(env.max_blocklength),
            config.blocklength_levels,
        );
        let mut grid = Vec::with_capacity(config.num_actions());
        for &p in &powers {
            for &m in &lengths {
                let snr = db_to_linear(p).clamp(env.min_tx_snr_linear(), env.max_tx_snr_linear());
                grid.push(Action::new(snr, m.round() as u32, &env)?);
            }
        }
        Ok(Self {
            q: vec![0.0; config.state_bins * config.num_actions()],
            epsilon: config.epsilon_start,
            config,
            grid,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// Two table sections: Q `[bins, P, L]` and `[ε]`.
    pub fn from_checkpoint(ck: &Checkpoint, env: &EnvConfig, seed: u64) -> Result<Self> {
        let ok = ck.algorithm == AlgorithmTag::Ql
            && ck.sections.len() == 2
            && ck.sections.iter().all(|s| s.kind == SectionKind::Table)
            && ck.sections[0].dims.len() == 3
            && ck.sections[1].values.len() == 1;
        if !ok {
            return Err(Error::Compatibility("expected a 2-section ql checkpoint".into()));
        }
        let d = &ck.sections[0].dims;
        let config = QlConfig {
            state_bins: d[0] as usize,
            power_levels: d[1] as usize,
            blocklength_levels: d[2] as usize,
            ..QlConfig::default()
        };
        let mut agent = Self::new(config, env.clone(), seed)?;
        agent.q.copy_from_slice(&ck.sections[0].values);
        agent.epsilon = ck.sections[1].values[0].clamp(0.0, 1.0);
        Ok(agent)
    }

    pub fn config(&self) -> &QlConfig {
        &self.config
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn set_epsilon(&mut self, epsilon: f64) {
        self.epsilon = epsilon.clamp(0.0, 1.0);
    }

    pub fn grid(&self) -> &[Action] {
        &self.grid
    }

    pub fn q_table(&self) -> &[f64] {
        &self.q
    }

    pub fn q_value(&self, state: usize, action: usize) -> f64 {
        self.q[state * self.config.num_actions() + action]
    }

    /// Uniform bin of the clipped observation range.
    pub fn state_bin(&self, obs_db: f64) -> usize {
        let n = self.config.state_bins;
        let x = (obs_db.clamp(OBS_MIN_DB, OBS_MAX_DB) - OBS_MIN_DB) / (OBS_MAX_DB - OBS_MIN_DB);
        ((x * n as f64).floor() as usize).min(n - 1)
    }

    /// Argmax over actions, lowest index on ties.
    pub fn greedy_index(&self, state: usize) -> usize {
        let row = self.row(state);
        let mut best = 0;
        for (i, v) in row.iter().enumerate() {
            if *v > row[best] {
                best = i;
            }
        }
        best
    }

    fn row(&self, state: usize) -> &[f64] {
        let a = self.config.num_actions();
        &self.q[state * a..(state + 1) * a]
    }

    pub fn select_index(&mut self, state: usize, mode: ActMode) -> usize {
        if mode == ActMode::Explore && self.rng.gen_bool(self.epsilon) {
            self.rng.gen_range(0..self.config.num_actions())
        } else {
            self.greedy_index(state)
        }
    }

    /// `Q(s,a) ← Q + lr·(r + γ·max_a' Q(s',a') − Q)`; returns the TD error.
    pub fn update_indices(&mut self, state: usize, action: usize, reward: f64, next_state: usize) -> f64 {
        let best_next = self.row(next_state).iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let idx = state * self.config.num_actions() + action;
        let td = reward + self.config.discount * best_next - self.q[idx];
        self.q[idx] += self.config.learning_rate * td;
        td
    }

    /// Nearest grid action; used to map executed actions back to indices.
    pub fn action_index(&self, action: &Action) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, g) in self.grid.iter().enumerate() {
            let d = (g.tx_snr_db() - action.tx_snr_db()).abs()
                + (f64::from(g.blocklength()) - f64::from(action.blocklength())).abs();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }
}

impl Agent for TabularQAgent {
    fn algorithm(&self) -> AlgorithmTag {
        AlgorithmTag::Ql
    }

    fn act(&mut self, obs_db: f64, mode: ActMode) -> Action {
        let s = self.state_bin(obs_db);
        let i = self.select_index(s, mode);
        self.grid[i]
    }

    fn learn(&mut self, obs_db: f64, action: &Action, reward: f64, next_obs_db: f64) -> Result<Option<UpdateStats>> {
        let (s, s2) = (self.state_bin(obs_db), self.state_bin(next_obs_db));
        let a = self.action_index(action);
        let td = self.update_indices(s, a, reward, s2);
        Ok(Some(UpdateStats {
            critic1_loss: td * td,
            ..UpdateStats::default()
        }))
    }

    fn end_episode(&mut self) {
        self.epsilon = (self.epsilon * self.config.epsilon_decay).max(self.config.epsilon_min);
    }

    fn checkpoint(&self) -> Checkpoint {
        let c = &self.config;
        Checkpoint {
            algorithm: AlgorithmTag::Ql,
            sections: vec![
                Section::table(
                    vec![c.state_bins as u32, c.power_levels as u32, c.blocklength_levels as u32],
                    self.q.clone(),
                ),
                Section::table(vec![1], vec![self.epsilon]),
            ],
        }
    }

    fn params_finite(&self) -> bool {
        self.q.iter().all(|v| v.is_finite())
    }
}
