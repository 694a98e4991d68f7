use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ActMode, Agent};
use crate::environment::{db_to_linear, Action, EnvConfig};
use crate::nnopt::{AlgorithmTag, Checkpoint};

/// Always `(ζ_max, M_max)`.
#[derive(Debug, Clone)]
pub struct MaxResources {
    env: EnvConfig,
}

impl MaxResources {
    pub fn new(env: EnvConfig) -> Self {
        Self { env }
    }

    pub fn action(&self) -> Action {
        Action::max_resources(&self.env)
    }
}

impl Agent for MaxResources {
    fn algorithm(&self) -> AlgorithmTag {
        AlgorithmTag::Mr
    }

    fn act(&mut self, _obs_db: f64, _mode: ActMode) -> Action {
        self.action()
    }

    fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            algorithm: AlgorithmTag::Mr,
            sections: Vec::new(),
        }
    }
}

/// Power uniform in dB, blocklength a uniform integer, independent of the
/// observation.
#[derive(Debug, Clone)]
pub struct RandomAssignment {
    env: EnvConfig,
    rng: ChaCha8Rng,
}

impl RandomAssignment {
    pub fn new(env: EnvConfig, seed: u64) -> Self {
        Self {
            env,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn draw(&mut self) -> Action {
        let e = &self.env;
        let db = self.rng.gen_range(e.min_tx_snr_db..=e.max_tx_snr_db);
        let m = self.rng.gen_range(e.min_blocklength..=e.max_blocklength);
        let snr = db_to_linear(db).clamp(e.min_tx_snr_linear(), e.max_tx_snr_linear());
        Action::new(snr, m, e).expect("draw lies inside the box")
    }
}

impl Agent for RandomAssignment {
    fn algorithm(&self) -> AlgorithmTag {
        AlgorithmTag::Ra
    }

    fn act(&mut self, _obs_db: f64, _mode: ActMode) -> Action {
        self.draw()
    }

    fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            algorithm: AlgorithmTag::Ra,
            sections: Vec::new(),
        }
    }
}
