//! Experiment configuration and its flat `key = value` file format.
//!
//! One assignment per line, `#` starts a comment, blank lines are ignored.
//! Keys are the [`EnvConfig`] field names (except the reward weights and
//! `rng_seed`, which the experiment controls) plus the experiment keys
//! below. Unknown or repeated keys are rejected.
//!
//! ```text
//! algorithm = sac
//! trials = 3
//! weight_list = 0.1, 0.5, 0.9   # empty: draw ω1 per trial
//! n_interferers = 5
//! ```

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::environment::EnvConfig;
use crate::error::{Error, Result};
use crate::nnopt::AlgorithmTag;

/// Bounds of ω1 drawn in random-weight mode.
pub const RANDOM_WEIGHT_RANGE: (f64, f64) = (0.05, 0.95);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub env: EnvConfig,
    #[serde(with = "algorithm_name")]
    pub algorithm: AlgorithmTag,
    pub trials: usize,
    pub train_budget_steps: u64,
    pub convergence_window: usize,
    pub convergence_tol: f64,
    pub test_episodes: usize,
    pub test_steps: u32,
    /// ω1 per trial, cycled; empty draws a fresh weight for every trial.
    pub weight_list: Vec<f64>,
    pub master_seed: u64,
    pub output_dir: PathBuf,
}

mod algorithm_name {
    use super::AlgorithmTag;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(tag: &AlgorithmTag, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(tag.name())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<AlgorithmTag, D::Error> {
        let name = String::deserialize(d)?;
        AlgorithmTag::parse(&name).ok_or_else(|| serde::de::Error::custom(format!("unknown algorithm {name}")))
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let env = EnvConfig::default();
        Self {
            weight_list: vec![env.weight_outage],
            env,
            algorithm: AlgorithmTag::Sac,
            trials: 1,
            train_budget_steps: 25_000,
            convergence_window: 10,
            convergence_tol: 0.005,
            test_episodes: 1000,
            test_steps: 500,
            master_seed: 0,
            output_dir: PathBuf::from("snla-out"),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if self.test_episodes == 0 {
            return Err(Error::config("test_episodes", "must be at least 1"));
        }
        if self.test_steps == 0 {
            return Err(Error::config("test_steps", "must be at least 1"));
        }
        if self.convergence_window == 0 {
            return Err(Error::config("convergence_window", "must be at least 1"));
        }
        if !(self.convergence_tol >= 0.0 && self.convergence_tol.is_finite()) {
            return Err(Error::config("convergence_tol", "must be finite and non-negative"));
        }
        if let Some(w) = self.weight_list.iter().find(|w| !(**w > 0.0 && **w < 1.0)) {
            return Err(Error::config("weight_list", format!("weight {w} outside (0, 1)")));
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Parses the flat format on top of [`ExperimentConfig::default`] and
    /// validates the result.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = HashSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(format!("line {}", lineno + 1), format!("expected key = value, got {line:?}"))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::config(key, "given more than once"));
            }
            cfg.set(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let e = &mut self.env;
        match key {
            "algorithm" => {
                self.algorithm = AlgorithmTag::parse(value)
                    .ok_or_else(|| Error::config(key, format!("unknown algorithm {value:?}")))?
            }
            "trials" => self.trials = num(key, value)?,
            "train_budget_steps" => self.train_budget_steps = num(key, value)?,
            "convergence_window" => self.convergence_window = num(key, value)?,
            "convergence_tol" => self.convergence_tol = num(key, value)?,
            "test_episodes" => self.test_episodes = num(key, value)?,
            "test_steps" => self.test_steps = num(key, value)?,
            "weight_list" => self.weight_list = parse_list(key, value)?,
            "master_seed" => self.master_seed = num(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "n_interferers" => e.n_interferers = num(key, value)?,
            "activation_factor" => e.activation_factor = num(key, value)?,
            "message_duration" => e.message_duration = num(key, value)?,
            "mean_inr_db_min" => e.mean_inr_db_min = num(key, value)?,
            "mean_inr_db_max" => e.mean_inr_db_max = num(key, value)?,
            "max_tx_snr_db" => e.max_tx_snr_db = num(key, value)?,
            "min_tx_snr_db" => e.min_tx_snr_db = num(key, value)?,
            "max_blocklength" => e.max_blocklength = num(key, value)?,
            "min_blocklength" => e.min_blocklength = num(key, value)?,
            "info_bits" => e.info_bits = num(key, value)?,
            "outage_threshold" => e.outage_threshold = num(key, value)?,
            "availability_target" => e.availability_target = num(key, value)?,
            "consec_threshold" => e.consec_threshold = num(key, value)?,
            "coherence_slots" => e.coherence_slots = num(key, value)?,
            "episode_steps" => e.episode_steps = num(key, value)?,
            "weight_outage" | "weight_ee" => {
                return Err(Error::config(key, "reward weights are set through weight_list"))
            }
            _ => return Err(Error::config(key, "unknown key")),
        }
        Ok(())
    }

    /// Environment configuration of a trial run with outage weight `w1`.
    pub fn env_with_weight(&self, w1: f64) -> EnvConfig {
        self.env.clone().with_weight_outage(w1)
    }
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(key, format!("cannot parse {value:?}")))
}

/// Comma-separated list of reals; an empty value gives an empty list.
pub fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| num(key, s))
        .collect()
}
