//! In-factory subnetwork world seen by a single desired link.
//!
//! `N` interfering subnetworks transmit `l`-slot messages that start with
//! probability `μ` whenever an interferer is idle. Every link experiences
//! Rayleigh block fading (unit-mean exponential power gain) redrawn every
//! `T_c` mini-slots. Noise power is normalised to one, so powers are
//! expressed as transmit SNR `ζ` and interference-to-noise ratios.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fblmath::{outage_probability, LinkBudget};

/// Observation clipping range in dB.
pub const OBS_MIN_DB: f64 = -40.0;
pub const OBS_MAX_DB: f64 = 60.0;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Scenario and reward parameters. Defaults reproduce the reference
/// scenario: five always-on interferers with mean INR uniform on
/// `[−10, 5]` dB, 50-bit packets, `ζ_max = 20` dB and `M_max = 1000`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub n_interferers: usize,
    pub activation_factor: f64,
    pub message_duration: u32,
    pub mean_inr_db_min: f64,
    pub mean_inr_db_max: f64,
    pub max_tx_snr_db: f64,
    pub min_tx_snr_db: f64,
    pub max_blocklength: u32,
    pub min_blocklength: u32,
    pub info_bits: u32,
    pub outage_threshold: f64,
    pub availability_target: f64,
    pub consec_threshold: u32,
    pub weight_outage: f64,
    pub weight_ee: f64,
    pub coherence_slots: u32,
    pub episode_steps: u32,
    pub rng_seed: u64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            n_interferers: 5,
            activation_factor: 1.0,
            message_duration: 10,
            mean_inr_db_min: -10.0,
            mean_inr_db_max: 5.0,
            max_tx_snr_db: 20.0,
            min_tx_snr_db: 0.0,
            max_blocklength: 1000,
            min_blocklength: 50,
            info_bits: 50,
            outage_threshold: 1e-5,
            availability_target: 0.98,
            consec_threshold: 2,
            weight_outage: 0.3,
            weight_ee: 0.7,
            coherence_slots: 10,
            episode_steps: 500,
            rng_seed: 0,
        }
    }
}

impl EnvConfig {
    /// Sets `ω1` and the complementary `ω2 = 1 − ω1`.
    pub fn with_weight_outage(mut self, weight_outage: f64) -> Self {
        self.weight_outage = weight_outage;
        self.weight_ee = 1.0 - weight_outage;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::config(name, format!("must lie in [0, 1], got {v}")))
            }
        };
        unit("activation_factor", self.activation_factor)?;
        unit("weight_outage", self.weight_outage)?;
        unit("weight_ee", self.weight_ee)?;
        unit("availability_target", self.availability_target)?;
        if (self.weight_outage + self.weight_ee - 1.0).abs() > 1e-9 {
            return Err(Error::config(
                "weight_ee",
                format!(
                    "weight_outage + weight_ee must equal 1, got {}",
                    self.weight_outage + self.weight_ee
                ),
            ));
        }
        if !(self.outage_threshold > 0.0 && self.outage_threshold < 1.0) {
            return Err(Error::config("outage_threshold", "must lie in (0, 1)"));
        }
        if self.message_duration == 0 {
            return Err(Error::config("message_duration", "must be at least 1"));
        }
        if !(self.mean_inr_db_min.is_finite() && self.mean_inr_db_max.is_finite())
            || self.mean_inr_db_min > self.mean_inr_db_max
        {
            return Err(Error::config("mean_inr_db_min", "range must be finite and ordered"));
        }
        if !(self.max_tx_snr_db.is_finite() && self.min_tx_snr_db.is_finite())
            || self.min_tx_snr_db >= self.max_tx_snr_db
        {
            return Err(Error::config(
                "min_tx_snr_db",
                "must be finite and strictly below max_tx_snr_db",
            ));
        }
        if self.min_blocklength == 0 {
            return Err(Error::config("min_blocklength", "must be at least 1"));
        }
        if self.min_blocklength > self.max_blocklength {
            return Err(Error::config("max_blocklength", "must be at least min_blocklength"));
        }
        if self.info_bits == 0 {
            return Err(Error::config("info_bits", "must be at least 1"));
        }
        if self.coherence_slots == 0 {
            return Err(Error::config("coherence_slots", "must be at least 1"));
        }
        if self.episode_steps == 0 {
            return Err(Error::config("episode_steps", "must be at least 1"));
        }
        Ok(())
    }

    pub fn max_tx_snr_linear(&self) -> f64 {
        db_to_linear(self.max_tx_snr_db)
    }

    pub fn min_tx_snr_linear(&self) -> f64 {
        db_to_linear(self.min_tx_snr_db)
    }

    /// Scaled energy `ζ_min·m_min` of the cheapest action.
    pub fn min_energy(&self) -> f64 {
        self.min_tx_snr_linear() * f64::from(self.min_blocklength)
    }

    /// Scaled energy `ζ_max·M_max` of the maximum-resources action.
    pub fn max_energy(&self) -> f64 {
        self.max_tx_snr_linear() * f64::from(self.max_blocklength)
    }

    /// Min-max normalised energy efficiency `b/E` over the action box.
    pub fn normalized_ee(&self, scaled_energy: f64) -> f64 {
        let bits = f64::from(self.info_bits);
        let ee_lo = bits / self.max_energy();
        let ee_hi = bits / self.min_energy();
        ((bits / scaled_energy - ee_lo) / (ee_hi - ee_lo)).clamp(0.0, 1.0)
    }
}

/// Transmit SNR and blocklength chosen for one mini-slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Action {
    tx_snr_linear: f64,
    blocklength: u32,
}

impl Action {
    /// Validates against the configured box. Values within `1e-9` (relative)
    /// of a power bound are snapped onto it to absorb dB round trips.
    pub fn new(tx_snr_linear: f64, blocklength: u32, config: &EnvConfig) -> Result<Self> {
        let lo = config.min_tx_snr_linear();
        let hi = config.max_tx_snr_linear();
        let snapped = if (tx_snr_linear - lo).abs() <= 1e-9 * lo {
            lo
        } else if (tx_snr_linear - hi).abs() <= 1e-9 * hi {
            hi
        } else {
            tx_snr_linear
        };
        if !(lo..=hi).contains(&snapped) {
            return Err(Error::Domain(format!(
                "transmit SNR {tx_snr_linear} outside [{lo}, {hi}]"
            )));
        }
        if !(config.min_blocklength..=config.max_blocklength).contains(&blocklength) {
            return Err(Error::Domain(format!(
                "blocklength {blocklength} outside [{}, {}]",
                config.min_blocklength, config.max_blocklength
            )));
        }
        Ok(Self {
            tx_snr_linear: snapped,
            blocklength,
        })
    }

    pub fn from_db(tx_snr_db: f64, blocklength: u32, config: &EnvConfig) -> Result<Self> {
        Self::new(db_to_linear(tx_snr_db), blocklength, config)
    }

    /// `(ζ_max, M_max)`.
    pub fn max_resources(config: &EnvConfig) -> Self {
        Self {
            tx_snr_linear: config.max_tx_snr_linear(),
            blocklength: config.max_blocklength,
        }
    }

    /// `(ζ_min, m_min)`.
    pub fn min_resources(config: &EnvConfig) -> Self {
        Self {
            tx_snr_linear: config.min_tx_snr_linear(),
            blocklength: config.min_blocklength,
        }
    }

    /// Maps a point of `[−1, 1]²` affinely onto the box: power in dB,
    /// blocklength rounded to the nearest integer.
    pub fn from_unit(unit: [f64; 2], config: &EnvConfig) -> Self {
        let u0 = (unit[0].clamp(-1.0, 1.0) + 1.0) * 0.5;
        let u1 = (unit[1].clamp(-1.0, 1.0) + 1.0) * 0.5;
        let db = config.min_tx_snr_db + u0 * (config.max_tx_snr_db - config.min_tx_snr_db);
        let span = f64::from(config.max_blocklength - config.min_blocklength);
        let blocklength = config.min_blocklength + (u1 * span).round() as u32;
        let tx_snr_linear = db_to_linear(db).clamp(config.min_tx_snr_linear(), config.max_tx_snr_linear());
        Self {
            tx_snr_linear,
            blocklength: blocklength.min(config.max_blocklength),
        }
    }

    /// Inverse of [`Action::from_unit`] up to blocklength rounding.
    pub fn to_unit(&self, config: &EnvConfig) -> [f64; 2] {
        let db = linear_to_db(self.tx_snr_linear);
        let u0 = (db - config.min_tx_snr_db) / (config.max_tx_snr_db - config.min_tx_snr_db);
        let span = f64::from(config.max_blocklength - config.min_blocklength);
        let u1 = if span > 0.0 {
            f64::from(self.blocklength - config.min_blocklength) / span
        } else {
            0.5
        };
        [2.0 * u0 - 1.0, 2.0 * u1 - 1.0]
    }

    pub fn tx_snr_linear(&self) -> f64 {
        self.tx_snr_linear
    }

    pub fn tx_snr_db(&self) -> f64 {
        linear_to_db(self.tx_snr_linear)
    }

    pub fn blocklength(&self) -> u32 {
        self.blocklength
    }

    /// `ζ·m = E/σ²`.
    pub fn scaled_energy(&self) -> f64 {
        self.tx_snr_linear * f64::from(self.blocklength)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterfererState {
    pub mean_inr_db: f64,
    pub tx_power_linear: f64,
    pub fading_gain: f64,
    pub active: bool,
    pub remaining_slots: u32,
    pub coherence_countdown: u32,
}

impl InterfererState {
    pub fn new(mean_inr_db: f64, fading_gain: f64, coherence_slots: u32) -> Self {
        Self {
            mean_inr_db,
            tx_power_linear: db_to_linear(mean_inr_db),
            fading_gain,
            active: false,
            remaining_slots: 0,
            coherence_countdown: coherence_slots,
        }
    }

    fn start_message(&mut self, duration: u32) {
        self.active = true;
        self.remaining_slots = duration;
    }
}

/// Per-step result of [`Environment::step`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub next_state_sinr_db: f64,
    pub reward: f64,
    pub outage_prob: f64,
    pub scaled_energy: f64,
    pub outage_flag: bool,
    pub consec_count: u32,
    pub violation_flag: bool,
    /// Realised SINR of the transmission, linear.
    pub sinr_linear: f64,
}

/// `Σ_k p_k·|h_k|²·δ_k`.
pub fn aggregate_interference(interferers: &[InterfererState]) -> f64 {
    interferers
        .iter()
        .filter(|s| s.active)
        .map(|s| s.tx_power_linear * s.fading_gain)
        .sum()
}

/// One mini-slot of traffic and fading evolution for every interferer.
///
/// Active interferers consume a slot of their message; an interferer that is
/// idle afterwards (including one that just finished) starts a new message
/// with probability `μ`. Coherence countdowns tick and fading is redrawn on
/// expiry.
pub fn advance_traffic_and_fading<R: Rng + ?Sized>(
    interferers: &mut [InterfererState],
    config: &EnvConfig,
    rng: &mut R,
) {
    for s in interferers.iter_mut() {
        if s.active {
            s.remaining_slots -= 1;
            if s.remaining_slots == 0 {
                s.active = false;
            }
        }
        if !s.active && rng.gen_bool(config.activation_factor) {
            s.start_message(config.message_duration);
        }
        s.coherence_countdown -= 1;
        if s.coherence_countdown == 0 {
            s.fading_gain = Exp1.sample(rng);
            s.coherence_countdown = config.coherence_slots;
        }
    }
}

/// Single-link MDP: state is the SINR observed at the reference power
/// `ζ_max`, the action is `(ζ, m)`, the reward trades consecutive outages
/// against normalised energy efficiency.
#[derive(Debug, Clone)]
pub struct Environment {
    config: EnvConfig,
    rng: ChaCha8Rng,
    interferers: Vec<InterfererState>,
    desired_gain: f64,
    desired_countdown: u32,
    consec_count: u32,
    initialized: bool,
}

impl Environment {
    pub fn new(config: EnvConfig) -> Result<Self> {
        config.validate()?;
        let seed = config.rng_seed;
        Ok(Self {
            config,
            rng: ChaCha8Rng::seed_from_u64(seed),
            interferers: Vec::new(),
            desired_gain: 1.0,
            desired_countdown: 1,
            consec_count: 0,
            initialized: false,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn interferers(&self) -> &[InterfererState] {
        &self.interferers
    }

    pub fn desired_gain(&self) -> f64 {
        self.desired_gain
    }

    pub fn consec_count(&self) -> u32 {
        self.consec_count
    }

    pub fn is_initialized(&self) -> bool {
        self.initialized
    }

    /// Starts a new episode: redraws mean INRs and all fading gains, starts
    /// interferer traffic and clears the consecutive-outage counter.
    pub fn reset(&mut self, seed: u64) -> f64 {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = &self.config;
        let inr = Uniform::new_inclusive(cfg.mean_inr_db_min, cfg.mean_inr_db_max);
        let mut interferers = Vec::with_capacity(cfg.n_interferers);
        for _ in 0..cfg.n_interferers {
            let mean_inr_db = inr.sample(&mut self.rng);
            let gain: f64 = Exp1.sample(&mut self.rng);
            let mut s = InterfererState::new(mean_inr_db, gain, cfg.coherence_slots);
            if self.rng.gen_bool(cfg.activation_factor) {
                s.start_message(cfg.message_duration);
            }
            interferers.push(s);
        }
        self.interferers = interferers;
        self.desired_gain = Exp1.sample(&mut self.rng);
        self.desired_countdown = self.config.coherence_slots;
        self.consec_count = 0;
        self.initialized = true;
        self.observe()
    }

    /// Replaces the channel realisation. Intended for tests and what-if
    /// evaluation; the counter and generator are left untouched.
    pub fn set_channel(&mut self, desired_gain: f64, interferers: Vec<InterfererState>) {
        self.desired_gain = desired_gain;
        self.interferers = interferers;
        self.desired_countdown = self.config.coherence_slots;
        self.initialized = true;
    }

    pub fn interference(&self) -> f64 {
        aggregate_interference(&self.interferers)
    }

    /// `|h|²/(1 + I)`, the SINR per unit transmit SNR.
    pub fn channel_quality(&self) -> f64 {
        self.desired_gain / (1.0 + self.interference())
    }

    /// SINR in dB the current realisation yields at `ζ_max`, clipped to
    /// `[OBS_MIN_DB, OBS_MAX_DB]`.
    pub fn observe(&self) -> f64 {
        let sinr = self.config.max_tx_snr_linear() * self.channel_quality();
        linear_to_db(sinr).clamp(OBS_MIN_DB, OBS_MAX_DB)
    }

    /// Outage probability `action` would see on the current realisation.
    pub fn outage_for(&self, action: &Action) -> f64 {
        let sinr = (action.tx_snr_linear() * self.channel_quality()).max(f64::MIN_POSITIVE);
        let budget = LinkBudget::new(sinr, self.config.info_bits, action.blocklength())
            .expect("action and config are validated");
        outage_probability(&budget)
    }

    fn check_action(&self, action: &Action) -> Result<()> {
        let cfg = &self.config;
        let lo = cfg.min_tx_snr_linear() * (1.0 - 1e-9);
        let hi = cfg.max_tx_snr_linear() * (1.0 + 1e-9);
        if !(lo..=hi).contains(&action.tx_snr_linear())
            || !(cfg.min_blocklength..=cfg.max_blocklength).contains(&action.blocklength())
        {
            return Err(Error::Domain(format!(
                "action ({} dB, {}) outside the configured box",
                action.tx_snr_db(),
                action.blocklength()
            )));
        }
        Ok(())
    }

    pub fn step(&mut self, action: &Action) -> Result<StepOutcome> {
        if !self.initialized {
            return Err(Error::State("step called before reset".into()));
        }
        self.check_action(action)?;
        let cfg = &self.config;

        let sinr_linear = (action.tx_snr_linear() * self.channel_quality()).max(f64::MIN_POSITIVE);
        let outage_prob = self.outage_for(action);
        let scaled_energy = action.scaled_energy();
        let outage_flag = outage_prob > cfg.outage_threshold;
        self.consec_count = if outage_flag { self.consec_count + 1 } else { 0 };
        let violation_flag = self.consec_count > cfg.consec_threshold;
        let ee = cfg.normalized_ee(scaled_energy);
        let penalty = if violation_flag { cfg.weight_outage } else { 0.0 };
        let reward = cfg.weight_ee * ee - penalty;

        self.advance();
        Ok(StepOutcome {
            next_state_sinr_db: self.observe(),
            reward,
            outage_prob,
            scaled_energy,
            outage_flag,
            consec_count: self.consec_count,
            violation_flag,
            sinr_linear,
        })
    }

    fn advance(&mut self) {
        advance_traffic_and_fading(&mut self.interferers, &self.config, &mut self.rng);
        self.desired_countdown -= 1;
        if self.desired_countdown == 0 {
            self.desired_gain = Exp1.sample(&mut self.rng);
            self.desired_countdown = self.config.coherence_slots;
        }
    }
}
