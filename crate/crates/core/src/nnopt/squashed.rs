use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub const LOG_STD_MIN: f64 = -20.0;
pub const LOG_STD_MAX: f64 = 2.0;
/// Keeps `log(1 − tanh²)` finite at saturation.
pub const SQUASH_EPS: f64 = 1e-6;

/// Diagonal Gaussian over pre-activations `u`, squashed through `tanh`
/// so that actions live in `(−1, 1)^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SquashedGaussianHead {
    mean: Vec<f64>,
    log_std: Vec<f64>,
}

/// A reparameterised draw `a = tanh(mean + exp(log_std)·noise)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SquashedSample {
    pub action: Vec<f64>,
    pub log_prob: f64,
    pub pre_tanh: Vec<f64>,
    pub noise: Vec<f64>,
}

impl SquashedGaussianHead {
    /// `log_std` is clamped to `[LOG_STD_MIN, LOG_STD_MAX]`.
    pub fn new(mean: Vec<f64>, log_std: Vec<f64>) -> Self {
        assert_eq!(mean.len(), log_std.len(), "mean and log_std differ in length");
        let log_std = log_std
            .into_iter()
            .map(|v| v.clamp(LOG_STD_MIN, LOG_STD_MAX))
            .collect();
        Self { mean, log_std }
    }

    /// Splits a raw actor output `[mean…, log_std…]`.
    pub fn from_raw(raw: &[f64]) -> Self {
        let d = raw.len() / 2;
        Self::new(raw[..d].to_vec(), raw[d..2 * d].to_vec())
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn log_std(&self) -> &[f64] {
        &self.log_std
    }

    pub fn deterministic_action(&self) -> Vec<f64> {
        self.mean.iter().map(|m| m.tanh()).collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SquashedSample {
        let noise: Vec<f64> = (0..self.dim()).map(|_| StandardNormal.sample(rng)).collect();
        self.sample_with_noise(&noise)
    }

    pub fn sample_with_noise(&self, noise: &[f64]) -> SquashedSample {
        let pre_tanh: Vec<f64> = self
            .mean
            .iter()
            .zip(&self.log_std)
            .zip(noise)
            .map(|((m, ls), n)| m + ls.exp() * n)
            .collect();
        let action = pre_tanh.iter().map(|u| u.tanh()).collect();
        let log_prob = self.log_prob_pre_tanh(&pre_tanh);
        SquashedSample {
            action,
            log_prob,
            pre_tanh,
            noise: noise.to_vec(),
        }
    }

    /// `Σ_i [log N(u_i; mean_i, std_i) − log(1 − tanh(u_i)² + ε)]`.
    pub fn log_prob_pre_tanh(&self, pre_tanh: &[f64]) -> f64 {
        let half_log_2pi = 0.5 * (2.0 * PI).ln();
        self.mean
            .iter()
            .zip(&self.log_std)
            .zip(pre_tanh)
            .map(|((m, ls), u)| {
                let z = (u - m) / ls.exp();
                let t = u.tanh();
                -0.5 * z * z - ls - half_log_2pi - (1.0 - t * t + SQUASH_EPS).ln()
            })
            .sum()
    }

    /// Log-density of an action in `(−1, 1)^d`.
    pub fn log_prob_of_action(&self, action: &[f64]) -> f64 {
        let pre: Vec<f64> = action.iter().map(|a| a.atanh()).collect();
        self.log_prob_pre_tanh(&pre)
    }

    /// Gradient of `α·log π(a) + g(a)` with respect to the raw actor outputs
    /// `[mean…, log_std…]` for a reparameterised `sample` with its noise held
    /// fixed. `dg_da` is `∂g/∂a`; `raw_log_std` is the pre-clamp output, whose
    /// gradient vanishes outside the clamp range.
    pub fn reparam_gradient(
        &self,
        raw_log_std: &[f64],
        sample: &SquashedSample,
        alpha: f64,
        dg_da: &[f64],
    ) -> Vec<f64> {
        let d = self.dim();
        let mut grad = vec![0.0; 2 * d];
        for i in 0..d {
            let t = sample.action[i];
            let sech2 = 1.0 - t * t;
            let dlogp_du = 2.0 * t * sech2 / (sech2 + SQUASH_EPS);
            let dl_du = alpha * dlogp_du + dg_da[i] * sech2;
            grad[i] = dl_du;
            let in_range = (LOG_STD_MIN..=LOG_STD_MAX).contains(&raw_log_std[i]);
            grad[d + i] = if in_range {
                dl_du * self.log_std[i].exp() * sample.noise[i] - alpha
            } else {
                0.0
            };
        }
        grad
    }
}
