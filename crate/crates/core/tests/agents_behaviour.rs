mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use snla::agents::{agent_from_checkpoint, new_agent, scale_obs, ActMode, Agent, SacAgent, SacConfig};
use snla::environment::{Action, EnvConfig, Environment};
use snla::nnopt::{AlgorithmTag, SquashedGaussianHead};

fn energy_bandit_reward(env: &EnvConfig, a: &Action) -> f64 {
    env.normalized_ee(a.scaled_energy())
}

/// Entropy-regularised objective `E[r] + α·H` of a squashed Gaussian policy
/// on the energy-only bandit, by Monte Carlo with common random numbers.
fn soft_objective(mean: [f64; 2], log_std: [f64; 2], alpha: f64) -> f64 {
    let env = EnvConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let n = 100_000;
    let mut total = 0.0;
    for _ in 0..n {
        let mut logp = 0.0;
        let mut unit = [0.0; 2];
        for i in 0..2 {
            let z: f64 = rng.sample(StandardNormal);
            let u = mean[i] + log_std[i].exp() * z;
            unit[i] = u.tanh();
            logp += -0.5 * z * z - log_std[i] - 0.5 * (2.0 * std::f64::consts::PI).ln() - (1.0 - unit[i] * unit[i] + 1e-6).ln();
        }
        total += energy_bandit_reward(&env, &Action::from_unit(unit, &env)) - alpha * logp;
    }
    total / n as f64
}

/// Trains SAC on the stateless energy-only bandit and returns the policy
/// head every 500 steps until `stop` accepts it or the budget runs out.
fn train_bandit(temperature: f64, budget: u64, mut stop: impl FnMut(u64, &mut SacAgent) -> bool) -> SacAgent {
    // narrower nets and batch keep the suite fast; everything else is default
    let cfg = SacConfig {
        hidden: vec![64, 64],
        batch_size: 64,
        temperature,
        ..SacConfig::default()
    };
    let env = EnvConfig::default().with_weight_outage(0.0);
    let mut agent = SacAgent::new(cfg, env.clone(), 1).unwrap();
    let obs = 0.0;
    for step in 1..=budget {
        let a = agent.act(obs, ActMode::Explore);
        agent.learn(obs, &a, energy_bandit_reward(&env, &a), obs).unwrap();
        if step % 500 == 0 && stop(step, &mut agent) {
            break;
        }
    }
    agent
}

// Offline Nelder-Mead optimum of `soft_objective` at α = 0.2.
const SOFT_OPT_MEAN: [f64; 2] = [-0.241, -0.216];
const SOFT_OPT_LOG_STD: [f64; 2] = [-0.040, -0.001];

#[test]
fn default_temperature_optimum_is_interior() {
    let opt = soft_objective(SOFT_OPT_MEAN, SOFT_OPT_LOG_STD, 0.2);
    // a policy concentrated near the minimum-energy corner
    let corner = soft_objective([-2.4, -3.1], [-0.6, -0.55], 0.2);
    assert!(opt > corner + 0.1, "{opt} vs {corner}");
    for d in [[0.3, 0.0, 0.0, 0.0], [0.0, -0.3, 0.0, 0.0], [0.0, 0.0, 0.3, 0.0], [0.0, 0.0, 0.0, -0.3]] {
        let j = soft_objective(
            [SOFT_OPT_MEAN[0] + d[0], SOFT_OPT_MEAN[1] + d[1]],
            [SOFT_OPT_LOG_STD[0] + d[2], SOFT_OPT_LOG_STD[1] + d[3]],
            0.2,
        );
        assert!(j < opt, "perturbation {d:?} improved the objective");
    }
}

#[test]
fn sac_settles_on_the_soft_optimal_bandit_policy() {
    let agent = train_bandit(0.2, 6000, |_, _| false);
    let head = agent.head(scale_obs(0.0));
    for i in 0..2 {
        assert!((head.mean()[i] - SOFT_OPT_MEAN[i]).abs() < 0.1, "mean {:?}", head.mean());
        assert!((head.log_std()[i] - SOFT_OPT_LOG_STD[i]).abs() < 0.1, "log std {:?}", head.log_std());
    }
}

#[test]
fn sac_reaches_the_minimum_energy_corner_at_low_temperature() {
    let env = EnvConfig::default();
    let span_db = env.max_tx_snr_db - env.min_tx_snr_db;
    let span_m = f64::from(env.max_blocklength - env.min_blocklength);
    let mut reached = None;
    train_bandit(0.01, 20_000, |step, agent| {
        let d = agent.act(0.0, ActMode::Deterministic);
        let near = d.tx_snr_db() - env.min_tx_snr_db <= 0.05 * span_db
            && f64::from(d.blocklength() - env.min_blocklength) <= 0.05 * span_m;
        if near {
            reached = Some(step);
        }
        near
    });
    assert!(reached.is_some(), "did not reach the corner within 20k steps");
}

#[test]
fn squashed_density_is_the_derivative_of_its_cdf() {
    let normal_cdf = |z: f64| 1.0 - snla::fblmath::gaussian_q(z).unwrap();
    for &(mu, log_std) in &[(0.0, 0.0), (0.7, -0.5), (-1.2, 0.3), (0.2, -1.5)] {
        let head = SquashedGaussianHead::new(vec![mu], vec![log_std]);
        let sd = f64::exp(log_std);
        let cdf = |a: f64| normal_cdf((a.atanh() - mu) / sd);
        for i in 1..40 {
            let a = -0.95 + i as f64 * 0.0475;
            let h = 1e-5;
            let numeric = (cdf(a + h) - cdf(a - h)) / (2.0 * h);
            let analytic = head.log_prob_of_action(&[a]).exp();
            assert!((numeric - analytic).abs() < 1e-3 * numeric.max(1.0), "mu={mu} a={a}: {numeric} vs {analytic}");
        }
    }
}

#[test]
fn squashed_sample_mean_matches_quadrature() {
    let (mu, log_std) = (0.4, -0.3);
    let head = SquashedGaussianHead::new(vec![mu], vec![log_std]);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 200_000;
    let mc: f64 = (0..n).map(|_| head.sample(&mut rng).action[0]).sum::<f64>() / n as f64;
    // trapezoid over ±10σ of E[tanh(μ + σz)]
    let sd = f64::exp(log_std);
    let k = 20_000;
    let dz = 20.0 / k as f64;
    let quad: f64 = (0..=k)
        .map(|i| {
            let z = -10.0 + i as f64 * dz;
            let w = if i == 0 || i == k { 0.5 } else { 1.0 };
            w * (mu + sd * z).tanh() * (-0.5 * z * z).exp()
        })
        .sum::<f64>()
        * dz
        / (2.0 * std::f64::consts::PI).sqrt();
    // 5 standard errors, tanh has variance below 1
    assert!((mc - quad).abs() < 5.0 / (n as f64).sqrt(), "{mc} vs {quad}");
}

fn random_state(seed: u64, steps: usize) -> Environment {
    let cfg = EnvConfig::default();
    let mut env = Environment::new(cfg.clone()).unwrap();
    env.reset(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    for _ in 0..steps {
        let a = Action::from_unit([rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)], &cfg);
        env.step(&a).unwrap();
    }
    env
}

proptest! {
    #[test]
    fn max_resources_minimizes_outage(seed: u64, steps in 0usize..60, u0 in -1.0f64..=1.0, u1 in -1.0f64..=1.0) {
        let env = random_state(seed, steps);
        let cfg = env.config().clone();
        let mr = new_agent(AlgorithmTag::Mr, &cfg, 0).unwrap().act(env.observe(), ActMode::Deterministic);
        let other = Action::from_unit([u0, u1], &cfg);
        prop_assert!(env.outage_for(&mr) <= env.outage_for(&other));
    }
}

#[test]
fn every_agent_drives_the_same_environment() {
    let cfg = EnvConfig::default();
    for tag in [
        AlgorithmTag::Sac,
        AlgorithmTag::Ddpg,
        AlgorithmTag::Td3,
        AlgorithmTag::Ql,
        AlgorithmTag::Ra,
        AlgorithmTag::Mr,
    ] {
        let mut agent: Box<dyn Agent> = new_agent(tag, &cfg, 4).unwrap();
        assert_eq!(agent.algorithm(), tag);
        let mut env = Environment::new(cfg.clone()).unwrap();
        let mut obs = env.reset(2);
        for _ in 0..50 {
            let a = agent.act(obs, ActMode::Explore);
            let o = env.step(&a).unwrap();
            agent.learn(obs, &a, o.reward, o.next_state_sinr_db).unwrap();
            obs = o.next_state_sinr_db;
        }
        agent.end_episode();
        assert!(agent.params_finite());

        let ck = agent.checkpoint();
        let mut restored = agent_from_checkpoint(&ck, &cfg, 4).unwrap();
        if tag != AlgorithmTag::Ra {
            for o in [-30.0, -5.0, 0.0, 12.5, 40.0] {
                assert_eq!(
                    agent.act(o, ActMode::Deterministic),
                    restored.act(o, ActMode::Deterministic),
                    "{tag:?} at {o} dB"
                );
            }
        }
        assert_eq!(restored.checkpoint().to_bytes(), ck.to_bytes());
    }
}
