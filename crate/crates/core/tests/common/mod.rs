//! Independent reference implementations used as test oracles. None of
//! these call into the library code they check.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Standard normal upper tail. Power series for `|x| < 3`, Lentz continued
/// fraction for the Mills ratio beyond.
pub fn q_oracle(x: f64) -> f64 {
    if x < 0.0 {
        return 1.0 - q_oracle(-x);
    }
    let phi = (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
    if x < 3.0 {
        // Q(x) = 1/2 − φ(x) Σ x^(2n+1) / (2n+1)!!
        let mut term = x;
        let mut sum = x;
        let mut n = 0.0;
        loop {
            n += 1.0;
            term *= x * x / (2.0 * n + 1.0);
            sum += term;
            if term <= sum * 1e-18 {
                break;
            }
        }
        0.5 - phi * sum
    } else {
        phi * mills_ratio(x)
    }
}

/// `Q(x)/φ(x) = 1/(x + 1/(x + 2/(x + …)))` by the modified Lentz method.
fn mills_ratio(x: f64) -> f64 {
    let tiny = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..10_000 {
        let a = k as f64;
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    1.0 / f
}

/// Outage probability written from the normal approximation directly, in
/// natural-log units.
pub fn outage_oracle(sinr: f64, bits: u32, m: u32) -> f64 {
    let ln2 = 2f64.ln();
    let cap_nats = (1.0 + sinr).ln();
    let v_nats = 1.0 - 1.0 / ((1.0 + sinr) * (1.0 + sinr));
    let rate_nats = bits as f64 / m as f64 * ln2;
    // the kernel's ln 2 factor survives the change of units
    let arg = (cap_nats - rate_nats) / (v_nats / m as f64).sqrt() * ln2;
    q_oracle(arg)
}

/// Relative error; values that are both below the smallest normal `f64`
/// compare equal since their relative precision is gone.
pub fn rel_err(a: f64, b: f64) -> f64 {
    if a.abs() < f64::MIN_POSITIVE && b.abs() < f64::MIN_POSITIVE {
        return 0.0;
    }
    ((a - b) / b).abs()
}

/// Run-length histogram by explicit start/end index bookkeeping.
pub fn runs_oracle(flags: &[bool]) -> BTreeMap<u32, u64> {
    let mut out = BTreeMap::new();
    let mut i = 0;
    while i < flags.len() {
        if flags[i] {
            let start = i;
            while i < flags.len() && flags[i] {
                i += 1;
            }
            *out.entry((i - start) as u32).or_insert(0) += 1;
        } else {
            i += 1;
        }
    }
    out
}

/// Fraction of steps at which the replayed consecutive-outage counter
/// exceeds `l_th`, pooled over episodes.
pub fn exceedance_oracle(episodes: &[Vec<bool>], l_th: u32) -> f64 {
    let mut over = 0usize;
    let mut total = 0usize;
    for ep in episodes {
        for t in 0..ep.len() {
            let mut c = 0;
            let mut k = t + 1;
            while k > 0 && ep[k - 1] {
                c += 1;
                k -= 1;
            }
            if c > l_th {
                over += 1;
            }
            total += 1;
        }
    }
    over as f64 / total as f64
}

/// Pairwise O(n²) non-domination test, both coordinates minimized.
pub fn pareto_oracle(points: &[(f64, f64)]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| {
            !points.iter().enumerate().any(|(j, q)| {
                let p = points[i];
                j != i && q.0 <= p.0 && q.1 <= p.1 && (q.0 < p.0 || q.1 < p.1)
            })
        })
        .collect()
}

pub mod grad {
    use rand::seq::index::sample;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use snla::agents::new_agent;
    use snla::environment::EnvConfig;
    use snla::nnopt::{AlgorithmTag, DenseNet, Matrix, SectionKind};

    /// Distinct network shapes found in the checkpoints of the neural agents.
    pub fn agent_networks() -> Vec<(String, DenseNet)> {
        let env = EnvConfig::default();
        let mut out: Vec<(String, DenseNet)> = Vec::new();
        for tag in [AlgorithmTag::Sac, AlgorithmTag::Ddpg, AlgorithmTag::Td3] {
            let ck = new_agent(tag, &env, 11).unwrap().checkpoint();
            for s in ck.sections.iter().filter(|s| s.kind == SectionKind::Dense) {
                let net = s.to_dense().unwrap();
                if !out.iter().any(|(_, n)| n.dims() == net.dims()) {
                    out.push((format!("{}{:?}", tag.name(), net.dims()), net));
                }
            }
        }
        out
    }

    fn loss(net: &DenseNet, x: &Matrix, w: &Matrix) -> f64 {
        let y = net.predict(x).unwrap();
        y.as_slice().iter().zip(w.as_slice()).map(|(a, b)| a * b).sum()
    }

    fn rel(a: f64, b: f64) -> f64 {
        let scale = a.abs().max(b.abs());
        if scale < 1e-10 {
            0.0
        } else {
            (a - b).abs() / scale
        }
    }

    /// Worst relative error between backprop and central differences over
    /// `coords` parameters with non-zero gradient and every input entry.
    pub fn worst_relative_error(net: &DenseNet, coords: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let batch = 4;
        let x = Matrix::from_vec(
            batch,
            net.input_dim(),
            (0..batch * net.input_dim()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let w = Matrix::from_vec(
            batch,
            net.output_dim(),
            (0..batch * net.output_dim()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap();

        let mut work = net.clone();
        work.forward(&x).unwrap();
        let g = work.backward(&w).unwrap();

        let live: Vec<usize> = (0..g.params.len()).filter(|&i| g.params[i] != 0.0).collect();
        assert!(live.len() >= coords, "too few live parameters");
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        for k in sample(&mut rng, live.len(), coords) {
            let i = live[k];
            let mut p = net.clone();
            let base = p.params()[i];
            p.params_mut()[i] = base + h;
            let up = loss(&p, &x, &w);
            p.params_mut()[i] = base - h;
            let down = loss(&p, &x, &w);
            worst = worst.max(rel((up - down) / (2.0 * h), g.params[i]));
        }
        for i in 0..x.as_slice().len() {
            let mut xp = x.clone();
            xp.as_mut_slice()[i] += h;
            let up = loss(net, &xp, &w);
            xp.as_mut_slice()[i] -= 2.0 * h;
            let down = loss(net, &xp, &w);
            worst = worst.max(rel((up - down) / (2.0 * h), g.input.as_slice()[i]));
        }
        worst
    }
}

pub mod gen {
    use rand::Rng;
    use snla::metrics::{EpisodeLog, ParetoPoint};

    /// Bursty outage flags from a two-state Markov chain.
    pub fn flags(rng: &mut impl Rng, len: usize) -> Vec<bool> {
        let p_enter = rng.gen_range(0.0..0.3);
        let p_stay = rng.gen_range(0.0..0.95);
        let mut state = false;
        (0..len)
            .map(|_| {
                state = if state { rng.gen_bool(p_stay) } else { rng.gen_bool(p_enter) };
                state
            })
            .collect()
    }

    pub fn log_from_flags(flags: &[bool]) -> EpisodeLog {
        EpisodeLog {
            outage_probs: flags.iter().map(|&f| if f { 1e-3 } else { 1e-7 }).collect(),
            outage_flags: flags.to_vec(),
            scaled_energies: vec![1.0; flags.len()],
            rewards: vec![0.0; flags.len()],
        }
    }

    /// Points on a coarse lattice so that ties and duplicates occur.
    pub fn points(rng: &mut impl Rng, n: usize) -> Vec<ParetoPoint> {
        let coarse = rng.gen_bool(0.5);
        (0..n)
            .map(|i| {
                let (e, x) = if coarse {
                    (rng.gen_range(0..20) as f64, rng.gen_range(0..20) as f64 * 0.01)
                } else {
                    (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0))
                };
                ParetoPoint::new(e, x, format!("p{i}")).unwrap()
            })
            .collect()
    }
}
