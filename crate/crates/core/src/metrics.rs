//! Post-hoc statistics over logged test episodes: availability, outage run
//! lengths, exceedance of the consecutive-outage threshold, empirical CDFs
//! and Pareto filtering.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::environment::{EnvConfig, StepOutcome};
use crate::error::{Error, Result};

/// Share of test episodes that must meet the availability target.
pub const GATE_FRACTION: f64 = 0.9;

/// Per-step record of one episode.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EpisodeLog {
    pub outage_probs: Vec<f64>,
    pub outage_flags: Vec<bool>,
    pub scaled_energies: Vec<f64>,
    pub rewards: Vec<f64>,
}

impl EpisodeLog {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            outage_probs: Vec::with_capacity(n),
            outage_flags: Vec::with_capacity(n),
            scaled_energies: Vec::with_capacity(n),
            rewards: Vec::with_capacity(n),
        }
    }

    pub fn push(&mut self, o: &StepOutcome) {
        self.outage_probs.push(o.outage_prob);
        self.outage_flags.push(o.outage_flag);
        self.scaled_energies.push(o.scaled_energy);
        self.rewards.push(o.reward);
    }

    pub fn len(&self) -> usize {
        self.outage_probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outage_probs.is_empty()
    }

    pub fn mean_reward(&self) -> f64 {
        mean(&self.rewards)
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Fraction of steps with `ε_t ≤ threshold`.
pub fn availability(log: &EpisodeLog, threshold: f64) -> Result<f64> {
    if log.is_empty() {
        return Err(Error::Domain("availability of an empty log".into()));
    }
    let ok = log.outage_probs.iter().filter(|&&p| p <= threshold).count();
    Ok(ok as f64 / log.len() as f64)
}

/// Lengths of maximal runs of `true`, tallied by length.
pub fn run_lengths(flags: &[bool]) -> BTreeMap<u32, u64> {
    let mut hist = BTreeMap::new();
    let mut run = 0u32;
    for &f in flags.iter().chain(std::iter::once(&false)) {
        if f {
            run += 1;
        } else if run > 0 {
            *hist.entry(run).or_insert(0) += 1;
            run = 0;
        }
    }
    hist
}

/// Merges `other` into `into`.
pub fn merge_histograms(into: &mut BTreeMap<u32, u64>, other: &BTreeMap<u32, u64>) {
    for (&k, &v) in other {
        *into.entry(k).or_insert(0) += v;
    }
}

/// Fraction of steps, pooled over episodes, at which the running
/// consecutive-outage counter exceeds `l_th`. The counter restarts with
/// every episode.
pub fn exceedance_probability(logs: &[EpisodeLog], l_th: u32) -> f64 {
    let mut total = 0u64;
    let mut exceed = 0u64;
    for log in logs {
        let mut c = 0u32;
        for &f in &log.outage_flags {
            c = if f { c + 1 } else { 0 };
            if c > l_th {
                exceed += 1;
            }
        }
        total += log.outage_flags.len() as u64;
    }
    if total == 0 {
        0.0
    } else {
        exceed as f64 / total as f64
    }
}

/// Secondary reading: fraction of outage runs longer than `l_th`.
pub fn run_exceedance_probability(hist: &BTreeMap<u32, u64>, l_th: u32) -> f64 {
    let runs: u64 = hist.values().sum();
    if runs == 0 {
        return 0.0;
    }
    let long: u64 = hist.range(l_th + 1..).map(|(_, v)| v).sum();
    long as f64 / runs as f64
}

/// Sorted `(value, F(value))` pairs of the right-continuous empirical CDF;
/// tied values appear once with the cumulative fraction after the tie.
pub fn empirical_cdf(values: &[f64]) -> Result<Vec<(f64, f64)>> {
    if values.is_empty() {
        return Err(Error::Domain("cdf of an empty sample".into()));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::Domain("cdf of a sample containing NaN".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, v) in sorted.iter().enumerate() {
        let f = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == *v => last.1 = f,
            _ => out.push((*v, f)),
        }
    }
    Ok(out)
}

/// Nearest-rank percentile: the `⌈q·n⌉`-th smallest value, `q ∈ (0, 1]`.
pub fn percentile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Domain("percentile of an empty sample".into()));
    }
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::Domain(format!("percentile level {q} outside (0, 1]")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    Ok(sorted[rank - 1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub energy: f64,
    pub exceedance: f64,
    pub label: String,
}

impl ParetoPoint {
    pub fn new(energy: f64, exceedance: f64, label: impl Into<String>) -> Result<Self> {
        if !(energy.is_finite() && energy >= 0.0 && exceedance.is_finite() && exceedance >= 0.0) {
            return Err(Error::Domain(format!(
                "pareto coordinates must be finite and non-negative, got ({energy}, {exceedance})"
            )));
        }
        Ok(Self {
            energy,
            exceedance,
            label: label.into(),
        })
    }

    /// Component-wise `≤` with at least one strict `<`.
    pub fn dominates(&self, other: &ParetoPoint) -> bool {
        self.energy <= other.energy
            && self.exceedance <= other.exceedance
            && (self.energy < other.energy || self.exceedance < other.exceedance)
    }
}

/// Non-dominated subset in input order.
pub fn pareto_filter(points: &[ParetoPoint]) -> Vec<ParetoPoint> {
    // sweep in energy order, then restore the input order
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[a]
            .energy
            .total_cmp(&points[b].energy)
            .then(points[a].exceedance.total_cmp(&points[b].exceedance))
    });
    let mut keep = vec![false; points.len()];
    let mut best_exceedance = f64::INFINITY;
    let mut i = 0;
    while i < order.len() {
        // group equal energies; within a group only the lowest exceedance survives
        let e = points[order[i]].energy;
        let mut j = i;
        while j < order.len() && points[order[j]].energy == e {
            j += 1;
        }
        let group_min = points[order[i]].exceedance;
        if group_min < best_exceedance {
            for &k in &order[i..j] {
                if points[k].exceedance == group_min {
                    keep[k] = true;
                }
            }
            best_exceedance = group_min;
        }
        i = j;
    }
    points
        .iter()
        .zip(keep)
        .filter_map(|(p, k)| k.then(|| p.clone()))
        .collect()
}

/// Test-phase statistics of one trained policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub weight_outage: f64,
    pub episode_availability: Vec<f64>,
    pub gate_passed: bool,
    /// Mean `ζm` over all test steps divided by `ζ_max·M_max`.
    pub mean_energy_fraction: f64,
    pub mean_scaled_energy: f64,
    pub exceedance_prob: f64,
    pub run_exceedance_prob: f64,
    pub max_run_length: u32,
    pub run_length_histogram: BTreeMap<u32, u64>,
    pub mean_reward: f64,
    /// Mean scaled energy of each episode, for the energy CDF.
    pub episode_energy: Vec<f64>,
}

impl TrialResult {
    pub fn from_logs(logs: &[EpisodeLog], config: &EnvConfig) -> Result<Self> {
        if logs.is_empty() {
            return Err(Error::Domain("trial result needs at least one episode".into()));
        }
        let episode_availability = logs
            .iter()
            .map(|l| availability(l, config.outage_threshold))
            .collect::<Result<Vec<_>>>()?;
        let gate_passed = gate_passed(&episode_availability, config.availability_target);
        let mut hist = BTreeMap::new();
        let mut energy = 0.0;
        let mut reward = 0.0;
        let mut steps = 0usize;
        for l in logs {
            merge_histograms(&mut hist, &run_lengths(&l.outage_flags));
            energy += l.scaled_energies.iter().sum::<f64>();
            reward += l.rewards.iter().sum::<f64>();
            steps += l.len();
        }
        let mean_scaled_energy = energy / steps as f64;
        Ok(Self {
            weight_outage: config.weight_outage,
            gate_passed,
            mean_energy_fraction: mean_scaled_energy / config.max_energy(),
            mean_scaled_energy,
            exceedance_prob: exceedance_probability(logs, config.consec_threshold),
            run_exceedance_prob: run_exceedance_probability(&hist, config.consec_threshold),
            max_run_length: hist.keys().next_back().copied().unwrap_or(0),
            run_length_histogram: hist,
            mean_reward: reward / steps as f64,
            episode_energy: logs.iter().map(|l| mean(&l.scaled_energies)).collect(),
            episode_availability,
        })
    }

    /// Fraction of episodes meeting the availability target.
    pub fn pass_fraction(&self, availability_target: f64) -> f64 {
        pass_fraction(&self.episode_availability, availability_target)
    }
}

pub fn pass_fraction(episode_availability: &[f64], target: f64) -> f64 {
    if episode_availability.is_empty() {
        return 0.0;
    }
    let ok = episode_availability.iter().filter(|&&a| a >= target).count();
    ok as f64 / episode_availability.len() as f64
}

/// The availability target is met in at least [`GATE_FRACTION`] of episodes.
pub fn gate_passed(episode_availability: &[f64], target: f64) -> bool {
    !episode_availability.is_empty() && pass_fraction(episode_availability, target) >= GATE_FRACTION
}

/// Every float in exported files carries 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_pareto_csv(path: &Path, points: &[ParetoPoint]) -> Result<()> {
    let mut out = String::from("label,energy,exceedance\n");
    for p in points {
        let _ = writeln!(out, "{},{},{}", p.label, fmt_f64(p.energy), fmt_f64(p.exceedance));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads a file written by [`write_pareto_csv`].
pub fn read_pareto_csv(path: &Path) -> Result<Vec<ParetoPoint>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |n: usize| Error::Domain(format!("{}: malformed row {n}", path.display()));
    let mut lines = text.lines();
    if lines.next() != Some("label,energy,exceedance") {
        return Err(bad(0));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let mut cols = line.split(',');
            let (Some(label), Some(e), Some(x), None) = (cols.next(), cols.next(), cols.next(), cols.next()) else {
                return Err(bad(i + 1));
            };
            let e = e.parse().map_err(|_| bad(i + 1))?;
            let x = x.parse().map_err(|_| bad(i + 1))?;
            ParetoPoint::new(e, x, label)
        })
        .collect()
}
