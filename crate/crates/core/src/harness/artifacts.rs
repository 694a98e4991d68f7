//! CSV and manifest output of an experiment.
//!
//! | file | columns |
//! |------|---------|
//! | `reward_trace.csv` | `trial,weight_outage,episode,mean_reward` |
//! | `episodes.csv` | `trial,episode,availability,mean_scaled_energy` |
//! | `availability_cdf.csv` | `trial,value,cdf` over per-episode availability |
//! | `energy_cdf.csv` | `trial,value,cdf` over per-episode mean scaled energy |
//! | `consec_cdf.csv` | `trial,run_length,count,cdf` of outage runs |
//! | `trials.csv` | one summary row per trial |
//! | `pareto.csv` | `label,energy,exceedance` of the non-dominated gated trials |
//! | `manifest.json` | configuration echo, seeds, versions, warnings |
//!
//! `pareto_warning.txt` is written instead of being absent when no trial
//! passed the gate.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde_json::json;

use super::{ExperimentConfig, ExperimentReport};
use crate::error::{Error, Result};
use crate::metrics::{empirical_cdf, fmt_f64, write_pareto_csv};

pub const ARTIFACT_FILES: [&str; 8] = [
    "reward_trace.csv",
    "episodes.csv",
    "availability_cdf.csv",
    "energy_cdf.csv",
    "consec_cdf.csv",
    "trials.csv",
    "pareto.csv",
    "manifest.json",
];

pub const EMPTY_FRONT_FILE: &str = "pareto_warning.txt";

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))
}

pub fn write_artifacts(cfg: &ExperimentConfig, report: &ExperimentReport) -> Result<()> {
    let dir = &cfg.output_dir;
    let mut rewards = String::from("trial,weight_outage,episode,mean_reward\n");
    let mut episodes = String::from("trial,episode,availability,mean_scaled_energy\n");
    let mut avail = String::from("trial,value,cdf\n");
    let mut energy = String::from("trial,value,cdf\n");
    let mut consec = String::from("trial,run_length,count,cdf\n");
    let mut trials = String::from(
        "trial,algorithm,weight_outage,gate_passed,pass_fraction,mean_energy_fraction,exceedance_prob,max_run_length,mean_reward,train_steps,converged,checkpoint\n",
    );
    for rec in &report.records {
        let t = rec.trial_index;
        let res = &rec.result;
        for (e, r) in rec.training_reward_trace.iter().enumerate() {
            let _ = writeln!(rewards, "{t},{},{e},{}", fmt_f64(rec.weight_outage), fmt_f64(*r));
        }
        for (e, (a, en)) in res.episode_availability.iter().zip(&res.episode_energy).enumerate() {
            let _ = writeln!(episodes, "{t},{e},{},{}", fmt_f64(*a), fmt_f64(*en));
        }
        for (v, f) in empirical_cdf(&res.episode_availability)? {
            let _ = writeln!(avail, "{t},{},{}", fmt_f64(v), fmt_f64(f));
        }
        for (v, f) in empirical_cdf(&res.episode_energy)? {
            let _ = writeln!(energy, "{t},{},{}", fmt_f64(v), fmt_f64(f));
        }
        let runs: u64 = res.run_length_histogram.values().sum();
        let mut acc = 0u64;
        for (&len, &count) in &res.run_length_histogram {
            acc += count;
            let _ = writeln!(consec, "{t},{len},{count},{}", fmt_f64(acc as f64 / runs as f64));
        }
        let ckpt = rec
            .checkpoint_path
            .as_ref()
            .and_then(|p| p.file_name())
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let _ = writeln!(
            trials,
            "{t},{},{},{},{},{},{},{},{},{},{},{ckpt}",
            rec.algorithm,
            fmt_f64(rec.weight_outage),
            res.gate_passed,
            fmt_f64(res.pass_fraction(cfg.env.availability_target)),
            fmt_f64(res.mean_energy_fraction),
            fmt_f64(res.exceedance_prob),
            res.max_run_length,
            fmt_f64(res.mean_reward),
            rec.train_steps,
            rec.converged,
        );
    }
    write(dir, "reward_trace.csv", &rewards)?;
    write(dir, "episodes.csv", &episodes)?;
    write(dir, "availability_cdf.csv", &avail)?;
    write(dir, "energy_cdf.csv", &energy)?;
    write(dir, "consec_cdf.csv", &consec)?;
    write(dir, "trials.csv", &trials)?;
    write_pareto_csv(&dir.join("pareto.csv"), &report.front)?;

    let warning_path = dir.join(EMPTY_FRONT_FILE);
    if report.front.is_empty() {
        write(dir, EMPTY_FRONT_FILE, &format!("{}\n", report.warnings.join("\n")))?;
    } else if warning_path.exists() {
        fs::remove_file(&warning_path).map_err(|e| Error::io(&warning_path, e))?;
    }

    let manifest = json!({
        "package": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "checkpoint_format_version": crate::nnopt::checkpoint::FORMAT_VERSION,
        "config": cfg,
        "trials": report.records.iter().map(|r| json!({
            "trial": r.trial_index,
            "weight_outage": r.weight_outage,
            "agent_seed": r.agent_seed,
            "train_seed": r.train_seed,
            "test_seed": r.test_seed,
            "train_steps": r.train_steps,
            "converged": r.converged,
            "gate_passed": r.result.gate_passed,
            "checkpoint": r.checkpoint_path.as_ref().and_then(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned()),
        })).collect::<Vec<_>>(),
        "front": report.front,
        "warnings": report.warnings,
    });
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::State(format!("manifest serialization failed: {e}")))?;
    write(dir, "manifest.json", &(text + "\n"))
}
