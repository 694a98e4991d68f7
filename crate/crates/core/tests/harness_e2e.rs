use std::fs;
use std::path::Path;
use std::process::Command;

use snla::harness::{evaluate_checkpoint, run_experiment, run_trial, ExperimentConfig, ARTIFACT_FILES};
use snla::metrics::{gate_passed, pareto_filter, read_pareto_csv};
use snla::nnopt::{AlgorithmTag, Checkpoint, DenseNet, Section};
use snla::Error;

fn reduced(algo: &str, dir: &Path, extra: &str) -> ExperimentConfig {
    let text = format!(
        "algorithm = {algo}\ntrials = 2\ntrain_budget_steps = 1300\nepisode_steps = 100\n\
         test_episodes = 4\ntest_steps = 100\nweight_list = 0.3, 0.8\nmaster_seed = 17\n\
         output_dir = {}\n{extra}",
        dir.display()
    );
    ExperimentConfig::parse(&text).unwrap()
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "manifest.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn identical_seeds_give_identical_artifacts() {
    let root = tempfile::tempdir().unwrap();
    for algo in ["sac", "ql"] {
        // a zero target gates every trial so that checkpoints are written
        let a = reduced(algo, &root.path().join(format!("{algo}-a")), "availability_target = 0\n");
        let b = reduced(algo, &root.path().join(format!("{algo}-b")), "availability_target = 0\n");
        run_experiment(&a).unwrap();
        run_experiment(&b).unwrap();
        let (fa, fb) = (read_all(&a.output_dir), read_all(&b.output_dir));
        assert!(fa.iter().any(|(n, _)| n.ends_with(".ckpt")));
        assert_eq!(fa, fb, "{algo}");
    }
}

#[test]
fn artifacts_round_trip_and_gate_is_recomputable() {
    let root = tempfile::tempdir().unwrap();
    let cfg = reduced("mr", root.path(), "");
    let report = run_experiment(&cfg).unwrap();
    for f in ARTIFACT_FILES {
        assert!(cfg.output_dir.join(f).exists(), "{f} missing");
    }
    assert_eq!(read_pareto_csv(&cfg.output_dir.join("pareto.csv")).unwrap(), report.front);
    assert_eq!(pareto_filter(&report.front), report.front);

    let text = fs::read_to_string(cfg.output_dir.join("episodes.csv")).unwrap();
    for rec in &report.records {
        let avail: Vec<f64> = text
            .lines()
            .skip(1)
            .filter(|l| l.split(',').next() == Some(&rec.trial_index.to_string()))
            .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
            .collect();
        assert_eq!(avail, rec.result.episode_availability);
        assert_eq!(gate_passed(&avail, cfg.env.availability_target), rec.result.gate_passed);
        assert_eq!(rec.checkpoint_path.is_some(), rec.result.gate_passed);
    }
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(cfg.output_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["trials"].as_array().unwrap().len(), report.records.len());
}

#[test]
fn empty_front_leaves_a_warning_artifact() {
    let root = tempfile::tempdir().unwrap();
    let cfg = reduced("ra", root.path(), "");
    let report = run_experiment(&cfg).unwrap();
    assert!(report.front.is_empty());
    assert!(!report.warnings.is_empty());
    assert!(cfg.output_dir.join("pareto_warning.txt").exists());
    assert_eq!(fs::read_to_string(cfg.output_dir.join("pareto.csv")).unwrap().trim(), "label,energy,exceedance");
}

#[test]
fn saved_checkpoint_reproduces_the_in_trial_test_phase() {
    let root = tempfile::tempdir().unwrap();
    let mut cfg = reduced("ql", root.path(), "availability_target = 0\n");
    let rec = run_trial(&cfg, 1).unwrap();
    let path = rec.checkpoint_path.clone().unwrap();
    cfg.weight_list = vec![rec.weight_outage];
    let again = evaluate_checkpoint(&path, &cfg, rec.test_seed).unwrap();
    assert_eq!(again, rec.result);

    let other = evaluate_checkpoint(&path, &cfg, rec.test_seed + 1).unwrap();
    assert_ne!(other.episode_energy, rec.result.episode_energy);
}

#[test]
fn corrupted_magic_is_a_format_error() {
    let root = tempfile::tempdir().unwrap();
    let cfg = reduced("mr", root.path(), "availability_target = 0\n");
    let rec = run_trial(&cfg, 0).unwrap();
    let path = rec.checkpoint_path.unwrap();
    let mut bytes = fs::read(&path).unwrap();
    bytes[0] ^= 0xff;
    fs::write(&path, bytes).unwrap();
    assert!(matches!(evaluate_checkpoint(&path, &cfg, 0), Err(Error::Format(_))));
}

#[test]
fn network_width_mismatch_is_incompatible() {
    let root = tempfile::tempdir().unwrap();
    let cfg = reduced("sac", root.path(), "");
    let path = root.path().join("odd.ckpt");
    // two observation inputs where the environment provides one
    let actor = DenseNet::zeros(&[2, 8, 4]).unwrap();
    let critic = DenseNet::zeros(&[4, 8, 1]).unwrap();
    let mut sections = vec![Section::dense(&actor)];
    sections.extend((0..4).map(|_| Section::dense(&critic)));
    let ck = Checkpoint {
        algorithm: AlgorithmTag::Sac,
        sections,
    };
    ck.save(&path).unwrap();
    let err = evaluate_checkpoint(&path, &cfg, 0);
    assert!(matches!(err, Err(Error::Compatibility(_))), "{err:?}");
}

fn snla(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_snla"))
        .args(args)
        .env("SNLA_WORKERS", "1")
        .output()
        .unwrap()
}

#[test]
fn cli_commands_and_exit_codes() {
    let root = tempfile::tempdir().unwrap();
    let cfg_path = root.path().join("exp.cfg");
    fs::write(
        &cfg_path,
        "# reduced scale\nalgorithm = mr\ntrials = 1\ntest_episodes = 3\ntest_steps = 50\navailability_target = 0\n",
    )
    .unwrap();
    let out = root.path().join("run");
    let cfg = cfg_path.to_str().unwrap();

    let o = snla(&["train", "--config", cfg, "--out", out.to_str().unwrap(), "--w1", "0.4", "--seed", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let ckpt = out.join("mr_trial_000.ckpt");
    assert!(ckpt.exists());

    let o = snla(&["eval", "--checkpoint", ckpt.to_str().unwrap(), "--config", cfg, "--seed", "1"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["mean_energy_fraction"], 1.0);
    assert_eq!(v["episodes"], 3);

    let sweep_out = root.path().join("sweep");
    fs::write(&cfg_path, format!("{}output_dir = {}\n", fs::read_to_string(&cfg_path).unwrap(), sweep_out.display())).unwrap();
    let o = snla(&["sweep", "--config", cfg, "--weights", "0.2,0.6"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let trials = fs::read_to_string(sweep_out.join("trials.csv")).unwrap();
    assert_eq!(trials.lines().count(), 3);

    let o = snla(&["pareto", "--config", cfg, "--trials", "2"]);
    assert!(o.status.success());

    let bad = root.path().join("bad.cfg");
    fs::write(&bad, "trails = 3\n").unwrap();
    let o = snla(&["train", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("trails"));

    let blocker = root.path().join("file");
    fs::write(&blocker, "").unwrap();
    let o = snla(&["train", "--config", cfg, "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));

    let o = snla(&["eval", "--checkpoint", cfg, "--config", cfg]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn exit_codes_by_error_kind() {
    let io = Error::Io {
        path: "x".into(),
        source: std::io::Error::other("x"),
    };
    assert_eq!(io.exit_code(), 3);
    assert_eq!(Error::Diverged { step: 4, reason: "nan".into() }.exit_code(), 2);
    assert_eq!(Error::Format("magic".into()).exit_code(), 1);
    assert_eq!(Error::Domain("x".into()).exit_code(), 1);
}
