use std::ffi::{c_char, CStr, CString};
use std::process::Command;
use std::ptr;

use snla::agents::new_agent;
use snla::environment::EnvConfig;
use snla::nnopt::AlgorithmTag;
use snla_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    let n = unsafe { snla_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 0);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn outage_probability_matches_core() {
    let mut eps = 0.0;
    let st = unsafe { snla_outage_probability(2.0, 50, 100, &mut eps) };
    assert_eq!(st, SnlaStatus::Ok);
    let b = snla::fblmath::LinkBudget::new(2.0, 50, 100).unwrap();
    assert_eq!(eps, snla::fblmath::outage_probability(&b));
}

#[test]
fn invalid_budget_reports_domain_error() {
    let mut eps = 0.0;
    let st = unsafe { snla_outage_probability(-1.0, 50, 100, &mut eps) };
    assert_eq!(st, SnlaStatus::Domain);
    assert!(last_error().contains("domain"));
}

#[test]
fn null_out_pointer_is_rejected() {
    let st = unsafe { snla_outage_probability(2.0, 50, 100, ptr::null_mut()) };
    assert_eq!(st, SnlaStatus::NullPointer);
    assert!(last_error().contains("out"));
}

#[test]
fn error_message_truncates_and_reports_length() {
    unsafe { snla_outage_probability(2.0, 50, 100, ptr::null_mut()) };
    let mut buf = [1 as c_char; 5];
    let n = unsafe { snla_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 4);
    assert_eq!(buf[4], 0);
    assert_eq!(unsafe { snla_last_error_message(ptr::null_mut(), 0) }, n);
}

#[test]
fn env_episode_through_handles() {
    let mut env = ptr::null_mut();
    assert_eq!(unsafe { snla_env_new_default(0.3, &mut env) }, SnlaStatus::Ok);
    let mut obs = f64::NAN;
    assert_eq!(unsafe { snla_env_reset(env, 7, &mut obs) }, SnlaStatus::Ok);
    assert!(obs.is_finite());

    let mut step = SnlaStep::default();
    for _ in 0..50 {
        assert_eq!(unsafe { snla_env_step(env, 20.0, 1000, &mut step) }, SnlaStatus::Ok);
        assert!((step.scaled_energy - 1e5).abs() < 1e-6);
        assert!((0.0..=1.0).contains(&step.outage_prob));
    }
    assert_eq!(unsafe { snla_env_step(env, 25.0, 1000, &mut step) }, SnlaStatus::Domain);
    unsafe { snla_env_free(env) };
    unsafe { snla_env_free(ptr::null_mut()) };
}

#[test]
fn bad_weight_is_a_config_error() {
    let mut env = ptr::null_mut();
    assert_eq!(unsafe { snla_env_new_default(1.5, &mut env) }, SnlaStatus::Config);
    assert!(env.is_null());
}

#[test]
fn env_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.cfg");
    std::fs::write(&path, "n_interferers = 3\nweight_list = 0.6\n").unwrap();
    let c = CString::new(path.to_str().unwrap()).unwrap();
    let mut env = ptr::null_mut();
    assert_eq!(unsafe { snla_env_from_config(c.as_ptr(), &mut env) }, SnlaStatus::Ok);
    unsafe { snla_env_free(env) };

    std::fs::write(&path, "n_interferes = 3\n").unwrap();
    assert_eq!(unsafe { snla_env_from_config(c.as_ptr(), &mut env) }, SnlaStatus::Config);
    let missing = CString::new(dir.path().join("nope.cfg").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { snla_env_from_config(missing.as_ptr(), &mut env) }, SnlaStatus::Io);
}

#[test]
fn policy_load_and_act() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mr.ckpt");
    let cfg = EnvConfig::default();
    new_agent(AlgorithmTag::Mr, &cfg, 0).unwrap().checkpoint().save(&path).unwrap();
    let c = CString::new(path.to_str().unwrap()).unwrap();

    let mut pol = ptr::null_mut();
    assert_eq!(unsafe { snla_policy_load(c.as_ptr(), ptr::null(), 0, &mut pol) }, SnlaStatus::Ok);
    let (mut p, mut m) = (0.0, 0u32);
    assert_eq!(unsafe { snla_policy_act(pol, -3.0, &mut p, &mut m) }, SnlaStatus::Ok);
    assert_eq!((p, m), (20.0, 1000));
    assert_eq!(unsafe { snla_policy_act(pol, f64::NAN, &mut p, &mut m) }, SnlaStatus::Domain);
    unsafe { snla_policy_free(pol) };

    std::fs::write(&path, b"XXXXgarbage").unwrap();
    let mut pol = ptr::null_mut();
    assert_eq!(unsafe { snla_policy_load(c.as_ptr(), ptr::null(), 0, &mut pol) }, SnlaStatus::Format);
    assert!(pol.is_null());
}

#[test]
fn version_is_package_version() {
    let v = unsafe { CStr::from_ptr(snla_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found, skipping");
        return;
    };
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/snla.h");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        format!(
            "#include \"{header}\"\nint main(void) {{ SnlaStep s; double e; (void)s; \
             return snla_outage_probability(2.0, 50, 100, &e) == SNLA_STATUS_OK ? 0 : 1; }}\n"
        ),
    )
    .unwrap();
    let out = Command::new(cc).args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"]).arg(&src).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn which_cc() -> Result<&'static str, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if Command::new(cc).arg("--version").output().is_ok() {
            return Ok(cc);
        }
    }
    Err(())
}
