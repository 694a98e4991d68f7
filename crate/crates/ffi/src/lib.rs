//! C ABI over the simulator and saved policies.
//!
//! Every function returns an [`SnlaStatus`]; results come back through out
//! pointers. On failure the message is kept per thread and can be copied
//! out with [`snla_last_error_message`]. Handles are opaque and must be
//! released with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use snla::agents::{agent_from_checkpoint, ActMode, Agent};
use snla::environment::{Action, EnvConfig, Environment};
use snla::fblmath::{outage_probability, LinkBudget};
use snla::harness::ExperimentConfig;
use snla::nnopt::Checkpoint;
use snla::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnlaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Domain = 3,
    Config = 4,
    State = 5,
    Shape = 6,
    Format = 7,
    Compatibility = 8,
    Diverged = 9,
    Io = 10,
    Panic = 11,
}

/// Result of one environment step.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SnlaStep {
    pub next_obs_db: f64,
    pub reward: f64,
    pub outage_prob: f64,
    pub scaled_energy: f64,
    pub consec_count: u32,
    pub outage_flag: bool,
    pub violation_flag: bool,
}

/// Simulation environment handle.
pub struct SnlaEnv {
    env: Environment,
}

/// Trained or reference policy handle.
pub struct SnlaPolicy {
    agent: Box<dyn Agent>,
    config: EnvConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> SnlaStatus {
    match err {
        Error::Domain(_) => SnlaStatus::Domain,
        Error::Config { .. } => SnlaStatus::Config,
        Error::State(_) => SnlaStatus::State,
        Error::Shape(_) => SnlaStatus::Shape,
        Error::Format(_) => SnlaStatus::Format,
        Error::Compatibility(_) => SnlaStatus::Compatibility,
        Error::Diverged { .. } => SnlaStatus::Diverged,
        Error::Io { .. } => SnlaStatus::Io,
    }
}

enum Failure {
    Null(&'static str),
    Utf8(&'static str),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SnlaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SnlaStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer passed for `{what}`"));
            SnlaStatus::NullPointer
        }
        Ok(Err(Failure::Utf8(what))) => {
            set_error(format!("`{what}` is not valid UTF-8"));
            SnlaStatus::InvalidUtf8
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            SnlaStatus::Panic
        }
    }
}

unsafe fn path_arg(p: *const c_char, what: &'static str) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    let s = CStr::from_ptr(p).to_str().map_err(|_| Failure::Utf8(what))?;
    Ok(PathBuf::from(s))
}

unsafe fn out_mut<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

/// Outage probability of a `bits`-bit packet over `blocklength` channel
/// uses at linear SINR `sinr`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn snla_outage_probability(
    sinr: f64,
    bits: u32,
    blocklength: u32,
    out: *mut f64,
) -> SnlaStatus {
    guard(|| {
        let out = out_mut(out, "out")?;
        let budget = LinkBudget::new(sinr, bits, blocklength)?;
        *out = outage_probability(&budget);
        Ok(())
    })
}

/// Environment with the default scenario and the given outage weight.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn snla_env_new_default(weight_outage: f64, out: *mut *mut SnlaEnv) -> SnlaStatus {
    guard(|| {
        let out = out_mut(out, "out")?;
        let cfg = EnvConfig::default().with_weight_outage(weight_outage);
        let env = Environment::new(cfg)?;
        *out = Box::into_raw(Box::new(SnlaEnv { env }));
        Ok(())
    })
}

/// Environment built from the scenario keys of an experiment config file.
///
/// # Safety
/// `config_path` must be a NUL-terminated string; `out` must be valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn snla_env_from_config(config_path: *const c_char, out: *mut *mut SnlaEnv) -> SnlaStatus {
    guard(|| {
        let path = path_arg(config_path, "config_path")?;
        let out = out_mut(out, "out")?;
        let cfg = ExperimentConfig::from_file(&path)?;
        let w1 = cfg.weight_list.first().copied().unwrap_or(cfg.env.weight_outage);
        let env = Environment::new(cfg.env_with_weight(w1))?;
        *out = Box::into_raw(Box::new(SnlaEnv { env }));
        Ok(())
    })
}

/// Starts a new episode and writes the first observation (SINR in dB).
///
/// # Safety
/// `env` must come from an `snla_env_*` constructor; `obs_db` must be
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn snla_env_reset(env: *mut SnlaEnv, seed: u64, obs_db: *mut f64) -> SnlaStatus {
    guard(|| {
        let env = out_mut(env, "env")?;
        let obs = out_mut(obs_db, "obs_db")?;
        *obs = env.env.reset(seed);
        Ok(())
    })
}

/// Transmits with `tx_snr_db` and `blocklength` and advances one slot.
///
/// # Safety
/// `env` must come from an `snla_env_*` constructor; `out` must be valid
/// for writes.
#[no_mangle]
pub unsafe extern "C" fn snla_env_step(
    env: *mut SnlaEnv,
    tx_snr_db: f64,
    blocklength: u32,
    out: *mut SnlaStep,
) -> SnlaStatus {
    guard(|| {
        let env = out_mut(env, "env")?;
        let out = out_mut(out, "out")?;
        let action = Action::from_db(tx_snr_db, blocklength, env.env.config())?;
        let s = env.env.step(&action)?;
        *out = SnlaStep {
            next_obs_db: s.next_state_sinr_db,
            reward: s.reward,
            outage_prob: s.outage_prob,
            scaled_energy: s.scaled_energy,
            consec_count: s.consec_count,
            outage_flag: s.outage_flag,
            violation_flag: s.violation_flag,
        };
        Ok(())
    })
}

/// # Safety
/// `env` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn snla_env_free(env: *mut SnlaEnv) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

/// Loads a checkpoint. `config_path` may be null for the default scenario.
///
/// # Safety
/// `checkpoint_path` must be a NUL-terminated string, `config_path` null or
/// NUL-terminated, and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn snla_policy_load(
    checkpoint_path: *const c_char,
    config_path: *const c_char,
    seed: u64,
    out: *mut *mut SnlaPolicy,
) -> SnlaStatus {
    guard(|| {
        let ck_path = path_arg(checkpoint_path, "checkpoint_path")?;
        let out = out_mut(out, "out")?;
        let config = if config_path.is_null() {
            EnvConfig::default()
        } else {
            ExperimentConfig::from_file(&path_arg(config_path, "config_path")?)?.env
        };
        let ck = Checkpoint::load(&ck_path)?;
        let agent = agent_from_checkpoint(&ck, &config, seed)?;
        *out = Box::into_raw(Box::new(SnlaPolicy { agent, config }));
        Ok(())
    })
}

/// Deterministic action for an observation in dB.
///
/// # Safety
/// `policy` must come from [`snla_policy_load`]; the out pointers must be
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn snla_policy_act(
    policy: *mut SnlaPolicy,
    obs_db: f64,
    tx_snr_db: *mut f64,
    blocklength: *mut u32,
) -> SnlaStatus {
    guard(|| {
        let policy = out_mut(policy, "policy")?;
        let p = out_mut(tx_snr_db, "tx_snr_db")?;
        let m = out_mut(blocklength, "blocklength")?;
        if obs_db.is_nan() {
            return Err(Error::Domain("observation is NaN".into()).into());
        }
        let a = policy.agent.act(obs_db, ActMode::Deterministic);
        debug_assert!(a.blocklength() >= policy.config.min_blocklength);
        *p = a.tx_snr_db();
        *m = a.blocklength();
        Ok(())
    })
}

/// # Safety
/// `policy` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn snla_policy_free(policy: *mut SnlaPolicy) {
    if !policy.is_null() {
        drop(Box::from_raw(policy));
    }
}

/// Copies the calling thread's last error message into `buf` (truncated,
/// always NUL-terminated when `len > 0`). Returns the full message length
/// in bytes, excluding the terminator.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn snla_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn snla_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
