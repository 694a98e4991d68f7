//! Link adaptation for ultra-reliable short-packet links in interference-limited
//! industrial subnetworks.
//!
//! The crate is organised bottom-up:
//!
//! - [`fblmath`]: finite-blocklength outage kernel.
//! - [`environment`]: interfering subnetworks, block fading and the MDP step.
//! - [`nnopt`]: dense networks, Adam, replay buffer and the squashed Gaussian head.
//! - [`agents`]: SAC, DDPG, TD3, tabular Q-learning and the reference policies.
//! - [`metrics`]: availability, consecutive-outage statistics, CDFs and Pareto filtering.
//! - [`harness`]: training/testing trials, the availability gate, sweeps and artifacts.

pub mod agents;
pub mod environment;
pub mod error;
pub mod fblmath;
pub mod harness;
pub mod metrics;
pub mod nnopt;

pub use error::{Error, Result};
