//! Finite-blocklength outage kernel.
//!
//! Normal approximation of the block error probability of a `b`-bit packet
//! sent over `m` channel uses of an AWGN channel with SINR `ϱ`:
//!
//! ```text
//! ε ≈ Q( (C(ϱ) − b/m)·ln2 / sqrt(V(ϱ)/m) )
//! C(ϱ) = log2(1 + ϱ)
//! V(ϱ) = (log2 e)² · (1 − (1 + ϱ)^−2)
//! ```
//!
//! Everything here is a pure `f64` function.

use std::f64::consts::{LN_2, LOG2_E, PI};

use crate::error::{Error, Result};

/// `(log2 e)²`, the supremum of the channel dispersion.
pub const DISPERSION_LIMIT: f64 = LOG2_E * LOG2_E;

/// Above this argument `Q` is assembled from its logarithm.
const LOG_TAIL_START: f64 = 37.0;

/// SINR, packet size and blocklength of a single transmission.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    sinr_linear: f64,
    info_bits: u32,
    blocklength: u32,
}

impl LinkBudget {
    pub fn new(sinr_linear: f64, info_bits: u32, blocklength: u32) -> Result<Self> {
        if !(sinr_linear.is_finite() && sinr_linear > 0.0) {
            return Err(Error::Domain(format!(
                "sinr must be positive and finite, got {sinr_linear}"
            )));
        }
        if info_bits == 0 {
            return Err(Error::Domain("info_bits must be at least 1".into()));
        }
        if blocklength == 0 {
            return Err(Error::Domain("blocklength must be at least 1".into()));
        }
        Ok(Self {
            sinr_linear,
            info_bits,
            blocklength,
        })
    }

    pub fn sinr_linear(&self) -> f64 {
        self.sinr_linear
    }

    pub fn info_bits(&self) -> u32 {
        self.info_bits
    }

    pub fn blocklength(&self) -> u32 {
        self.blocklength
    }

    /// Coding rate `b/m` in bits per channel use.
    pub fn rate(&self) -> f64 {
        f64::from(self.info_bits) / f64::from(self.blocklength)
    }
}

fn check_finite(x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("argument must be finite, got {x}")))
    }
}

fn check_sinr(sinr_linear: f64) -> Result<()> {
    if sinr_linear.is_finite() && sinr_linear > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "sinr must be positive and finite, got {sinr_linear}"
        )))
    }
}

/// Upper tail of the standard normal distribution.
pub fn gaussian_q(x: f64) -> Result<f64> {
    check_finite(x)?;
    Ok(q_unchecked(x))
}

/// Natural logarithm of [`gaussian_q`], accurate deep into the upper tail
/// where `Q` itself is no longer representable.
pub fn log_gaussian_q(x: f64) -> Result<f64> {
    check_finite(x)?;
    Ok(if x < LOG_TAIL_START {
        if x < 0.0 {
            (-q_unchecked(-x)).ln_1p()
        } else {
            q_unchecked(x).ln()
        }
    } else {
        log_q_tail(x)
    })
}

fn q_unchecked(x: f64) -> f64 {
    if x > LOG_TAIL_START {
        log_q_tail(x).exp()
    } else {
        0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
    }
}

/// `ln Q(x)` for large positive `x` from the Laplace continued fraction
/// `Q(x) = φ(x) / (x + 1/(x + 2/(x + 3/(x + …))))`, evaluated bottom-up.
fn log_q_tail(x: f64) -> f64 {
    let mut tail = x;
    for k in (1..=40).rev() {
        tail = x + f64::from(k) / tail;
    }
    -0.5 * x * x - 0.5 * (2.0 * PI).ln() - tail.ln()
}

/// Shannon capacity `log2(1 + ϱ)` in bits per channel use.
pub fn capacity(sinr_linear: f64) -> Result<f64> {
    check_sinr(sinr_linear)?;
    Ok(sinr_linear.ln_1p() * LOG2_E)
}

/// Channel dispersion `(log2 e)² (1 − (1+ϱ)^−2)`.
pub fn dispersion(sinr_linear: f64) -> Result<f64> {
    check_sinr(sinr_linear)?;
    // 1 − (1+ϱ)^−2 = ϱ(2+ϱ)/(1+ϱ)², exact for tiny ϱ
    let one_plus = 1.0 + sinr_linear;
    Ok(DISPERSION_LIMIT * (sinr_linear * (2.0 + sinr_linear) / (one_plus * one_plus)))
}

/// Argument of the Q-function for a budget. Returns `None` when the
/// dispersion vanishes and the ratio degenerates.
pub fn outage_argument(budget: &LinkBudget) -> Option<f64> {
    let sinr = budget.sinr_linear();
    let c = sinr.ln_1p() * LOG2_E;
    let one_plus = 1.0 + sinr;
    let v = DISPERSION_LIMIT * (sinr * (2.0 + sinr) / (one_plus * one_plus));
    if v <= 0.0 {
        return None;
    }
    let m = f64::from(budget.blocklength());
    Some((c - budget.rate()) * LN_2 / (v / m).sqrt())
}

/// Block outage probability of the normal approximation.
///
/// When `V(ϱ)` underflows to zero the limit is taken: `1` if the rate exceeds
/// capacity, `0` if it falls below, and `0.5` on the boundary.
pub fn outage_probability(budget: &LinkBudget) -> f64 {
    match outage_argument(budget) {
        Some(arg) => q_unchecked(arg),
        None => {
            let c = budget.sinr_linear().ln_1p() * LOG2_E;
            let rate = budget.rate();
            if rate > c {
                1.0
            } else if rate < c {
                0.0
            } else {
                0.5
            }
        }
    }
}
