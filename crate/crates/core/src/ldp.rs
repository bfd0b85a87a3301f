//! Large-deviations rate functions, Chernoff-type tail bounds and exact
//! chi-square / Gaussian tails.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::special::{ln_gamma_inc_pair, ln_one_minus_exp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailDirection {
    UpperTail,
    LowerTail,
}

/// Natural log of a probability bound of the form 2·e^{-n·rate}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailBound {
    pub log_bound: f64,
    pub direction: TailDirection,
}

/// Rate function of a unit chi-square variable, ½(b − 1 − ln b).
pub fn chi_square_rate(b: f64) -> Result<f64> {
    if !(b > 0.0) {
        return Err(invalid(format!("chi-square rate needs b > 0, got {b}")));
    }
    // b − 1 − ln b loses precision near b = 1; use the ln_1p form.
    let u = b - 1.0;
    Ok(0.5 * (u - u.ln_1p()))
}

/// Bound on ln P(‖z‖² ≥ nN(1+β)) (upper) or ln P(‖z‖² ≤ nN(1−β)) (lower)
/// for z with n i.i.d. N(0, N) entries.
pub fn gaussian_norm_tail_bound(
    n: usize,
    noise_var: f64,
    beta: f64,
    direction: TailDirection,
) -> Result<TailBound> {
    if n == 0 {
        return Err(invalid("blocklength must be positive"));
    }
    if !(noise_var > 0.0) {
        return Err(invalid(format!(
            "noise variance must be positive, got {noise_var}"
        )));
    }
    let half_n = 0.5 * n as f64;
    let log_bound = match direction {
        TailDirection::UpperTail => {
            if !(beta > 0.0) {
                return Err(invalid(format!("upper tail needs β > 0, got {beta}")));
            }
            LN_2 - half_n * (beta - beta.ln_1p())
        }
        TailDirection::LowerTail => {
            if !(beta > 0.0 && beta < 1.0) {
                return Err(invalid(format!("lower tail needs 0 < β < 1, got {beta}")));
            }
            LN_2 - half_n * (-beta - (-beta).ln_1p())
        }
    };
    Ok(TailBound {
        log_bound,
        direction,
    })
}

/// Standard normal upper tail Q(t) = P(Z ≥ t).
pub fn q_function(t: f64) -> f64 {
    if t >= 0.0 {
        log_q_function(t).exp()
    } else {
        1.0 - log_q_function(-t).exp()
    }
}

/// ln Q(t) for t ≥ 0, via Q(t) = ½·Q_Γ(½, t²/2).
pub fn log_q_function(t: f64) -> f64 {
    if t < 0.0 {
        return ln_one_minus_exp(log_q_function(-t));
    }
    let (_, ln_q) = ln_gamma_inc_pair(0.5, 0.5 * t * t);
    ln_q - LN_2
}

/// The Chernoff-style bound Q(t) < ½ e^{−t²/2}.
pub fn q_function_upper_bound(t: f64) -> f64 {
    0.5 * (-0.5 * t * t).exp()
}

fn check_chi_square(n: usize, x: f64) -> Result<()> {
    if n == 0 {
        return Err(invalid("chi-square degrees of freedom must be positive"));
    }
    if !(x >= 0.0) {
        return Err(invalid(format!(
            "chi-square argument must be nonnegative, got {x}"
        )));
    }
    Ok(())
}

/// ln P(χ²ₙ ≥ x).
pub fn ln_chi_square_survival(n: usize, x: f64) -> Result<f64> {
    check_chi_square(n, x)?;
    Ok(ln_gamma_inc_pair(0.5 * n as f64, 0.5 * x).1)
}

/// P(χ²ₙ ≥ x).
pub fn chi_square_survival(n: usize, x: f64) -> Result<f64> {
    ln_chi_square_survival(n, x).map(f64::exp)
}

/// ln P(χ²ₙ ≤ x).
pub fn ln_chi_square_cdf(n: usize, x: f64) -> Result<f64> {
    check_chi_square(n, x)?;
    Ok(ln_gamma_inc_pair(0.5 * n as f64, 0.5 * x).0)
}
