//! Error-probability estimation.
//!
//! Missed detection for the conical-shell decoder factorizes into a radial
//! event ‖z‖ ≥ L and an independent angular event, so p_MD is evaluated
//! exactly. False alarm and message error need the codebook and are
//! estimated by Monte Carlo with one random substream per trial.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::{awgn_into, bsc_flip, decode_bsc, AwgnDecoder, BinaryCodebook, RealCodebook};
use crate::error::{invalid, Error, Result};
use crate::exponents::{converse_geometry, red_alert_exponent, ChannelParams, DecoderGeometry};
use crate::geometry::ln_solid_angle_exact;
use crate::ldp::ln_chi_square_survival;
use crate::rng::{domain, substream};
use crate::special::{ln_gamma, log_sum_exp};

/// 97.5% standard normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Minimum expected hit count accepted by [`mc_pmd_validate`].
const MIN_EXPECTED_HITS: f64 = 10.0;

/// Outcome tallies over Monte Carlo trials of standard messages.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialCounts {
    pub trials: u64,
    /// Trials decoded as the red-alert message.
    pub false_alarms: u64,
    /// Trials decoded as some standard message.
    pub decoded_standard: u64,
    /// Trials decoded as the wrong standard message.
    pub wrong_standard: u64,
}

impl TrialCounts {
    fn record(truth: usize, decoded: usize) -> Self {
        Self {
            trials: 1,
            false_alarms: (decoded == 0) as u64,
            decoded_standard: (decoded != 0) as u64,
            wrong_standard: (decoded != 0 && decoded != truth) as u64,
        }
    }

    fn merge(self, other: Self) -> Self {
        Self {
            trials: self.trials + other.trials,
            false_alarms: self.false_alarms + other.false_alarms,
            decoded_standard: self.decoded_standard + other.decoded_standard,
            wrong_standard: self.wrong_standard + other.wrong_standard,
        }
    }
}

/// 95% normal-approximation half-widths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ci95 {
    pub p_fa: f64,
    pub p_msg: Option<f64>,
    pub p_error_unconditional: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorEstimates {
    /// Natural log of the missed-detection probability, when evaluated.
    pub log_p_md: Option<f64>,
    pub p_fa: f64,
    /// Wrong-message rate among trials decoded as a standard message;
    /// `None` when no trial was.
    pub p_msg: Option<f64>,
    /// P(ŵ ≠ w) for standard w, counting false alarms as errors.
    pub p_error_unconditional: f64,
    pub counts: TrialCounts,
    pub ci95: Ci95,
}

fn half_width(p: f64, k: u64) -> f64 {
    Z95 * (p * (1.0 - p) / k as f64).sqrt()
}

impl ErrorEstimates {
    pub fn from_counts(counts: TrialCounts) -> Self {
        let t = counts.trials;
        let p_fa = counts.false_alarms as f64 / t as f64;
        let p_msg = (counts.decoded_standard > 0)
            .then(|| counts.wrong_standard as f64 / counts.decoded_standard as f64);
        let p_err = (counts.false_alarms + counts.wrong_standard) as f64 / t as f64;
        Self {
            log_p_md: None,
            p_fa,
            p_msg,
            p_error_unconditional: p_err,
            counts,
            ci95: Ci95 {
                p_fa: half_width(p_fa, t),
                p_msg: p_msg.map(|p| half_width(p, counts.decoded_standard)),
                p_error_unconditional: half_width(p_err, t),
            },
        }
    }

    pub fn with_log_p_md(mut self, log_p_md: f64) -> Self {
        self.log_p_md = Some(log_p_md);
        self
    }
}

/// ln p_MD = ln P(χ²_n ≥ L²/N) + ln Ω(ψ), exact for the conical-shell
/// decoder.
pub fn exact_pmd_log(n: usize, noise_var: f64, geom: &DecoderGeometry) -> Result<f64> {
    if n < 2 {
        return Err(invalid("exact p_MD needs n ≥ 2"));
    }
    if !(noise_var > 0.0) {
        return Err(invalid(format!(
            "noise variance must be positive, got {noise_var}"
        )));
    }
    if geom.half_angle > std::f64::consts::FRAC_PI_2 {
        return Err(invalid(format!(
            "half-angle {} exceeds π/2",
            geom.half_angle
        )));
    }
    let radial = ln_chi_square_survival(n, n as f64 * geom.min_distance_sq_per_dim / noise_var)?;
    Ok(radial + ln_solid_angle_exact(n, geom.half_angle)?)
}

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(invalid("need at least one trial"));
    }
    Ok(())
}

/// Monte Carlo p_FA and p_MSG for the offset or conical codebook on AWGN.
///
/// Trial t draws its message and noise from substream (seed, t), and counts
/// are summed as integers, so the result does not depend on thread count.
pub fn mc_error_rates(
    cb: &RealCodebook,
    geom: &DecoderGeometry,
    noise_var: f64,
    trials: u64,
    seed: u64,
) -> Result<ErrorEstimates> {
    check_trials(trials)?;
    if !(noise_var >= 0.0) {
        return Err(invalid(format!(
            "noise variance must be nonnegative, got {noise_var}"
        )));
    }
    let decoder = AwgnDecoder::new(cb, geom)?;
    let std = noise_var.sqrt();
    let m = cb.m();
    let counts = (0..trials)
        .into_par_iter()
        .map_init(
            || vec![0.0; cb.n()],
            |y, t| {
                let mut rng = substream(seed, domain::TRIAL, t);
                let w = rng.random_range(1..=m);
                awgn_into(cb.codeword(w), std, y, &mut rng);
                TrialCounts::record(w, decoder.decode(y))
            },
        )
        .reduce(TrialCounts::default, TrialCounts::merge);
    Ok(ErrorEstimates::from_counts(counts))
}

/// BSC counterpart of [`mc_error_rates`] with the weight-threshold detector.
pub fn mc_error_rates_bsc(
    cb: &BinaryCodebook,
    weight_threshold: usize,
    crossover: f64,
    trials: u64,
    seed: u64,
) -> Result<ErrorEstimates> {
    check_trials(trials)?;
    if !(0.0..=1.0).contains(&crossover) {
        return Err(invalid(format!(
            "crossover must lie in [0, 1], got {crossover}"
        )));
    }
    if weight_threshold > cb.n() {
        return Err(invalid(format!(
            "threshold {weight_threshold} exceeds n = {}",
            cb.n()
        )));
    }
    let m = cb.m();
    let counts = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = substream(seed, domain::TRIAL, t);
            let w = rng.random_range(1..=m);
            let y = bsc_flip(cb.codeword(w), crossover, &mut rng);
            let decoded = decode_bsc(&y, cb, weight_threshold).expect("threshold validated above");
            TrialCounts::record(w, decoded)
        })
        .reduce(TrialCounts::default, TrialCounts::merge);
    Ok(ErrorEstimates::from_counts(counts))
}

/// Direct Monte Carlo estimate of p_MD.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PmdEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub ci95: f64,
    pub hits: u64,
    pub trials: u64,
}

/// Simulates red alert + noise with apex 𝟎 and axis 𝟙 and counts landings
/// in the standard region. Used to validate [`exact_pmd_log`] at small n.
pub fn mc_pmd_validate(
    n: usize,
    noise_var: f64,
    geom: &DecoderGeometry,
    trials: u64,
    seed: u64,
) -> Result<PmdEstimate> {
    check_trials(trials)?;
    let expected = trials as f64 * exact_pmd_log(n, noise_var, geom)?.exp();
    if expected < MIN_EXPECTED_HITS {
        return Err(Error::InsufficientTrials {
            expected_hits: expected,
            required: MIN_EXPECTED_HITS,
        });
    }
    let std = noise_var.sqrt();
    let min_sq = n as f64 * geom.min_distance_sq_per_dim;
    let cos_psi = geom.half_angle.cos();
    let sqrt_n = (n as f64).sqrt();
    let hits: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = substream(seed, domain::PMD_TRIAL, t);
            let (mut sq, mut sum) = (0.0, 0.0);
            for _ in 0..n {
                let z: f64 = rng.sample(StandardNormal);
                let z = std * z;
                sq += z * z;
                sum += z;
            }
            (sq >= min_sq && sum >= cos_psi * sq.sqrt() * sqrt_n) as u64
        })
        .sum();
    let estimate = hits as f64 / trials as f64;
    let std_error = (estimate * (1.0 - estimate) / trials as f64).sqrt();
    Ok(PmdEstimate {
        estimate,
        std_error,
        ci95: Z95 * std_error,
        hits,
        trials,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    /// (n, −(1/n) ln p_MD), ascending in n.
    pub per_n_estimates: Vec<(usize, f64)>,
    pub limit_estimate: f64,
    /// Estimate minus the red-alert exponent, per n.
    pub deficits: Vec<f64>,
}

/// −(1/n) ln p_MD at the idealized geometry for each n in `n_grid`.
pub fn exponent_fit(params: &ChannelParams, rate: f64, n_grid: &[usize]) -> Result<ExponentFit> {
    if n_grid.is_empty() {
        return Err(invalid("empty blocklength grid"));
    }
    if n_grid.windows(2).any(|w| w[0] >= w[1]) || n_grid[0] < 2 {
        return Err(invalid("blocklengths must be ascending and at least 2"));
    }
    let geom = converse_geometry(params, rate)?;
    let target = red_alert_exponent(params, rate)?;
    let per_n = n_grid
        .iter()
        .map(|&n| Ok((n, -exact_pmd_log(n, params.noise_var, &geom)? / n as f64)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExponentFit {
        limit_estimate: per_n.last().map(|e| e.1).unwrap_or(f64::NAN),
        deficits: per_n.iter().map(|e| e.1 - target).collect(),
        per_n_estimates: per_n,
    })
}

/// ln P(Binomial(n, p) ≥ threshold).
pub fn bsc_exact_pmd(n: usize, p: f64, weight_threshold: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(format!("crossover must lie in [0, 1], got {p}")));
    }
    if weight_threshold > n {
        return Err(invalid(format!(
            "threshold {weight_threshold} exceeds n = {n}"
        )));
    }
    if weight_threshold == 0 {
        return Ok(0.0);
    }
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let ln_nfact = ln_gamma(n as f64 + 1.0);
    let terms: Vec<f64> = (weight_threshold..=n)
        .map(|k| {
            let kf = k as f64;
            let rest = (n - k) as f64;
            let log_choose = ln_nfact - ln_gamma(kf + 1.0) - ln_gamma(rest + 1.0);
            // 0·ln 0 = 0 at the endpoints.
            let a = if k == 0 { 0.0 } else { kf * lp };
            let b = if k == n { 0.0 } else { rest * lq };
            log_choose + a + b
        })
        .collect();
    Ok(log_sum_exp(&terms))
}
