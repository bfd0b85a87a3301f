//! Closed-form quantities for the red-alert problem: AWGN capacity, codebook
//! design parameters, the optimal red-alert exponent, achievability and
//! converse decoder geometry, the conical-code exponent, and the binary /
//! DMC counterparts.
//!
//! Rates and exponents are in nats per channel use throughout.

use std::f64::consts::{FRAC_PI_2, LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::special::ln_gamma;

/// Slack allowed when a rate is compared against capacity.
const RATE_TOL: f64 = 1e-12;

/// Powers of an AWGN channel with one high-priority ("red alert") codeword.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Average power across codewords.
    pub p_avg: f64,
    /// Power allowed for the red-alert codeword alone.
    pub p_alert: f64,
    pub noise_var: f64,
}

impl ChannelParams {
    pub fn new(p_avg: f64, p_alert: f64, noise_var: f64) -> Result<Self> {
        if !(p_avg > 0.0 && p_avg.is_finite()) {
            return Err(invalid(format!(
                "average power must be positive, got {p_avg}"
            )));
        }
        if !(p_alert >= p_avg && p_alert.is_finite()) {
            return Err(invalid(format!(
                "red-alert power {p_alert} must be at least the average power {p_avg}"
            )));
        }
        if !(noise_var > 0.0 && noise_var.is_finite()) {
            return Err(invalid(format!(
                "noise variance must be positive, got {noise_var}"
            )));
        }
        Ok(Self {
            p_avg,
            p_alert,
            noise_var,
        })
    }

    /// Powers given in dB (10·log₁₀), noise variance linear.
    pub fn from_db(p_avg_db: f64, p_alert_db: f64, noise_var: f64) -> Result<Self> {
        Self::new(db_to_linear(p_avg_db), db_to_linear(p_alert_db), noise_var)
    }

    pub fn snr(&self) -> f64 {
        self.p_avg / self.noise_var
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Offset-codebook design: blocklength, rate, slack, and the derived power
/// split α and backoff λ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignParams {
    pub n: usize,
    pub rate: f64,
    pub epsilon: f64,
    pub alpha: f64,
    pub lambda: f64,
}

/// Standard-message acceptance region seen from the red-alert codeword:
/// distance at least L and half-angle at most ψ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoderGeometry {
    /// L²/n.
    pub min_distance_sq_per_dim: f64,
    /// ψ in radians.
    pub half_angle: f64,
    /// (L²/n − N)/N.
    pub beta: f64,
}

impl DecoderGeometry {
    /// Geometry from explicit L²/n and ψ.
    ///
    /// Unlike the analytic constructors this accepts degenerate settings
    /// (L = 0, ψ up to π) that are useful for testing decoders.
    pub fn from_parts(
        min_distance_sq_per_dim: f64,
        half_angle: f64,
        noise_var: f64,
    ) -> Result<Self> {
        if !(min_distance_sq_per_dim >= 0.0 && min_distance_sq_per_dim.is_finite()) {
            return Err(invalid(format!(
                "L²/n must be nonnegative, got {min_distance_sq_per_dim}"
            )));
        }
        if !(half_angle > 0.0 && half_angle <= PI) {
            return Err(invalid(format!("half-angle {half_angle} outside (0, π]")));
        }
        if !(noise_var > 0.0) {
            return Err(invalid("noise variance must be positive"));
        }
        Ok(Self {
            min_distance_sq_per_dim,
            half_angle,
            beta: (min_distance_sq_per_dim - noise_var) / noise_var,
        })
    }

    /// L for blocklength n.
    pub fn min_distance(&self, n: usize) -> f64 {
        (n as f64 * self.min_distance_sq_per_dim).sqrt()
    }

    /// β/2 − ½ ln(1+β) − ln sin ψ: the missed-detection exponent of the
    /// conical-shell decoder.
    pub fn assembled_exponent(&self) -> f64 {
        0.5 * (self.beta - self.beta.ln_1p()) - self.half_angle.sin().ln()
    }
}

/// ½ ln(1 + P_avg/N).
pub fn awgn_capacity(params: &ChannelParams) -> f64 {
    0.5 * params.snr().ln_1p()
}

fn check_rate(params: &ChannelParams, rate: f64) -> Result<f64> {
    let c = awgn_capacity(params);
    if !(rate >= 0.0) || rate > c * (1.0 + RATE_TOL) + RATE_TOL {
        return Err(invalid(format!("rate {rate} outside [0, C = {c}]")));
    }
    Ok(c)
}

/// α = (N/P)(e^{2(R+ε)} − 1) and λ = αP − N(e^{2R+ε} − 1).
pub fn derive_design_params(
    params: &ChannelParams,
    n: usize,
    rate: f64,
    epsilon: f64,
) -> Result<DesignParams> {
    if n == 0 {
        return Err(invalid("blocklength must be positive"));
    }
    if !(rate >= 0.0) {
        return Err(invalid(format!("rate must be nonnegative, got {rate}")));
    }
    if !(epsilon > 0.0) {
        return Err(invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    let capacity = awgn_capacity(params);
    if rate + epsilon >= capacity {
        return Err(Error::InfeasibleDesign {
            rate,
            epsilon,
            capacity,
        });
    }
    let ChannelParams {
        p_avg, noise_var, ..
    } = *params;
    let alpha = noise_var / p_avg * (2.0 * (rate + epsilon)).exp_m1();
    // αP − N(e^{2R+ε} − 1) = N e^{2R+ε}(e^ε − 1), written without cancellation.
    let lambda = noise_var * (2.0 * rate + epsilon).exp() * epsilon.exp_m1();
    Ok(DesignParams {
        n,
        rate,
        epsilon,
        alpha,
        lambda,
    })
}

/// α(R) = (N/P)(e^{2R} − 1): the power split of the idealized decoder.
pub fn ideal_alpha(params: &ChannelParams, rate: f64) -> f64 {
    params.noise_var / params.p_avg * (2.0 * rate).exp_m1()
}

/// Optimal red-alert exponent
/// [P_a + P + 2√(P_a(P + N(1 − e^{2R})))]/(2N) − R.
pub fn red_alert_exponent(params: &ChannelParams, rate: f64) -> Result<f64> {
    check_rate(params, rate)?;
    let ChannelParams {
        p_avg,
        p_alert,
        noise_var,
    } = *params;
    let radicand = (p_avg - noise_var * (2.0 * rate).exp_m1()).max(0.0);
    Ok((p_alert + p_avg + 2.0 * (p_alert * radicand).sqrt()) / (2.0 * noise_var) - rate)
}

/// D(N(mean0, var0) ‖ N(mean1, var1)) in nats.
pub fn gaussian_kl(mean0: f64, var0: f64, mean1: f64, var1: f64) -> Result<f64> {
    if !(var0 > 0.0 && var1 > 0.0) {
        return Err(invalid(format!(
            "variances must be positive, got {var0}, {var1}"
        )));
    }
    let d = mean0 - mean1;
    let ratio = var0 / var1;
    Ok(0.5 * (ratio + d * d / var1 - 1.0 - ratio.ln()))
}

/// Achievability geometry for the offset codebook with power split `alpha`,
/// backoff `lambda`, and finite-n slack `delta`.
pub fn decoder_geometry(
    params: &ChannelParams,
    alpha: f64,
    lambda: f64,
    delta: f64,
) -> Result<DecoderGeometry> {
    let ChannelParams {
        p_avg,
        p_alert,
        noise_var,
    } = *params;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(invalid(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if !(lambda >= 0.0 && lambda < alpha * p_avg) {
        return Err(invalid(format!(
            "lambda must lie in [0, αP = {}), got {lambda}",
            alpha * p_avg
        )));
    }
    if !(delta >= 0.0) {
        return Err(invalid(format!("delta must be nonnegative, got {delta}")));
    }
    let coherent = 2.0 * (p_alert * (1.0 - alpha) * p_avg).sqrt();
    let spread = p_alert + p_avg + coherent + noise_var - lambda;
    let l2 = spread - delta;
    let perp = alpha * p_avg + noise_var - lambda;
    if !(l2 > noise_var) {
        return Err(invalid(format!(
            "slack δ = {delta} leaves L²/n = {l2} at or below the noise level"
        )));
    }
    let half_angle = (perp / spread).sqrt().asin() + delta;
    if !(half_angle < FRAC_PI_2) {
        return Err(invalid(format!(
            "slack δ = {delta} pushes ψ to {half_angle} ≥ π/2"
        )));
    }
    Ok(DecoderGeometry {
        min_distance_sq_per_dim: l2,
        half_angle,
        beta: (l2 - noise_var) / noise_var,
    })
}

/// Converse geometry: the distance and angle from the red-alert codeword to
/// the edge of the optimally packed standard decoding region.
pub fn converse_geometry(params: &ChannelParams, rate: f64) -> Result<DecoderGeometry> {
    check_rate(params, rate)?;
    let ChannelParams {
        p_avg,
        p_alert,
        noise_var,
    } = *params;
    let radicand = (p_avg - noise_var * (2.0 * rate).exp_m1()).max(0.0);
    let l2 = p_alert + p_avg + noise_var + 2.0 * (p_alert * radicand).sqrt();
    let half_angle = (noise_var * (2.0 * rate).exp() / l2).sqrt().asin();
    Ok(DecoderGeometry {
        min_distance_sq_per_dim: l2,
        half_angle,
        beta: (l2 - noise_var) / noise_var,
    })
}

/// ln V_MIN = n(R−γ) + (n/2) ln(nπ(N−γ)) − ln Γ(n/2 + 1).
pub fn log_v_min(n: usize, rate: f64, gamma: f64, noise_var: f64) -> Result<f64> {
    if n == 0 {
        return Err(invalid("blocklength must be positive"));
    }
    if !(gamma > 0.0 && gamma < rate.min(noise_var)) {
        return Err(invalid(format!("gamma {gamma} outside (0, min(R, N))")));
    }
    let nf = n as f64;
    Ok(
        nf * (rate - gamma) + 0.5 * nf * (nf * PI * (noise_var - gamma)).ln()
            - ln_gamma(0.5 * nf + 1.0),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConicalVariant {
    /// The formula as published.
    Printed,
    /// Same derivation with the noise variance kept in the ψ numerator.
    Corrected,
}

/// Achievable red-alert exponent of the conical Gaussian codebook.
pub fn conical_exponent(params: &ChannelParams, rate: f64, variant: ConicalVariant) -> Result<f64> {
    let capacity = check_rate(params, rate)?;
    let ChannelParams {
        p_avg,
        p_alert,
        noise_var,
    } = *params;
    let gap = (capacity - rate).max(0.0);
    // sin²θ with θ = asin(e^{-(C−R)}).
    let sin2 = (-2.0 * gap).exp();
    let cos2 = -(-2.0 * gap).exp_m1();
    let coherent = 2.0 * (p_alert * p_avg * cos2).sqrt();
    let beta_c = (p_alert + p_avg + coherent) / noise_var;
    Ok(match variant {
        ConicalVariant::Printed => 0.5 * beta_c + 0.5 * ((p_avg + noise_var) / p_avg).ln() - rate,
        ConicalVariant::Corrected => 0.5 * beta_c - 0.5 * (p_avg * sin2 / noise_var).ln_1p(),
    })
}

/// h_B, binary convolution and binary KL evaluated for one pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryMeasures {
    pub entropy_of_a: f64,
    pub convolution: f64,
    pub kl_a_b: f64,
}

/// −p ln p − (1−p) ln(1−p), with 0 ln 0 = 0.
pub fn binary_entropy(p: f64) -> f64 {
    let xlnx = |x: f64| if x > 0.0 { x * x.ln() } else { 0.0 };
    -xlnx(p) - xlnx(1.0 - p)
}

/// a ∗ b = a(1−b) + b(1−a).
pub fn binary_convolution(a: f64, b: f64) -> f64 {
    a * (1.0 - b) + b * (1.0 - a)
}

/// D(a ‖ b) for Bernoulli laws; +∞ when a puts mass where b has none.
pub fn binary_kl(a: f64, b: f64) -> f64 {
    let term = |x: f64, y: f64| {
        if x == 0.0 {
            0.0
        } else if y == 0.0 {
            f64::INFINITY
        } else {
            x * (x / y).ln()
        }
    };
    term(a, b) + term(1.0 - a, 1.0 - b)
}

/// D(w ‖ ½) = ln 2 − h_B(w), computed accurately near w = ½.
fn kl_from_half(w: f64) -> f64 {
    let u = 2.0 * w - 1.0;
    if u.abs() == 1.0 {
        return LN_2;
    }
    0.5 * ((1.0 + u) * u.ln_1p() + (1.0 - u) * (-u).ln_1p())
}

pub fn binary_measures(a: f64, b: f64) -> Result<BinaryMeasures> {
    if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) {
        return Err(invalid(format!(
            "probabilities must lie in [0, 1], got {a}, {b}"
        )));
    }
    Ok(BinaryMeasures {
        entropy_of_a: binary_entropy(a),
        convolution: binary_convolution(a, b),
        kl_a_b: binary_kl(a, b),
    })
}

/// Crossover probability p and codeword composition q of a binary code.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BscParams {
    pub crossover: f64,
    pub composition: f64,
}

impl BscParams {
    pub fn new(crossover: f64, composition: f64) -> Result<Self> {
        check_crossover(crossover)?;
        if !(0.0..=1.0).contains(&composition) {
            return Err(invalid(format!(
                "composition must lie in [0, 1], got {composition}"
            )));
        }
        Ok(Self {
            crossover,
            composition,
        })
    }

    /// Output one-probability q ∗ p of a standard codeword symbol.
    pub fn output_bias(&self) -> f64 {
        binary_convolution(self.composition, self.crossover)
    }
}

fn check_crossover(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 0.5) {
        return Err(invalid(format!(
            "crossover probability must lie in (0, ½), got {p}"
        )));
    }
    Ok(())
}

/// ln 2 − h_B(p).
pub fn bsc_capacity(p: f64) -> f64 {
    kl_from_half(p)
}

/// Optimal BSC red-alert exponent D(w* ‖ p) with h_B(w*) = R + h_B(p) on the
/// branch w* ∈ [½, 1−p].
pub fn bsc_red_alert_exponent(p: f64, rate: f64) -> Result<f64> {
    check_crossover(p)?;
    let capacity = bsc_capacity(p);
    if !(rate >= 0.0) || rate > capacity * (1.0 + RATE_TOL) + RATE_TOL {
        return Err(invalid(format!(
            "rate {rate} outside [0, C_BSC = {capacity}]"
        )));
    }
    // h_B(w) = R + h_B(p)  ⇔  D(w ‖ ½) = C_BSC − R, increasing in w on [½, 1].
    let target = (capacity - rate).max(0.0);
    let w = if target == 0.0 {
        0.5
    } else {
        let (mut lo, mut hi) = (0.5, 1.0 - p);
        while hi - lo > 1e-15 {
            let mid = 0.5 * (lo + hi);
            if kl_from_half(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    Ok(binary_kl(w, p))
}

/// Rate, exponent and weight-filter survival exponent of the binary conical
/// code.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BscConical {
    /// h_B(q) − h_B(p).
    pub rate: f64,
    /// D(q∗p ‖ p).
    pub exponent: f64,
    /// −D(q ‖ ½): per-symbol log bound on P(wt(x) ≥ nq) for Bernoulli(½) x.
    pub log_weight_tail_bound_per_n: f64,
}

pub fn bsc_conical(p: f64, q: f64) -> Result<BscConical> {
    check_crossover(p)?;
    if !(q > 0.5 && q < 1.0) {
        return Err(invalid(format!(
            "conical composition must lie in (½, 1), got {q}"
        )));
    }
    Ok(BscConical {
        rate: binary_entropy(q) - binary_entropy(p),
        exponent: binary_kl(binary_convolution(q, p), p),
        log_weight_tail_bound_per_n: -kl_from_half(q),
    })
}

/// Rate of the fixed-composition code whose output bias is q∗p.
pub fn bsc_fixed_composition_rate(p: f64, q: f64) -> f64 {
    binary_entropy(binary_convolution(q, p)) - binary_entropy(p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmcExponent {
    pub capacity: f64,
    /// max_x D(p*_Y ‖ p_{Y|x}); +∞ if some row misses part of the support.
    pub exponent: f64,
    pub best_input: usize,
    /// Capacity-achieving output distribution.
    pub output_distribution: Vec<f64>,
}

const BA_TOL: f64 = 1e-10;
const BA_MAX_ITER: usize = 100_000;

fn kl_vec(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(&a, &b)| {
            if a == 0.0 {
                0.0
            } else if b == 0.0 {
                f64::INFINITY
            } else {
                a * (a / b).ln()
            }
        })
        .sum()
}

fn check_stochastic(matrix: &[Vec<f64>]) -> Result<usize> {
    let width = matrix.first().map(Vec::len).unwrap_or(0);
    if matrix.is_empty() || width == 0 {
        return Err(invalid("transition matrix must be nonempty"));
    }
    for (x, row) in matrix.iter().enumerate() {
        if row.len() != width {
            return Err(invalid(format!(
                "row {x} has {} entries, expected {width}",
                row.len()
            )));
        }
        if row.iter().any(|&w| !(w >= 0.0)) {
            return Err(invalid(format!("row {x} has a negative or NaN entry")));
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("row {x} sums to {s}")));
        }
    }
    Ok(width)
}

/// Red-alert exponent at capacity for a DMC, with the capacity-achieving
/// output law obtained by Blahut–Arimoto from a uniform start.
pub fn dmc_capacity_exponent(matrix: &[Vec<f64>]) -> Result<DmcExponent> {
    let ny = check_stochastic(matrix)?;
    let nx = matrix.len();
    let mut input = vec![1.0 / nx as f64; nx];
    let mut output = vec![0.0; ny];
    let mut capacity = 0.0;
    for _ in 0..BA_MAX_ITER {
        output.iter_mut().for_each(|q| *q = 0.0);
        for (r, row) in input.iter().zip(matrix) {
            for (q, w) in output.iter_mut().zip(row) {
                *q += r * w;
            }
        }
        let div: Vec<f64> = matrix.iter().map(|row| kl_vec(row, &output)).collect();
        let upper = div.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = input.iter().zip(&div).map(|(r, d)| r * d.exp()).collect();
        let total: f64 = weights.iter().sum();
        let lower = total.ln();
        capacity = lower;
        if upper - lower < BA_TOL {
            break;
        }
        input = weights.iter().map(|w| w / total).collect();
    }
    let (best_input, exponent) = matrix
        .iter()
        .map(|row| kl_vec(&output, row))
        .enumerate()
        .fold(
            (0, f64::NEG_INFINITY),
            |acc, (x, d)| if d > acc.1 { (x, d) } else { acc },
        );
    Ok(DmcExponent {
        capacity,
        exponent,
        best_input,
        output_distribution: output,
    })
}
