//! Codebook construction, channel simulation and decoding.
//!
//! Message 0 is the red-alert message. Standard messages are 1..=M and are
//! stored in index order. A codebook is a pure function of its header: the
//! header carries everything needed to regenerate the payload, so only the
//! header is ever serialized.

use rand::seq::index::sample;
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exponents::{awgn_capacity, derive_design_params, ChannelParams, DesignParams};
use crate::geometry::{distance_sq, norm_sq};
use crate::rng::{domain, substream};

/// Default cap on codewords (and on conical candidates): 2²⁰.
pub const DEFAULT_CODEWORD_CAP: usize = 1 << 20;

/// Conical candidates are screened in parallel batches of this size.
const CANDIDATE_BATCH: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodebookKind {
    Offset,
    Conical,
    BscFixed,
    BscConical,
}

/// Construction inputs, by family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum CodebookParams {
    Offset {
        channel: ChannelParams,
        design: DesignParams,
    },
    Conical {
        channel: ChannelParams,
        rate: f64,
        epsilon: f64,
    },
    Binary {
        rate: f64,
        composition: f64,
    },
}

/// Serializable description of a codebook. Payloads are regenerated from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodebookHeader {
    pub kind: CodebookKind,
    pub n: usize,
    /// Number of standard codewords.
    pub m: usize,
    pub seed: u64,
    pub params: CodebookParams,
    /// Per-symbol peak power applied by expurgation, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expurgation_limit: Option<f64>,
}

/// Real-valued codebook for the AWGN channel.
#[derive(Debug, Clone, PartialEq)]
pub struct RealCodebook {
    header: CodebookHeader,
    red_alert: Vec<f64>,
    /// M·n entries, codeword w at [(w−1)n, wn).
    standard: Vec<f64>,
}

impl RealCodebook {
    pub fn header(&self) -> &CodebookHeader {
        &self.header
    }

    pub fn n(&self) -> usize {
        self.header.n
    }

    pub fn m(&self) -> usize {
        self.header.m
    }

    pub fn red_alert(&self) -> &[f64] {
        &self.red_alert
    }

    /// Codeword for message `w` ∈ 0..=M.
    pub fn codeword(&self, w: usize) -> &[f64] {
        if w == 0 {
            &self.red_alert
        } else {
            let n = self.header.n;
            &self.standard[(w - 1) * n..w * n]
        }
    }

    pub fn standard(&self) -> impl Iterator<Item = &[f64]> {
        self.standard.chunks_exact(self.header.n)
    }

    /// Mean of ‖x(w)‖²/n over the standard codewords.
    pub fn mean_standard_power(&self) -> f64 {
        norm_sq(&self.standard) / self.standard.len() as f64
    }
}

/// Packed binary word.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitWord {
    n: usize,
    words: Vec<u64>,
}

impl BitWord {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            words: vec![0; n.div_ceil(64)],
        }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut w = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                w.set(i);
            }
        }
        w
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn flip(&mut self, i: usize) {
        self.words[i / 64] ^= 1 << (i % 64);
    }

    /// Hamming weight.
    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn hamming(&self, other: &BitWord) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    fn random(n: usize, rng: &mut impl RngCore) -> Self {
        let mut w = Self::zeros(n);
        for word in &mut w.words {
            *word = rng.next_u64();
        }
        if !n.is_multiple_of(64) {
            if let Some(last) = w.words.last_mut() {
                *last &= (1u64 << (n % 64)) - 1;
            }
        }
        w
    }
}

/// Binary codebook for the BSC. The red-alert codeword is all-zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryCodebook {
    header: CodebookHeader,
    red_alert: BitWord,
    standard: Vec<BitWord>,
}

impl BinaryCodebook {
    pub fn header(&self) -> &CodebookHeader {
        &self.header
    }

    pub fn n(&self) -> usize {
        self.header.n
    }

    pub fn m(&self) -> usize {
        self.header.m
    }

    pub fn codeword(&self, w: usize) -> &BitWord {
        if w == 0 {
            &self.red_alert
        } else {
            &self.standard[w - 1]
        }
    }

    pub fn standard(&self) -> &[BitWord] {
        &self.standard
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Codebook {
    Real(RealCodebook),
    Binary(BinaryCodebook),
}

impl Codebook {
    pub fn header(&self) -> &CodebookHeader {
        match self {
            Codebook::Real(c) => c.header(),
            Codebook::Binary(c) => c.header(),
        }
    }

    /// Rebuild a codebook from its header, bit-for-bit.
    pub fn regenerate(header: &CodebookHeader, cap: usize) -> Result<Self> {
        let n = header.n;
        let built = match (header.kind, header.params) {
            (CodebookKind::Offset, CodebookParams::Offset { channel, design }) => {
                if design.n != n {
                    return Err(invalid("header blocklength disagrees with design"));
                }
                Codebook::Real(build_offset_codebook(&channel, &design, header.seed, cap)?)
            }
            (
                CodebookKind::Conical,
                CodebookParams::Conical {
                    channel,
                    rate,
                    epsilon,
                },
            ) => Codebook::Real(build_conical_codebook(
                &channel,
                n,
                rate,
                epsilon,
                header.seed,
                cap,
            )?),
            (
                kind @ (CodebookKind::BscFixed | CodebookKind::BscConical),
                CodebookParams::Binary { rate, composition },
            ) => Codebook::Binary(build_bsc_codebook(
                n,
                rate,
                composition,
                kind,
                header.seed,
                cap,
            )?),
            _ => return Err(invalid("codebook kind does not match its parameter family")),
        };
        let built = match (built, header.expurgation_limit) {
            (Codebook::Real(cb), Some(limit)) => {
                Codebook::Real(expurgate_to_peak_power(&cb, limit)?.0)
            }
            (_, Some(_)) => return Err(invalid("expurgation applies only to real codebooks")),
            (cb, None) => cb,
        };
        if built.header().m != header.m {
            return Err(invalid(format!(
                "regenerated {} codewords, header records {}",
                built.header().m,
                header.m
            )));
        }
        Ok(built)
    }
}

/// ⌈e^{nR}⌉ when it fits under `cap`.
fn codebook_size(n: usize, rate: f64, cap: usize) -> Result<usize> {
    let log_required = n as f64 * rate;
    if log_required > (cap as f64).ln() + 1e-12 {
        return Err(Error::TooManyCodewords { log_required, cap });
    }
    // Guard the ceiling against e^{ln k} landing a hair above k.
    let m = log_required.exp();
    let rounded = m.round();
    let m = if (m - rounded).abs() <= 1e-9 * rounded {
        rounded
    } else {
        m.ceil()
    };
    Ok((m as usize).clamp(1, cap))
}

fn fill_gaussian(out: &mut [f64], mean: f64, std: f64, rng: &mut impl Rng) {
    for x in out {
        let z: f64 = rng.sample(StandardNormal);
        *x = mean + std * z;
    }
}

/// Offset Gaussian codebook: red alert at −√P_alert·𝟙, standard codewords
/// √((1−α)P_avg)·𝟙 plus i.i.d. N(0, αP_avg − λ) entries.
pub fn build_offset_codebook(
    params: &ChannelParams,
    design: &DesignParams,
    seed: u64,
    cap: usize,
) -> Result<RealCodebook> {
    // Revalidate so a hand-edited header cannot smuggle in an infeasible design.
    let check = derive_design_params(params, design.n, design.rate, design.epsilon)?;
    if (check.alpha - design.alpha).abs() > 1e-12 * check.alpha
        || (check.lambda - design.lambda).abs() > 1e-12 * check.lambda.max(1e-300)
    {
        return Err(invalid(
            "design parameters are inconsistent with the channel",
        ));
    }
    let n = design.n;
    let m = codebook_size(n, design.rate, cap)?;
    let offset = ((1.0 - design.alpha) * params.p_avg).sqrt();
    let std = (design.alpha * params.p_avg - design.lambda).sqrt();
    let mut standard = vec![0.0; m * n];
    standard
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(i, word)| {
            let mut rng = substream(seed, domain::CODEWORD, i as u64 + 1);
            fill_gaussian(word, offset, std, &mut rng);
        });
    Ok(RealCodebook {
        header: CodebookHeader {
            kind: CodebookKind::Offset,
            n,
            m,
            seed,
            params: CodebookParams::Offset {
                channel: *params,
                design: *design,
            },
            expurgation_limit: None,
        },
        red_alert: vec![-params.p_alert.sqrt(); n],
        standard,
    })
}

/// Drops every standard codeword with ‖x(w)‖² > n·limit and returns the
/// surviving codebook with its realized rate (1/n) ln M′.
pub fn expurgate_to_peak_power(cb: &RealCodebook, limit: f64) -> Result<(RealCodebook, f64)> {
    if !(limit > 0.0) {
        return Err(invalid(format!(
            "peak power limit must be positive, got {limit}"
        )));
    }
    let n = cb.n();
    let budget = n as f64 * limit;
    let standard: Vec<f64> = cb
        .standard()
        .filter(|x| norm_sq(x) <= budget)
        .flatten()
        .copied()
        .collect();
    let m = standard.len() / n;
    if m == 0 {
        return Err(Error::EmptyCodebook);
    }
    let mut header = cb.header.clone();
    header.m = m;
    // Nested expurgation keeps the tightest limit.
    header.expurgation_limit = Some(header.expurgation_limit.map_or(limit, |old| old.min(limit)));
    let out = RealCodebook {
        header,
        red_alert: cb.red_alert.clone(),
        standard,
    };
    Ok((out, (m as f64).ln() / n as f64))
}

/// Half-angle θ = arcsin(e^{−(C−R)}) of the conical code.
pub fn conical_half_angle(params: &ChannelParams, rate: f64) -> f64 {
    (-(awgn_capacity(params) - rate).max(0.0)).exp().asin()
}

/// Conical Gaussian codebook: i.i.d. N(0, P_avg − ε) candidates, keeping the
/// first ⌈e^{nR}⌉ within angle θ + ε of 𝟙.
pub fn build_conical_codebook(
    params: &ChannelParams,
    n: usize,
    rate: f64,
    epsilon: f64,
    seed: u64,
    cap: usize,
) -> Result<RealCodebook> {
    if n == 0 {
        return Err(invalid("blocklength must be positive"));
    }
    let capacity = awgn_capacity(params);
    if !(rate >= 0.0 && epsilon > 0.0 && rate < capacity - epsilon) {
        return Err(Error::InfeasibleDesign {
            rate,
            epsilon,
            capacity,
        });
    }
    if !(params.p_avg > epsilon) {
        return Err(invalid(format!(
            "candidate variance P_avg − ε = {} must be positive",
            params.p_avg - epsilon
        )));
    }
    let m = codebook_size(n, rate, cap)?;
    let candidates = codebook_size(n, capacity - epsilon, cap)?;
    let cos_keep = (conical_half_angle(params, rate) + epsilon)
        .min(std::f64::consts::PI)
        .cos();
    let std = (params.p_avg - epsilon).sqrt();
    let sqrt_n = (n as f64).sqrt();

    let mut standard = Vec::with_capacity(m * n);
    let mut kept = 0;
    let mut start = 0;
    while kept < m && start < candidates {
        let end = (start + CANDIDATE_BATCH).min(candidates);
        let batch: Vec<Option<Vec<f64>>> = (start..end)
            .into_par_iter()
            .map(|k| {
                let mut rng = substream(seed, domain::CANDIDATE, k as u64);
                let mut x = vec![0.0; n];
                fill_gaussian(&mut x, 0.0, std, &mut rng);
                let norm = norm_sq(&x).sqrt();
                let sum: f64 = x.iter().sum();
                (norm > 0.0 && sum >= cos_keep * norm * sqrt_n).then_some(x)
            })
            .collect();
        for x in batch.into_iter().flatten() {
            if kept == m {
                break;
            }
            standard.extend_from_slice(&x);
            kept += 1;
        }
        start = end;
    }
    if kept < m {
        return Err(Error::DeclareError {
            kept,
            required: m,
            examined: candidates,
        });
    }
    Ok(RealCodebook {
        header: CodebookHeader {
            kind: CodebookKind::Conical,
            n,
            m,
            seed,
            params: CodebookParams::Conical {
                channel: *params,
                rate,
                epsilon,
            },
            expurgation_limit: None,
        },
        red_alert: vec![-params.p_alert.sqrt(); n],
        standard,
    })
}

/// Binary codebook with all-zeros red alert. `BscFixed` draws uniform words
/// of weight ⌈nq⌉; `BscConical` keeps i.i.d. Bernoulli(½) candidates of
/// weight at least ⌈nq⌉, examining at most `cap` candidates.
pub fn build_bsc_codebook(
    n: usize,
    rate: f64,
    composition: f64,
    kind: CodebookKind,
    seed: u64,
    cap: usize,
) -> Result<BinaryCodebook> {
    if n == 0 {
        return Err(invalid("blocklength must be positive"));
    }
    if !(composition > 0.5 && composition < 1.0) {
        return Err(invalid(format!(
            "composition must lie in (½, 1), got {composition}"
        )));
    }
    if !(rate >= 0.0) {
        return Err(invalid(format!("rate must be nonnegative, got {rate}")));
    }
    let weight = (n as f64 * composition).ceil() as usize;
    if weight > n {
        return Err(invalid("⌈nq⌉ exceeds the blocklength"));
    }
    let m = codebook_size(n, rate, cap)?;
    let standard = match kind {
        CodebookKind::BscFixed => (0..m)
            .into_par_iter()
            .map(|i| {
                let mut rng = substream(seed, domain::CODEWORD, i as u64 + 1);
                let mut w = BitWord::zeros(n);
                for pos in sample(&mut rng, n, weight) {
                    w.set(pos);
                }
                w
            })
            .collect(),
        CodebookKind::BscConical => {
            let mut kept = Vec::with_capacity(m);
            let mut start = 0;
            while kept.len() < m && start < cap {
                let end = (start + CANDIDATE_BATCH).min(cap);
                let batch: Vec<Option<BitWord>> = (start..end)
                    .into_par_iter()
                    .map(|k| {
                        let mut rng = substream(seed, domain::CANDIDATE, k as u64);
                        let w = BitWord::random(n, &mut rng);
                        (w.weight() >= weight).then_some(w)
                    })
                    .collect();
                kept.extend(batch.into_iter().flatten().take(m - kept.len()));
                start = end;
            }
            if kept.len() < m {
                return Err(Error::DeclareError {
                    kept: kept.len(),
                    required: m,
                    examined: start,
                });
            }
            kept
        }
        _ => return Err(invalid("binary codebooks are bsc_fixed or bsc_conical")),
    };
    Ok(BinaryCodebook {
        header: CodebookHeader {
            kind,
            n,
            m,
            seed,
            params: CodebookParams::Binary { rate, composition },
            expurgation_limit: None,
        },
        red_alert: BitWord::zeros(n),
        standard,
    })
}

/// ⌈n(q∗p) − 4√(n(q∗p)(1−q∗p))⌉, clamped to [0, n].
pub fn default_bsc_threshold(n: usize, crossover: f64, composition: f64) -> usize {
    let b = crate::exponents::binary_convolution(composition, crossover);
    let nf = n as f64;
    let t = (nf * b - 4.0 * (nf * b * (1.0 - b)).sqrt()).ceil();
    t.clamp(0.0, nf) as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Channel {
    /// Additive white Gaussian noise; variance 0 is allowed for testing.
    Awgn {
        noise_var: f64,
    },
    Bsc {
        crossover: f64,
    },
}

impl Channel {
    fn validate(&self) -> Result<()> {
        match *self {
            Channel::Awgn { noise_var } if !(noise_var >= 0.0 && noise_var.is_finite()) => {
                Err(invalid(format!(
                    "noise variance must be nonnegative, got {noise_var}"
                )))
            }
            Channel::Bsc { crossover } if !(0.0..=1.0).contains(&crossover) => Err(invalid(
                format!("crossover must lie in [0, 1], got {crossover}"),
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Received {
    Real(Vec<f64>),
    Binary(BitWord),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelOutput {
    pub y: Received,
    pub true_message: usize,
}

pub(crate) fn awgn_into(x: &[f64], noise_std: f64, y: &mut [f64], rng: &mut impl Rng) {
    for (yi, xi) in y.iter_mut().zip(x) {
        let z: f64 = rng.sample(StandardNormal);
        *yi = xi + noise_std * z;
    }
}

pub(crate) fn bsc_flip(x: &BitWord, crossover: f64, rng: &mut impl Rng) -> BitWord {
    let mut y = x.clone();
    for i in 0..y.len() {
        if rng.random_bool(crossover) {
            y.flip(i);
        }
    }
    y
}

/// Sends message `message` ∈ 0..=M through `channel`.
pub fn transmit(
    cb: &Codebook,
    message: usize,
    channel: &Channel,
    rng: &mut impl Rng,
) -> Result<ChannelOutput> {
    channel.validate()?;
    let m = cb.header().m;
    if message > m {
        return Err(invalid(format!("message {message} outside 0..={m}")));
    }
    let y = match (cb, *channel) {
        (Codebook::Real(c), Channel::Awgn { noise_var }) => {
            let x = c.codeword(message);
            let mut y = vec![0.0; x.len()];
            awgn_into(x, noise_var.sqrt(), &mut y, rng);
            Received::Real(y)
        }
        (Codebook::Binary(c), Channel::Bsc { crossover }) => {
            Received::Binary(bsc_flip(c.codeword(message), crossover, rng))
        }
        _ => return Err(invalid("channel does not match the codebook alphabet")),
    };
    Ok(ChannelOutput {
        y,
        true_message: message,
    })
}

/// Conical-shell detector followed by minimum-distance decoding.
#[derive(Debug, Clone)]
pub struct AwgnDecoder<'a> {
    cb: &'a RealCodebook,
    /// Unit axis from the red-alert codeword toward the origin.
    axis: Vec<f64>,
    min_dist_sq: f64,
    cos_half_angle: f64,
}

impl<'a> AwgnDecoder<'a> {
    pub fn new(cb: &'a RealCodebook, geom: &crate::exponents::DecoderGeometry) -> Result<Self> {
        let a = cb.red_alert();
        let norm = norm_sq(a).sqrt();
        if norm == 0.0 {
            return Err(invalid(
                "red-alert codeword at the origin leaves the cone axis undefined",
            ));
        }
        Ok(Self {
            cb,
            axis: a.iter().map(|v| -v / norm).collect(),
            min_dist_sq: cb.n() as f64 * geom.min_distance_sq_per_dim,
            cos_half_angle: geom.half_angle.cos(),
        })
    }

    /// True when y falls in the standard-message region (closed in both the
    /// distance and the angle).
    pub fn is_standard(&self, y: &[f64]) -> bool {
        let a = self.cb.red_alert();
        let mut dist_sq = 0.0;
        let mut along = 0.0;
        for ((yi, ai), ui) in y.iter().zip(a).zip(&self.axis) {
            let d = yi - ai;
            dist_sq += d * d;
            along += d * ui;
        }
        dist_sq >= self.min_dist_sq && along >= self.cos_half_angle * dist_sq.sqrt()
    }

    /// Nearest standard codeword, ties to the smallest index.
    pub fn nearest_standard(&self, y: &[f64]) -> usize {
        let mut best = (f64::INFINITY, 1);
        for (i, x) in self.cb.standard().enumerate() {
            let d = distance_sq(y, x);
            if d < best.0 {
                best = (d, i + 1);
            }
        }
        best.1
    }

    pub fn decode(&self, y: &[f64]) -> usize {
        if self.is_standard(y) {
            self.nearest_standard(y)
        } else {
            0
        }
    }
}

pub fn decode_awgn(
    y: &[f64],
    cb: &RealCodebook,
    geom: &crate::exponents::DecoderGeometry,
) -> Result<usize> {
    if y.len() != cb.n() {
        return Err(invalid(format!(
            "received length {} differs from n = {}",
            y.len(),
            cb.n()
        )));
    }
    Ok(AwgnDecoder::new(cb, geom)?.decode(y))
}

/// 0 iff wt(y) < threshold; otherwise the nearest standard codeword in
/// Hamming distance, ties to the smallest index.
pub fn decode_bsc(y: &BitWord, cb: &BinaryCodebook, weight_threshold: usize) -> Result<usize> {
    if y.len() != cb.n() {
        return Err(invalid(format!(
            "received length {} differs from n = {}",
            y.len(),
            cb.n()
        )));
    }
    if weight_threshold > cb.n() {
        return Err(invalid(format!(
            "threshold {weight_threshold} exceeds n = {}",
            cb.n()
        )));
    }
    if y.weight() < weight_threshold {
        return Ok(0);
    }
    let mut best = (usize::MAX, 1);
    for (i, x) in cb.standard().iter().enumerate() {
        let d = y.hamming(x);
        if d < best.0 {
            best = (d, i + 1);
        }
    }
    Ok(best.1)
}

/// Cosine of the angle between `x` and 𝟙.
pub fn cos_angle_to_ones(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / (norm_sq(x).sqrt() * (x.len() as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::{binary_kl, DecoderGeometry};
    use crate::geometry::{
        angle_between, dot, log_solid_angle_asymptotic, region_contains, solid_angle_exact,
        ConeSpec,
    };
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit() -> ChannelParams {
        ChannelParams::new(1.0, 1.0, 1.0).unwrap()
    }

    fn small_offset(seed: u64) -> RealCodebook {
        let design = derive_design_params(&unit(), 40, 0.1, 0.05).unwrap();
        build_offset_codebook(&unit(), &design, seed, DEFAULT_CODEWORD_CAP).unwrap()
    }

    #[test]
    fn offset_red_alert_power_is_exact() {
        let p = ChannelParams::new(0.5, 2.0, 1.0).unwrap();
        let design = derive_design_params(&p, 64, 0.05, 0.05).unwrap();
        let cb = build_offset_codebook(&p, &design, 3, DEFAULT_CODEWORD_CAP).unwrap();
        assert_eq!(cb.m(), (64.0f64 * 0.05).exp().ceil() as usize);
        assert!((norm_sq(cb.red_alert()) - 64.0 * 2.0).abs() < 1e-12);
    }

    #[test]
    fn offset_symbol_statistics() {
        let design = derive_design_params(&unit(), 100, 0.1, 0.05).unwrap();
        let cb = build_offset_codebook(&unit(), &design, 11, DEFAULT_CODEWORD_CAP).unwrap();
        let count = (cb.m() * cb.n()) as f64;
        assert!(count >= 1e5);
        let offset = ((1.0 - design.alpha) * 1.0f64).sqrt();
        let var = design.alpha - design.lambda;
        let mean = cb.standard.iter().sum::<f64>() / count;
        assert!(
            (mean - offset).abs() < 4.0 * (var / count).sqrt(),
            "{mean} vs {offset}"
        );
        let sample_var = cb
            .standard
            .iter()
            .map(|x| (x - offset).powi(2))
            .sum::<f64>()
            / count;
        // Var of a squared normal is 2σ⁴.
        assert!((sample_var - var).abs() < 4.0 * (2.0 * var * var / count).sqrt());
        // Average power within 3/√(nM) statistical slack (relative).
        let expected = offset * offset + var;
        assert!(cb.mean_standard_power() <= 1.0 * (1.0 + 3.0 / count.sqrt()));
        assert!((cb.mean_standard_power() - expected).abs() < 0.01);
    }

    #[test]
    fn construction_is_reproducible_from_header() {
        let cb = small_offset(42);
        let json = serde_json::to_string(cb.header()).unwrap();
        let header: CodebookHeader = serde_json::from_str(&json).unwrap();
        let again = Codebook::regenerate(&header, DEFAULT_CODEWORD_CAP).unwrap();
        assert_eq!(again, Codebook::Real(cb.clone()));
        assert_ne!(small_offset(43).standard, cb.standard);
        let (ex, _) = expurgate_to_peak_power(&cb, 1.0).unwrap();
        let header: CodebookHeader =
            serde_json::from_str(&serde_json::to_string(ex.header()).unwrap()).unwrap();
        assert_eq!(
            Codebook::regenerate(&header, DEFAULT_CODEWORD_CAP).unwrap(),
            Codebook::Real(ex)
        );
    }

    #[test]
    fn too_many_codewords_is_reported() {
        let design = derive_design_params(&unit(), 200, 0.2, 0.05).unwrap();
        match build_offset_codebook(&unit(), &design, 1, DEFAULT_CODEWORD_CAP) {
            Err(Error::TooManyCodewords { log_required, cap }) => {
                assert!((log_required - 40.0).abs() < 1e-9);
                assert_eq!(cap, DEFAULT_CODEWORD_CAP);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn expurgation_examples() {
        let cb = small_offset(5);
        let (same, rate) = expurgate_to_peak_power(&cb, f64::INFINITY).unwrap();
        assert_eq!(same.standard, cb.standard);
        assert!((rate - (cb.m() as f64).ln() / 40.0).abs() < 1e-15);
        let (strict, _) = expurgate_to_peak_power(&cb, 1.0).unwrap();
        assert!(strict.standard().all(|x| norm_sq(x) <= 40.0));
        assert!(strict.m() <= cb.m());
        let CodebookParams::Offset { design, .. } = cb.header.params else {
            unreachable!()
        };
        let below_offset = 0.5 * (1.0 - design.alpha);
        assert_eq!(
            expurgate_to_peak_power(&cb, below_offset),
            Err(Error::EmptyCodebook)
        );
    }

    #[test]
    fn expurgation_survival_grows_with_n() {
        // limit P/(1−γ) with γ = 0.1: the lost fraction decays exponentially in n.
        let limit = 1.0 / 0.9;
        let lost = |n: usize, trials: u64| {
            let mut total = 0.0;
            for seed in 0..trials {
                let design = derive_design_params(&unit(), n, 0.02, 0.02).unwrap();
                let cb =
                    build_offset_codebook(&unit(), &design, seed, DEFAULT_CODEWORD_CAP).unwrap();
                let (ex, _) = expurgate_to_peak_power(&cb, limit).unwrap();
                total += 1.0 - ex.m() as f64 / cb.m() as f64;
            }
            total / trials as f64
        };
        let at_200 = lost(200, 100);
        assert!(at_200 < lost(50, 100));
        assert!(at_200 < 0.2, "{at_200}");
    }

    #[test]
    fn conical_keep_rule_and_survival() {
        // Filtering needs exponentially many candidates, so construction is
        // only feasible at small n.
        let p = ChannelParams::new(10.0, 20.0, 1.0).unwrap();
        let (n, rate, eps) = (12usize, 0.1, 0.2);
        let cb = build_conical_codebook(&p, n, rate, eps, 9, DEFAULT_CODEWORD_CAP).unwrap();
        let theta = conical_half_angle(&p, rate);
        let ones = vec![1.0; n];
        assert_eq!(cb.m(), 4);
        for x in cb.standard() {
            assert!(angle_between(x, &ones).unwrap() <= theta + eps + 1e-12);
        }

        // Survivor fraction among candidates at n = 100 tracks the solid angle.
        let p = ChannelParams::new(1.0, 2.0, 1.0).unwrap();
        let (n, rate, eps) = (100usize, awgn_capacity(&p) - 0.07, 0.05);
        let theta = conical_half_angle(&p, rate);
        let std = (p.p_avg - eps).sqrt();
        let trials = 200_000u64;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cos_keep = (theta + eps).cos();
        let mut x = vec![0.0; n];
        let mut hits = 0u64;
        for _ in 0..trials {
            fill_gaussian(&mut x, 0.0, std, &mut rng);
            if cos_angle_to_ones(&x) >= cos_keep {
                hits += 1;
            }
        }
        let frac = hits as f64 / trials as f64;
        let exact = solid_angle_exact(n, theta + eps).unwrap();
        assert!((frac - exact).abs() < 4.0 * (exact * (1.0 - exact) / trials as f64).sqrt());
        let asym = log_solid_angle_asymptotic(n, theta + eps).unwrap();
        assert!((frac.ln() - asym).abs() < 1.0, "{} vs {asym}", frac.ln());
    }

    #[test]
    fn conical_near_capacity_keeps_half() {
        let p = ChannelParams::new(1.0, 1.0, 1.0).unwrap();
        let c = awgn_capacity(&p);
        assert!((conical_half_angle(&p, c) - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        let theta = conical_half_angle(&p, c - 1e-9);
        assert!(
            (solid_angle_exact(50, theta.min(std::f64::consts::FRAC_PI_2)).unwrap() - 0.5).abs()
                < 1e-3
        );
    }

    #[test]
    fn conical_errors() {
        let p = unit();
        assert!(matches!(
            build_conical_codebook(&p, 100, 0.3, 0.1, 1, DEFAULT_CODEWORD_CAP),
            Err(Error::InfeasibleDesign { .. })
        ));
        // Enough candidates are generated but too few fall in the narrow cone.
        assert!(matches!(
            build_conical_codebook(&p, 20, 0.25, 0.05, 1, DEFAULT_CODEWORD_CAP),
            Err(Error::DeclareError { .. })
        ));
        assert!(matches!(
            build_conical_codebook(&p, 100, 0.05, 0.05, 1, DEFAULT_CODEWORD_CAP),
            Err(Error::TooManyCodewords { .. })
        ));
    }

    #[test]
    fn bsc_fixed_weights() {
        let cb = build_bsc_codebook(
            101,
            0.03,
            0.7,
            CodebookKind::BscFixed,
            4,
            DEFAULT_CODEWORD_CAP,
        )
        .unwrap();
        assert_eq!(cb.codeword(0).weight(), 0);
        let w = (101.0f64 * 0.7).ceil() as usize;
        assert!(cb.standard().iter().all(|x| x.weight() == w));
        let header: CodebookHeader =
            serde_json::from_str(&serde_json::to_string(cb.header()).unwrap()).unwrap();
        assert_eq!(
            Codebook::regenerate(&header, DEFAULT_CODEWORD_CAP).unwrap(),
            Codebook::Binary(cb)
        );
    }

    #[test]
    fn bsc_conical_survival_respects_bound() {
        let (n, q) = (60usize, 0.65);
        let cb = build_bsc_codebook(
            n,
            0.05,
            q,
            CodebookKind::BscConical,
            2,
            DEFAULT_CODEWORD_CAP,
        )
        .unwrap();
        let w = (n as f64 * q).ceil() as usize;
        assert!(cb.standard().iter().all(|x| x.weight() >= w));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let trials = 200_000;
        let hits = (0..trials)
            .filter(|_| BitWord::random(n, &mut rng).weight() >= w)
            .count();
        let frac = hits as f64 / trials as f64;
        assert!(
            frac <= 2.0 * (-(n as f64) * binary_kl(q, 0.5)).exp(),
            "{frac}"
        );
        let err = build_bsc_codebook(200, 0.02, 0.9, CodebookKind::BscConical, 2, 10_000);
        assert!(matches!(err, Err(Error::DeclareError { .. })));
    }

    #[test]
    fn transmit_examples() {
        let cb = Codebook::Real(small_offset(1));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = transmit(&cb, 3, &Channel::Awgn { noise_var: 0.0 }, &mut rng).unwrap();
        let Codebook::Real(ref real) = cb else {
            unreachable!()
        };
        assert_eq!(out.y, Received::Real(real.codeword(3).to_vec()));
        assert!(transmit(&cb, 3, &Channel::Bsc { crossover: 0.1 }, &mut rng).is_err());
        assert!(transmit(
            &cb,
            real.m() + 1,
            &Channel::Awgn { noise_var: 1.0 },
            &mut rng
        )
        .is_err());

        // Per-symbol noise variance from 10⁵ symbols.
        let x = vec![0.0; 100_000];
        let mut y = vec![0.0; x.len()];
        awgn_into(&x, 2f64.sqrt(), &mut y, &mut rng);
        let var = norm_sq(&y) / y.len() as f64;
        assert!((var - 2.0).abs() < 4.0 * (2.0 * 4.0 / y.len() as f64).sqrt());

        let flips = bsc_flip(&BitWord::zeros(100_000), 0.11, &mut rng).weight() as f64 / 1e5;
        assert!((flips - 0.11).abs() < 4.0 * (0.11 * 0.89 / 1e5f64).sqrt());
    }

    #[test]
    fn decode_hand_instance() {
        // n = 4, red alert at −𝟙, two standard codewords near +𝟙.
        let header = CodebookHeader {
            kind: CodebookKind::Offset,
            n: 4,
            m: 2,
            seed: 0,
            params: CodebookParams::Offset {
                channel: unit(),
                design: derive_design_params(&unit(), 4, 0.1, 0.05).unwrap(),
            },
            expurgation_limit: None,
        };
        let cb = RealCodebook {
            header,
            red_alert: vec![-1.0; 4],
            standard: vec![1.0, 1.0, 1.0, 0.0, 1.0, 0.0, 1.0, 1.0],
        };
        // ‖x(1) − x(0)‖² = 4+4+4+1 = 13; angle to 𝟙: cos = 7/(√13·2) ≈ 0.9707.
        let geom = DecoderGeometry::from_parts(12.0 / 4.0, 0.3, 1.0).unwrap();
        assert_eq!(decode_awgn(&[1.0, 1.0, 1.0, 0.0], &cb, &geom).unwrap(), 1);
        assert_eq!(decode_awgn(&[1.0, 0.0, 1.0, 1.0], &cb, &geom).unwrap(), 2);
        // Equidistant from both (distance² 1 each): smallest index wins.
        assert_eq!(decode_awgn(&[1.0, 0.5, 1.0, 0.5], &cb, &geom).unwrap(), 1);
        assert_eq!(decode_awgn(&[-1.0; 4], &cb, &geom).unwrap(), 0);
        // On the axis exactly at distance L = 4 from the apex.
        let on_axis = DecoderGeometry::from_parts(16.0 / 4.0, 0.3, 1.0).unwrap();
        assert_eq!(decode_awgn(&[1.0; 4], &cb, &on_axis).unwrap(), 1);
        let tight = DecoderGeometry::from_parts(14.0 / 4.0, 0.3, 1.0).unwrap();
        assert_eq!(decode_awgn(&[1.0, 1.0, 1.0, 0.0], &cb, &tight).unwrap(), 0);
        assert!(decode_awgn(&[0.0; 3], &cb, &geom).is_err());
    }

    #[test]
    fn decoder_region_agrees_with_geometry() {
        let cb = small_offset(8);
        let geom = DecoderGeometry::from_parts(2.0, 0.7, 1.0).unwrap();
        let dec = AwgnDecoder::new(&cb, &geom).unwrap();
        let cone = ConeSpec::new(cb.red_alert().to_vec(), vec![0.0; cb.n()], 0.7).unwrap();
        let l = geom.min_distance(cb.n());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut y = vec![0.0; cb.n()];
        let mut both = [0usize; 2];
        for _ in 0..4000 {
            let w = rng.random_range(1..=cb.m());
            awgn_into(cb.codeword(w), 1.5, &mut y, &mut rng);
            let std = dec.is_standard(&y);
            assert_eq!(std, region_contains(&y, &cone, l).unwrap());
            assert_eq!(dec.decode(&y) == 0, !std);
            both[std as usize] += 1;
        }
        assert!(both[0] > 0 && both[1] > 0);
    }

    #[test]
    fn rotation_about_axis_preserves_decisions() {
        let n = 8;
        let design = derive_design_params(&unit(), n, 0.2, 0.05).unwrap();
        let cb = build_offset_codebook(&unit(), &design, 17, DEFAULT_CODEWORD_CAP).unwrap();
        let geom = DecoderGeometry::from_parts(3.0, 0.8, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            // An even number of reflections in hyperplanes containing 𝟙 is a
            // rotation fixing 𝟙.
            let normals: Vec<Vec<f64>> = (0..4)
                .map(|_| {
                    let mut v = vec![0.0; n];
                    fill_gaussian(&mut v, 0.0, 1.0, &mut rng);
                    let mean = v.iter().sum::<f64>() / n as f64;
                    v.iter_mut().for_each(|x| *x -= mean);
                    let norm = norm_sq(&v).sqrt();
                    v.iter().map(|x| x / norm).collect()
                })
                .collect();
            let rotate = |x: &[f64]| {
                let mut out = x.to_vec();
                for v in &normals {
                    let c = 2.0 * dot(&out, v);
                    out.iter_mut().zip(v).for_each(|(o, vi)| *o -= c * vi);
                }
                out
            };
            let mut rotated = cb.clone();
            rotated.red_alert = rotate(cb.red_alert());
            rotated.standard = cb.standard().flat_map(&rotate).collect();
            let mut y = vec![0.0; n];
            let w = rng.random_range(0..=cb.m());
            awgn_into(cb.codeword(w), 1.0, &mut y, &mut rng);
            let a = decode_awgn(&y, &cb, &geom).unwrap();
            let b = decode_awgn(&rotate(&y), &rotated, &geom).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn degenerate_half_angle_accepts_everything_far_enough() {
        let cb = small_offset(3);
        let geom = DecoderGeometry::from_parts(0.0, std::f64::consts::PI, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut y = vec![0.0; cb.n()];
        for _ in 0..200 {
            awgn_into(cb.red_alert(), 3.0, &mut y, &mut rng);
            assert_ne!(decode_awgn(&y, &cb, &geom).unwrap(), 0);
        }
    }

    #[test]
    fn bsc_decode_examples() {
        let cb = build_bsc_codebook(
            64,
            0.03,
            0.7,
            CodebookKind::BscFixed,
            1,
            DEFAULT_CODEWORD_CAP,
        )
        .unwrap();
        let w = (64.0f64 * 0.7).ceil() as usize;
        assert_eq!(decode_bsc(&BitWord::zeros(64), &cb, 1).unwrap(), 0);
        for i in 1..=cb.m() {
            assert_eq!(decode_bsc(cb.codeword(i), &cb, w).unwrap(), i);
        }
        assert_ne!(decode_bsc(&BitWord::zeros(64), &cb, 0).unwrap(), 0);
        assert!(decode_bsc(&BitWord::zeros(64), &cb, 65).is_err());
        let t = default_bsc_threshold(1000, 0.11, 0.7);
        assert_eq!(
            t,
            (656.0 - 4.0 * (1000.0f64 * 0.656 * 0.344).sqrt()).ceil() as usize
        );
    }

    #[test]
    fn bitword_basics() {
        let a = BitWord::from_bits(&[true, false, true, true]);
        assert_eq!(a.weight(), 3);
        assert!(a.get(0) && !a.get(1));
        let mut b = a.clone();
        b.flip(1);
        assert_eq!(a.hamming(&b), 1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = BitWord::random(70, &mut rng);
        assert!(r.words[1] >> 6 == 0);
    }
}
