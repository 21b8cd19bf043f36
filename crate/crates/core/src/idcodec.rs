//! Threshold identification decoder and Monte Carlo estimation of the type I
//! and type II error probabilities.
//!
//! Message `j` is accepted for observation `y` iff `|Z(y; c^j)| ≤ ψ_T`, where
//! `Z = T⁻¹ Σ_{k∈E_T} [(y_k − (c̄_k^j + λ_k))² − y_k]` runs over the
//! independent rows `E_T` of `Ā`.

use rand::seq::{index, SliceRandom};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::affinity::ReductionMap;
use crate::channel::{sample_from_mean, ChannelParams};
use crate::codebook::{check_exponents, scale_exponent, Codebook};
use crate::error::{Error, Result};
use crate::report::fmt_num;
use crate::rng::{self, Stream};

/// 97.5% standard normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Decoder configuration: threshold constants and the row set `E_T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoderParams {
    pub a: f64,
    pub b: f64,
    pub kappa: f64,
    pub l: f64,
    pub t: usize,
    pub psi_t: f64,
    pub e_t: Vec<usize>,
}

impl DecoderParams {
    /// `ψ_T = (4/3)·a / T^{(2−(κ+4l+b))/2}` with `E_T` taken from `red`.
    pub fn new(a: f64, b: f64, kappa: f64, l: f64, red: &ReductionMap) -> Result<Self> {
        check_exponents(a, b, kappa, l)?;
        let t = red.t();
        Ok(DecoderParams {
            a,
            b,
            kappa,
            l,
            t,
            psi_t: decoding_threshold(a, b, kappa, l, t),
            e_t: red.independent_rows().to_vec(),
        })
    }

    /// Same decoder with the threshold replaced, e.g. to probe the extremes.
    pub fn with_threshold(mut self, psi_t: f64) -> Result<Self> {
        if !(psi_t >= 0.0 && psi_t.is_finite()) {
            return Err(Error::invalid(format!("threshold must be finite and ≥ 0, got {psi_t}")));
        }
        self.psi_t = psi_t;
        Ok(self)
    }

    /// The constants give a vanishing bound only for `b > 0`.
    pub fn provable_decay(&self) -> bool {
        self.b > 0.0
    }
}

/// `ψ_T = 4a / (3 T^{(2−(κ+4l+b))/2})`.
pub fn decoding_threshold(a: f64, b: f64, kappa: f64, l: f64, t: usize) -> f64 {
    4.0 * a / (3.0 * (t as f64).powf(scale_exponent(b, kappa, l)))
}

/// Decoding statistic `Z(y; c̄)` over the rows `e_t`.
pub fn z_metric(y: &[u64], affine_codeword: &[f64], lambda: &[f64], e_t: &[usize]) -> Result<f64> {
    if e_t.is_empty() {
        return Err(Error::invalid("E_T must be non-empty"));
    }
    let k = y.len().min(affine_codeword.len()).min(lambda.len());
    if let Some(&bad) = e_t.iter().find(|&&i| i >= k) {
        return Err(Error::invalid(format!("row index {bad} out of range for K = {k}")));
    }
    Ok(z_unchecked(y, affine_codeword, lambda, e_t))
}

fn z_unchecked(y: &[u64], affine_codeword: &[f64], lambda: &[f64], e_t: &[usize]) -> f64 {
    let sum: f64 = e_t
        .iter()
        .map(|&k| {
            let yk = y[k] as f64;
            let d = yk - (affine_codeword[k] + lambda[k]);
            d * d - yk
        })
        .sum();
    sum / e_t.len() as f64
}

/// Accept message `j` (zero-based) for observation `y`.
pub fn identify(y: &[u64], j: usize, cb: &Codebook, ch: &ChannelParams, dp: &DecoderParams) -> Result<bool> {
    if j >= cb.m() {
        return Err(Error::invalid(format!("message index {j} out of range for m = {}", cb.m())));
    }
    if y.len() != ch.k() {
        return Err(Error::dims(format!("observation has {} entries, K = {}", y.len(), ch.k())));
    }
    let z = z_metric(y, &cb.affine()[j], ch.lambda(), &dp.e_t)?;
    Ok(z.abs() <= dp.psi_t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    Normal,
    Wilson,
}

/// 95% half-width for `errors` out of `trials`: normal approximation, or the
/// Wilson interval half-width when fewer than five errors were seen.
pub fn ci_halfwidth(errors: u64, trials: u64) -> (f64, CiMethod) {
    let n = trials as f64;
    let p = errors as f64 / n;
    if errors < 5 {
        let z2 = Z_95 * Z_95;
        let hw = Z_95 / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
        (hw, CiMethod::Wilson)
    } else {
        (Z_95 * (p * (1.0 - p) / n).sqrt(), CiMethod::Normal)
    }
}

/// Aggregated error statistics over one group of messages or pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub max: f64,
    pub mean: f64,
    pub ci_halfwidth: f64,
    pub ci_method: CiMethod,
    pub worst: (usize, usize),
    pub evaluated: usize,
}

/// Monte Carlo type I/II error estimate.
///
/// `type2_*` are absent when the codebook has a single codeword. The type II
/// maximum is taken over a sample of pairs and is a lower estimate of the
/// maximum over all pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorEstimate {
    pub trials_per_pair: usize,
    pub messages_evaluated: usize,
    pub pairs_evaluated: usize,
    pub type1_max: f64,
    pub type1_mean: f64,
    pub type1_ci_halfwidth: f64,
    pub type1_ci_method: CiMethod,
    pub type2_max: Option<f64>,
    pub type2_mean: Option<f64>,
    pub type2_ci_halfwidth: Option<f64>,
    pub type2_ci_method: Option<CiMethod>,
    pub type2_pairs_sampled: bool,
    pub provable_decay: bool,
}

impl ErrorEstimate {
    pub const CSV_HEADER: &'static str = "T,m,kappa,l,a,b,psi_t,trials,type1_max,type1_mean,type2_max,type2_mean,type1_ci_halfwidth,type2_ci_halfwidth";

    pub fn csv_row(&self, dp: &DecoderParams, m: usize) -> String {
        let opt = |x: Option<f64>| x.map(fmt_num).unwrap_or_default();
        [
            dp.t.to_string(),
            m.to_string(),
            fmt_num(dp.kappa),
            fmt_num(dp.l),
            fmt_num(dp.a),
            fmt_num(dp.b),
            fmt_num(dp.psi_t),
            self.trials_per_pair.to_string(),
            fmt_num(self.type1_max),
            fmt_num(self.type1_mean),
            opt(self.type2_max),
            opt(self.type2_mean),
            fmt_num(self.type1_ci_halfwidth),
            opt(self.type2_ci_halfwidth),
        ]
        .join(",")
    }
}

fn summarize(counts: &[((usize, usize), u64)], trials: usize) -> ErrorSummary {
    let n = trials as u64;
    let (worst, worst_count) = counts.iter().fold(counts[0], |acc, &c| if c.1 > acc.1 { c } else { acc });
    let total: u64 = counts.iter().map(|c| c.1).sum();
    let (hw, method) = ci_halfwidth(worst_count, n);
    ErrorSummary {
        max: worst_count as f64 / n as f64,
        mean: total as f64 / (n as f64 * counts.len() as f64),
        ci_halfwidth: hw,
        ci_method: method,
        worst,
        evaluated: counts.len(),
    }
}

/// Messages selected for type I evaluation: a seeded shuffle truncated to
/// `cap`, returned in ascending order.
fn select_messages(m: usize, cap: usize, seed: u64) -> Vec<usize> {
    let mut all: Vec<usize> = (0..m).collect();
    all.shuffle(&mut rng::stream_rng(seed, Stream::MessageSelection, 0));
    all.truncate(cap.min(m));
    all.sort_unstable();
    all
}

/// Ordered pairs `(i, j)`, `i ≠ j`, sampled uniformly without replacement.
fn select_pairs(m: usize, cap: usize, seed: u64) -> (Vec<(usize, usize)>, bool) {
    let total = m * (m - 1);
    let decode = |idx: usize| {
        let i = idx / (m - 1);
        let r = idx % (m - 1);
        (i, if r >= i { r + 1 } else { r })
    };
    if total <= cap {
        return ((0..total).map(decode).collect(), false);
    }
    let mut picked = index::sample(&mut rng::stream_rng(seed, Stream::PairSelection, 0), total, cap).into_vec();
    picked.sort_unstable();
    (picked.into_iter().map(decode).collect(), true)
}

fn count_type1(cb: &Codebook, ch: &ChannelParams, dp: &DecoderParams, i: usize, trials: usize, seed: u64) -> u64 {
    let mu: Vec<f64> = cb.affine()[i].iter().zip(ch.lambda()).map(|(a, l)| a + l).collect();
    let mut r = rng::stream_rng(seed, Stream::TypeOne, i as u64);
    (0..trials)
        .filter(|_| {
            let y = sample_from_mean(&mu, &mut r);
            z_unchecked(&y, &cb.affine()[i], ch.lambda(), &dp.e_t).abs() > dp.psi_t
        })
        .count() as u64
}

fn count_type2(
    cb: &Codebook,
    ch: &ChannelParams,
    dp: &DecoderParams,
    (i, j): (usize, usize),
    trials: usize,
    seed: u64,
) -> u64 {
    let mu: Vec<f64> = cb.affine()[i].iter().zip(ch.lambda()).map(|(a, l)| a + l).collect();
    let stream_index = (i as u64) * (cb.m() as u64) + j as u64;
    let mut r = rng::stream_rng(seed, Stream::TypeTwo, stream_index);
    (0..trials)
        .filter(|_| {
            let y = sample_from_mean(&mu, &mut r);
            z_unchecked(&y, &cb.affine()[j], ch.lambda(), &dp.e_t).abs() <= dp.psi_t
        })
        .count() as u64
}

fn check_decoder(cb: &Codebook, ch: &ChannelParams, dp: &DecoderParams) -> Result<()> {
    if dp.e_t.is_empty() || dp.e_t.iter().any(|&k| k >= ch.k()) {
        return Err(Error::invalid("decoder rows E_T do not fit the channel"));
    }
    if cb.affine().first().map_or(0, Vec::len) != ch.k() {
        return Err(Error::dims("codebook and channel disagree on K"));
    }
    Ok(())
}

/// Estimate type I and type II error probabilities.
///
/// Up to `pair_cap` messages (seeded shuffle) each get `trials` channel uses
/// for type I; up to `pair_cap` ordered pairs `(i, j)` each get `trials` uses
/// of codeword `i` tested against message `j` for type II. Every message and
/// pair draws from its own derived stream and errors are counted exactly, so
/// the result does not depend on evaluation order or thread count.
pub fn estimate_errors(
    cb: &Codebook,
    ch: &ChannelParams,
    dp: &DecoderParams,
    trials: usize,
    root_seed: u64,
    pair_cap: usize,
) -> Result<ErrorEstimate> {
    if trials == 0 {
        return Err(Error::invalid("trials must be ≥ 1"));
    }
    if pair_cap == 0 {
        return Err(Error::invalid("pair_cap must be ≥ 1"));
    }
    check_decoder(cb, ch, dp)?;

    let messages = select_messages(cb.m(), pair_cap, root_seed);
    let type1: Vec<((usize, usize), u64)> = messages
        .par_iter()
        .map(|&i| ((i, i), count_type1(cb, ch, dp, i, trials, root_seed)))
        .collect();
    let t1 = summarize(&type1, trials);

    let (t2, pairs_evaluated, sampled) = if cb.m() >= 2 {
        let (pairs, sampled) = select_pairs(cb.m(), pair_cap, root_seed);
        let type2: Vec<((usize, usize), u64)> = pairs
            .par_iter()
            .map(|&p| (p, count_type2(cb, ch, dp, p, trials, root_seed)))
            .collect();
        (Some(summarize(&type2, trials)), pairs.len(), sampled)
    } else {
        (None, 0, false)
    };

    Ok(ErrorEstimate {
        trials_per_pair: trials,
        messages_evaluated: messages.len(),
        pairs_evaluated,
        type1_max: t1.max,
        type1_mean: t1.mean,
        type1_ci_halfwidth: t1.ci_halfwidth,
        type1_ci_method: t1.ci_method,
        type2_max: t2.as_ref().map(|s| s.max),
        type2_mean: t2.as_ref().map(|s| s.mean),
        type2_ci_halfwidth: t2.as_ref().map(|s| s.ci_halfwidth),
        type2_ci_method: t2.as_ref().map(|s| s.ci_method),
        type2_pairs_sampled: sampled,
        provable_decay: dp.provable_decay(),
    })
}

/// Sample mean and standard error of `Z(Y(i); c^i)` under the true message.
pub fn centering_statistics(
    cb: &Codebook,
    ch: &ChannelParams,
    dp: &DecoderParams,
    message: usize,
    trials: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if message >= cb.m() {
        return Err(Error::invalid(format!("message index {message} out of range")));
    }
    if trials < 2 {
        return Err(Error::invalid("centering needs at least two trials"));
    }
    check_decoder(cb, ch, dp)?;
    let c = &cb.affine()[message];
    let mu: Vec<f64> = c.iter().zip(ch.lambda()).map(|(a, l)| a + l).collect();
    let mut r = rng::stream_rng(seed, Stream::Centering, message as u64);
    let zs: Vec<f64> = (0..trials)
        .map(|_| z_unchecked(&sample_from_mean(&mu, &mut r), c, ch.lambda(), &dp.e_t))
        .collect();
    let n = trials as f64;
    let mean = zs.iter().sum::<f64>() / n;
    let var = zs.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}
