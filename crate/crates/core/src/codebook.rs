//! Identification codebooks built by greedy sphere packing in the reduced
//! affine space.
//!
//! A codeword lives in three coordinate systems: the original release rates
//! `c ∈ [0, c_avg]^N`, the affine image `c̄ = Ā c ∈ R^K`, and the reduced image
//! `u_tᵀ c̄ ∈ R^T`. Packing happens in the reduced space, where accepted
//! centers are at least `2·r0` apart.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::affinity::ReductionMap;
use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::linalg;
use crate::rng::{self, Stream};

/// Packing scale for a given rank: `ε_T` and `r0 = sqrt(T·ε_T)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PackingRadius {
    pub epsilon_t: f64,
    pub r0: f64,
}

/// Exponent `(2 − (κ + 4l + b))/2` shared by `ε_T` and the decoding threshold.
pub fn scale_exponent(b: f64, kappa: f64, l: f64) -> f64 {
    (2.0 - (kappa + 4.0 * l + b)) / 2.0
}

pub(crate) fn check_exponents(a: f64, b: f64, kappa: f64, l: f64) -> Result<()> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::invalid(format!("packing constant a must be positive, got {a}")));
    }
    if !(b >= 0.0 && b.is_finite()) {
        return Err(Error::invalid(format!("packing constant b must be non-negative, got {b}")));
    }
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(Error::invalid(format!("kappa must lie in (0, 1], got {kappa}")));
    }
    if !(0.0..1.0).contains(&l) {
        return Err(Error::invalid(format!("l must lie in [0, 1), got {l}")));
    }
    Ok(())
}

/// `ε_T = a / T^{(2−(κ+4l+b))/2}` and `r0 = sqrt(T ε_T)`.
pub fn packing_radius(a: f64, b: f64, kappa: f64, l: f64, t: usize) -> Result<PackingRadius> {
    check_exponents(a, b, kappa, l)?;
    if t == 0 {
        return Err(Error::invalid("rank t must be ≥ 1"));
    }
    let tf = t as f64;
    let epsilon_t = a / tf.powf(scale_exponent(b, kappa, l));
    Ok(PackingRadius {
        epsilon_t,
        r0: (tf * epsilon_t).sqrt(),
    })
}

/// An identification codebook in original, affine and reduced coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    original: Vec<Vec<f64>>,
    affine: Vec<Vec<f64>>,
    reduced: Vec<Vec<f64>>,
    r0: f64,
    c_avg: f64,
    c_max: f64,
    seed: u64,
    candidate_budget: usize,
    saturation_count: usize,
    probes: usize,
}

impl Codebook {
    /// Build a codebook from explicit original-space codewords. No separation
    /// check is made here; [`min_distance_reduced`] reports what was achieved.
    pub fn from_codewords(
        ch: &ChannelParams,
        red: &ReductionMap,
        original: Vec<Vec<f64>>,
        r0: f64,
        c_avg: f64,
        c_max: f64,
    ) -> Result<Self> {
        check_box(c_avg, c_max)?;
        check_reduction(ch, red)?;
        if original.is_empty() {
            return Err(Error::invalid("codebook needs at least one codeword"));
        }
        for (i, c) in original.iter().enumerate() {
            if c.len() != ch.n() {
                return Err(Error::dims(format!("codeword {i} has {} entries, N = {}", c.len(), ch.n())));
            }
            if c.iter().any(|&x| !(0.0..=c_avg).contains(&x)) {
                return Err(Error::invalid(format!("codeword {i} leaves the box [0, {c_avg}]")));
            }
        }
        let affine: Vec<Vec<f64>> = original.iter().map(|c| ch.affine_image(c)).collect();
        let reduced = affine.iter().map(|a| red.project(a)).collect();
        Ok(Codebook {
            original,
            affine,
            reduced,
            r0,
            c_avg,
            c_max,
            seed: 0,
            candidate_budget: 0,
            saturation_count: 0,
            probes: 0,
        })
    }

    pub fn m(&self) -> usize {
        self.original.len()
    }

    pub fn t(&self) -> usize {
        self.reduced.first().map_or(0, Vec::len)
    }

    pub fn original(&self) -> &[Vec<f64>] {
        &self.original
    }

    pub fn affine(&self) -> &[Vec<f64>] {
        &self.affine
    }

    pub fn reduced(&self) -> &[Vec<f64>] {
        &self.reduced
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn c_avg(&self) -> f64 {
        self.c_avg
    }

    pub fn c_max(&self) -> f64 {
        self.c_max
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn candidate_budget(&self) -> usize {
        self.candidate_budget
    }

    /// Admissible centers found by the post-construction probe.
    pub fn saturation_count(&self) -> usize {
        self.saturation_count
    }

    /// True when the post-construction probe found no admissible center.
    pub fn saturated(&self) -> bool {
        self.probes > 0 && self.saturation_count == 0
    }

    fn admits(&self, candidate: &[f64]) -> bool {
        let limit = 2.0 * self.r0;
        self.reduced.iter().all(|c| linalg::distance(c, candidate) >= limit)
    }

    pub fn to_file(&self) -> CodebookFile {
        CodebookFile {
            m: self.m(),
            t: self.t(),
            r0: self.r0,
            c_avg: self.c_avg,
            c_max: self.c_max,
            seed: self.seed,
            candidate_budget: self.candidate_budget,
            saturation_count: self.saturation_count,
            probes: self.probes,
            original: self.original.clone(),
            affine_row_norms: self.affine.iter().map(|r| linalg::norm(r)).collect(),
            reduced_row_norms: self.reduced.iter().map(|r| linalg::norm(r)).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("codebook serializes")
    }

    /// Rebuild from the stored original codewords and check the recomputed
    /// affine/reduced row norms against the stored checksums.
    pub fn from_file(file: &CodebookFile, ch: &ChannelParams, red: &ReductionMap) -> Result<Self> {
        if file.original.len() != file.m {
            return Err(Error::dims(format!(
                "codebook declares m = {} but stores {} codewords",
                file.m,
                file.original.len()
            )));
        }
        if red.t() != file.t {
            return Err(Error::dims(format!("codebook rank {} vs reduction rank {}", file.t, red.t())));
        }
        let mut cb = Self::from_codewords(ch, red, file.original.clone(), file.r0, file.c_avg, file.c_max)?;
        cb.seed = file.seed;
        cb.candidate_budget = file.candidate_budget;
        cb.saturation_count = file.saturation_count;
        cb.probes = file.probes;
        verify_norms("affine", &cb.affine, &file.affine_row_norms)?;
        verify_norms("reduced", &cb.reduced, &file.reduced_row_norms)?;
        Ok(cb)
    }

    pub fn from_json(text: &str, ch: &ChannelParams, red: &ReductionMap) -> Result<Self> {
        Self::from_file(&serde_json::from_str(text)?, ch, red)
    }
}

/// Serialized codebook: parameters and original codewords plus row-norm
/// checksums of the derived representations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CodebookFile {
    pub m: usize,
    pub t: usize,
    pub r0: f64,
    pub c_avg: f64,
    pub c_max: f64,
    pub seed: u64,
    pub candidate_budget: usize,
    pub saturation_count: usize,
    pub probes: usize,
    pub original: Vec<Vec<f64>>,
    pub affine_row_norms: Vec<f64>,
    pub reduced_row_norms: Vec<f64>,
}

fn verify_norms(what: &str, rows: &[Vec<f64>], stored: &[f64]) -> Result<()> {
    if rows.len() != stored.len() {
        return Err(Error::Checksum(format!("{what} checksum count mismatch")));
    }
    for (i, (r, &s)) in rows.iter().zip(stored).enumerate() {
        let n = linalg::norm(r);
        if (n - s).abs() > 1e-9 * n.abs().max(s.abs()).max(1e-300) {
            return Err(Error::Checksum(format!("{what} row {i}: recomputed norm {n} vs stored {s}")));
        }
    }
    Ok(())
}

fn check_box(c_avg: f64, c_max: f64) -> Result<()> {
    if !(c_avg > 0.0 && c_avg.is_finite()) {
        return Err(Error::invalid(format!("c_avg must be positive, got {c_avg}")));
    }
    if !(c_max >= c_avg && c_max.is_finite()) {
        return Err(Error::invalid(format!("c_avg ≤ c_max violated: c_avg={c_avg}, c_max={c_max}")));
    }
    Ok(())
}

fn check_reduction(ch: &ChannelParams, red: &ReductionMap) -> Result<()> {
    if red.u_t().nrows() != ch.k() {
        return Err(Error::dims(format!(
            "reduction map acts on {} receptors, channel has K = {}",
            red.u_t().nrows(),
            ch.k()
        )));
    }
    Ok(())
}

fn draw_candidate<R: Rng + ?Sized>(n: usize, c_avg: f64, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| c_avg * rng.gen::<f64>()).collect()
}

/// Greedy random sequential packing.
///
/// Draws `candidate_budget` uniform points of `[0, c_avg]^N` and accepts each
/// one whose reduced image is at least `2·r0` from every accepted center. A
/// probe of `max(1, budget/10)` fresh candidates afterwards decides the
/// saturated flag.
pub fn construct_greedy(
    ch: &ChannelParams,
    red: &ReductionMap,
    c_avg: f64,
    c_max: f64,
    r0: f64,
    candidate_budget: usize,
    seed: u64,
) -> Result<Codebook> {
    check_box(c_avg, c_max)?;
    check_reduction(ch, red)?;
    if !(r0 > 0.0 && r0.is_finite()) {
        return Err(Error::invalid(format!("packing radius must be positive, got {r0}")));
    }
    if candidate_budget == 0 {
        return Err(Error::invalid("candidate budget must be ≥ 1"));
    }
    let mut cb = Codebook {
        original: Vec::new(),
        affine: Vec::new(),
        reduced: Vec::new(),
        r0,
        c_avg,
        c_max,
        seed,
        candidate_budget,
        saturation_count: 0,
        probes: 0,
    };
    let mut rng = rng::stream_rng(seed, Stream::Codebook, 0);
    for _ in 0..candidate_budget {
        let x = draw_candidate(ch.n(), c_avg, &mut rng);
        let affine = ch.affine_image(&x);
        let reduced = red.project(&affine);
        if cb.admits(&reduced) {
            cb.original.push(x);
            cb.affine.push(affine);
            cb.reduced.push(reduced);
        }
    }
    let probes = (candidate_budget / 10).max(1);
    let mut probe_rng = rng::stream_rng(seed, Stream::Saturation, 0);
    cb.saturation_count = saturation_probe(&cb, ch, red, probes, &mut probe_rng)?;
    cb.probes = probes;
    Ok(cb)
}

/// Number of fresh uniform candidates that could still be added.
pub fn saturation_probe<R: Rng + ?Sized>(
    cb: &Codebook,
    ch: &ChannelParams,
    red: &ReductionMap,
    probes: usize,
    rng: &mut R,
) -> Result<usize> {
    if probes == 0 {
        return Err(Error::invalid("probe budget must be ≥ 1"));
    }
    check_reduction(ch, red)?;
    let mut admissible = 0;
    for _ in 0..probes {
        let x = draw_candidate(ch.n(), cb.c_avg, rng);
        let reduced = red.project(&ch.affine_image(&x));
        if cb.admits(&reduced) {
            admissible += 1;
        }
    }
    Ok(admissible)
}

/// Smallest pairwise distance between reduced codewords.
pub fn min_distance_reduced(cb: &Codebook) -> Result<f64> {
    if cb.m() < 2 {
        return Err(Error::TooFewCodewords);
    }
    let mut best = f64::INFINITY;
    for i in 0..cb.m() {
        for j in i + 1..cb.m() {
            best = best.min(linalg::distance(&cb.reduced[i], &cb.reduced[j]));
        }
    }
    Ok(best)
}

/// `log2(m) / (t·log2 t)`.
pub fn achieved_rate(m: usize, t: usize) -> Result<f64> {
    if t < 2 {
        return Err(Error::invalid(format!("rate needs t ≥ 2, got {t}")));
    }
    if m == 0 {
        return Err(Error::invalid("rate needs m ≥ 1"));
    }
    let tf = t as f64;
    Ok((m as f64).log2() / (tf * tf.log2()))
}

/// `ln Vol` of a `t`-ball of radius `r`: `π^{t/2} r^t / Γ(t/2 + 1)`.
pub fn ln_ball_volume(t: usize, r: f64) -> f64 {
    let tf = t as f64;
    0.5 * tf * std::f64::consts::PI.ln() + tf * r.ln() - libm::lgamma(tf / 2.0 + 1.0)
}

/// Fraction of the codebook region covered by the packing spheres, assuming
/// no overlap: `m · Vol(ball(r0)) / region_volume`.
pub fn packing_density(cb: &Codebook, region_volume: f64) -> f64 {
    ((cb.m() as f64).ln() + ln_ball_volume(cb.t(), cb.r0) - region_volume.ln()).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affinity::{gen_identity, svd_reduction};

    fn identity(n: usize) -> (ChannelParams, ReductionMap) {
        let ch = ChannelParams::uniform(gen_identity(n).unwrap(), 1.0, 1.0).unwrap();
        let red = svd_reduction(ch.abar()).unwrap();
        (ch, red)
    }

    #[test]
    fn packing_radius_examples() {
        let p = packing_radius(1.0, 0.0, 1.0, 0.0, 4).unwrap();
        assert!((p.epsilon_t - 0.5).abs() < 1e-15);
        assert!((p.r0 - 2f64.sqrt()).abs() < 1e-15);
        let p = packing_radius(1.0, 0.0, 1.0, 0.0, 1).unwrap();
        assert_eq!((p.epsilon_t, p.r0), (1.0, 1.0));
        let p = packing_radius(2.0, 0.0, 0.8, 0.05, 16).unwrap();
        assert!((p.epsilon_t - 0.5).abs() < 1e-12);
        assert!((p.r0 - 8f64.sqrt()).abs() < 1e-12);
        assert!(packing_radius(1.0, 0.0, 1.0, 0.0, 0).is_err());
        assert!(packing_radius(1.0, 0.0, 1.5, 0.0, 4).is_err());
    }

    #[test]
    fn first_candidate_always_accepted() {
        let (ch, red) = identity(3);
        let cb = construct_greedy(&ch, &red, 1.0, 1.0, 100.0, 1, 0).unwrap();
        assert_eq!(cb.m(), 1);
    }

    #[test]
    fn radius_above_box_diameter_gives_single_codeword() {
        let (ch, red) = identity(2);
        let cb = construct_greedy(&ch, &red, 1.0, 1.0, 1.1, 5000, 9).unwrap();
        assert_eq!(cb.m(), 1);
        assert_eq!(cb.saturation_count(), 0);
        assert!(cb.saturated());
        assert!(matches!(min_distance_reduced(&cb), Err(Error::TooFewCodewords)));
    }

    #[test]
    fn one_dimensional_greedy_packing_stops_at_two() {
        // {0, 0.5, 1} is the only 3-point packing; random greedy never hits it.
        let (ch, red) = identity(1);
        let cb = construct_greedy(&ch, &red, 1.0, 1.0, 0.25, 200_000, 3).unwrap();
        assert_eq!(cb.m(), 2);
        assert!(cb.saturated());
        assert!(min_distance_reduced(&cb).unwrap() >= 0.5);
    }

    #[test]
    fn min_distance_examples() {
        let (ch, red) = identity(1);
        let cb = Codebook::from_codewords(&ch, &red, vec![vec![0.0], vec![1.0]], 0.1, 1.0, 1.0).unwrap();
        assert!((min_distance_reduced(&cb).unwrap() - 1.0).abs() < 1e-15);
        let (ch, red) = identity(2);
        let cb = Codebook::from_codewords(&ch, &red, vec![vec![0.0, 0.0], vec![3.0, 4.0]], 0.1, 4.0, 4.0).unwrap();
        assert!((min_distance_reduced(&cb).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn saturation_probe_rejects_zero_budget() {
        let (ch, red) = identity(2);
        let cb = construct_greedy(&ch, &red, 1.0, 1.0, 1.1, 10, 1).unwrap();
        assert!(saturation_probe(&cb, &ch, &red, 0, &mut rng::seeded(1)).is_err());
        assert_eq!(saturation_probe(&cb, &ch, &red, 1000, &mut rng::seeded(1)).unwrap(), 0);
    }

    #[test]
    fn construction_validation() {
        let (ch, red) = identity(2);
        assert!(construct_greedy(&ch, &red, 1.0, 1.0, 0.5, 0, 1).is_err());
        assert!(construct_greedy(&ch, &red, 2.0, 1.0, 0.5, 10, 1).is_err());
        assert!(construct_greedy(&ch, &red, 1.0, 1.0, 0.0, 10, 1).is_err());
    }

    #[test]
    fn achieved_rate_examples() {
        assert_eq!(achieved_rate(16, 4).unwrap(), 0.5);
        assert_eq!(achieved_rate(1, 4).unwrap(), 0.0);
        assert_eq!(achieved_rate(1 << 18, 8).unwrap(), 0.75);
        assert!(achieved_rate(4, 1).is_err());
    }

    #[test]
    fn rate_is_monotone_in_m() {
        for t in 2..10 {
            let rates: Vec<f64> = (1..200).map(|m| achieved_rate(m, t).unwrap()).collect();
            assert!(rates.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn ball_volume_matches_low_dimensions() {
        assert!((ln_ball_volume(1, 2.0).exp() - 4.0).abs() < 1e-12);
        assert!((ln_ball_volume(2, 1.0).exp() - std::f64::consts::PI).abs() < 1e-12);
        assert!((ln_ball_volume(3, 1.0).exp() - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn codebook_json_round_trip_and_checksum() {
        let (ch, red) = identity(3);
        let cb = construct_greedy(&ch, &red, 2.0, 3.0, 0.6, 500, 17).unwrap();
        let text = cb.to_json();
        let back = Codebook::from_json(&text, &ch, &red).unwrap();
        assert_eq!(back, cb);
        let mut file: CodebookFile = serde_json::from_str(&text).unwrap();
        file.reduced_row_norms[0] += 1e-3;
        assert!(matches!(Codebook::from_file(&file, &ch, &red), Err(Error::Checksum(_))));
    }

    #[test]
    fn construction_is_deterministic() {
        let (ch, red) = identity(4);
        let a = construct_greedy(&ch, &red, 1.0, 1.0, 0.4, 2000, 5).unwrap();
        let b = construct_greedy(&ch, &red, 1.0, 1.0, 0.4, 2000, 5).unwrap();
        assert_eq!(a, b);
        assert!(a.m() > 1);
        assert!(min_distance_reduced(&a).unwrap() >= 0.8);
    }
}
