//! Poisson variate generation driven by an explicit generator.
//!
//! Means below [`INVERSION_CUTOFF`] use sequential-search inversion; larger
//! means use Hörmann's transformed rejection with squeeze (PTRS).

use rand::Rng;

pub const INVERSION_CUTOFF: f64 = 30.0;

/// `ln(k!)`.
pub fn ln_factorial(k: u64) -> f64 {
    libm::lgamma(k as f64 + 1.0)
}

/// Draw one Poisson variate with mean `mu ≥ 0`.
pub fn sample_poisson<R: Rng + ?Sized>(mu: f64, rng: &mut R) -> u64 {
    debug_assert!(mu >= 0.0 && mu.is_finite());
    if mu <= 0.0 {
        0
    } else if mu < INVERSION_CUTOFF {
        inversion(mu, rng)
    } else {
        ptrs(mu, rng)
    }
}

fn inversion<R: Rng + ?Sized>(mu: f64, rng: &mut R) -> u64 {
    let u: f64 = rng.gen();
    let mut k = 0u64;
    let mut p = (-mu).exp();
    let mut cdf = p;
    // the tail beyond k = 1000 at mu < 30 is far below f64 resolution
    while u > cdf && k < 1000 {
        k += 1;
        p *= mu / k as f64;
        cdf += p;
    }
    k
}

fn ptrs<R: Rng + ?Sized>(mu: f64, rng: &mut R) -> u64 {
    let slam = mu.sqrt();
    let loglam = mu.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = rng.gen::<f64>() - 0.5;
        let v: f64 = rng.gen();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + mu + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
        let rhs = -mu + k * loglam - libm::lgamma(k + 1.0);
        if lhs <= rhs {
            return k as u64;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn moments(mu: f64, n: usize, seed: u64) -> (f64, f64) {
        let mut r = rng::seeded(seed);
        let xs: Vec<f64> = (0..n).map(|_| sample_poisson(mu, &mut r) as f64).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (mean, var)
    }

    #[test]
    fn small_mean_moments() {
        let (m, v) = moments(3.0, 1_000_000, 11);
        assert!((m - 3.0).abs() <= 3.0 * (3.0f64 / 1e6).sqrt(), "mean {m}");
        assert!((v - 3.0).abs() <= 0.05, "variance {v}");
    }

    #[test]
    fn large_mean_moments() {
        for mu in [30.0, 75.5, 1000.0] {
            let (m, v) = moments(mu, 400_000, 5);
            let se = (mu / 4e5).sqrt();
            assert!((m - mu).abs() <= 4.0 * se, "mu={mu} mean {m}");
            assert!((v / mu - 1.0).abs() < 0.02, "mu={mu} variance {v}");
        }
    }

    #[test]
    fn ptrs_matches_pmf_near_cutoff() {
        // chi-square style comparison of empirical frequencies to the pmf
        let mu: f64 = 35.0;
        let n = 500_000;
        let mut r = rng::seeded(99);
        let mut counts = vec![0usize; 120];
        for _ in 0..n {
            let k = sample_poisson(mu, &mut r) as usize;
            if k < counts.len() {
                counts[k] += 1;
            }
        }
        for k in 25..45u64 {
            let p = (-mu + k as f64 * mu.ln() - ln_factorial(k)).exp();
            let expect = p * n as f64;
            let sd = expect.sqrt();
            assert!(
                (counts[k as usize] as f64 - expect).abs() < 5.0 * sd,
                "k={k}: {} vs {expect}",
                counts[k as usize]
            );
        }
    }

    #[test]
    fn zero_mean_gives_zero() {
        let mut r = rng::seeded(1);
        assert_eq!(sample_poisson(0.0, &mut r), 0);
    }
}
