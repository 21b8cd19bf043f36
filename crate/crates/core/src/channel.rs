//! Discrete affine Poisson channel: `Y_k ~ Pois((Ā x)_k + λ_k)`.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::affinity::{AffinityMatrix, MatrixFile};
use crate::error::{Error, Result};
use crate::poisson;

/// A channel instance: affinity matrix, per-molecule gains `v` and
/// per-receptor interference rates `λ`, with `Ā = A·diag(v)` precomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams {
    affinity: AffinityMatrix,
    v: Vec<f64>,
    lambda: Vec<f64>,
    v_min: f64,
    v_max: f64,
    lambda_min: f64,
    lambda_max: f64,
    abar: DMatrix<f64>,
}

/// JSON form of [`ChannelParams`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelFile {
    pub affinity: MatrixFile,
    pub v: Vec<f64>,
    pub lambda: Vec<f64>,
    pub v_min: f64,
    pub v_max: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

fn check_range(name: &str, xs: &[f64], lo: f64, hi: f64) -> Result<()> {
    if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
        return Err(Error::invalid(format!(
            "{name} bounds must satisfy 0 < min ≤ max, got [{lo}, {hi}]"
        )));
    }
    for (i, &x) in xs.iter().enumerate() {
        if !(lo <= x && x <= hi) {
            return Err(Error::invalid(format!(
                "{name}[{i}] = {x} outside declared range [{lo}, {hi}]"
            )));
        }
    }
    Ok(())
}

impl ChannelParams {
    pub fn new(
        affinity: AffinityMatrix,
        v: Vec<f64>,
        lambda: Vec<f64>,
        (v_min, v_max): (f64, f64),
        (lambda_min, lambda_max): (f64, f64),
    ) -> Result<Self> {
        if v.len() != affinity.n() {
            return Err(Error::dims(format!("v has {} entries, N = {}", v.len(), affinity.n())));
        }
        if lambda.len() != affinity.k() {
            return Err(Error::dims(format!(
                "lambda has {} entries, K = {}",
                lambda.len(),
                affinity.k()
            )));
        }
        check_range("v", &v, v_min, v_max)?;
        check_range("lambda", &lambda, lambda_min, lambda_max)?;
        let a = affinity.entries();
        let abar = DMatrix::from_fn(a.nrows(), a.ncols(), |r, c| a[(r, c)] * v[c]);
        Ok(ChannelParams {
            affinity,
            v,
            lambda,
            v_min,
            v_max,
            lambda_min,
            lambda_max,
            abar,
        })
    }

    /// Channel with constant gain and constant interference rate.
    pub fn uniform(affinity: AffinityMatrix, v: f64, lambda: f64) -> Result<Self> {
        let (k, n) = (affinity.k(), affinity.n());
        Self::new(affinity, vec![v; n], vec![lambda; k], (v, v), (lambda, lambda))
    }

    pub fn affinity(&self) -> &AffinityMatrix {
        &self.affinity
    }

    pub fn k(&self) -> usize {
        self.affinity.k()
    }

    pub fn n(&self) -> usize {
        self.affinity.n()
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn v_bounds(&self) -> (f64, f64) {
        (self.v_min, self.v_max)
    }

    pub fn lambda_bounds(&self) -> (f64, f64) {
        (self.lambda_min, self.lambda_max)
    }

    /// `Ā = A·diag(v)`.
    pub fn abar(&self) -> &DMatrix<f64> {
        &self.abar
    }

    /// Noise-free receptor image `Ā x`.
    pub fn affine_image(&self, x: &[f64]) -> Vec<f64> {
        let (k, n) = (self.k(), self.n());
        (0..k)
            .map(|r| (0..n).map(|c| self.abar[(r, c)] * x[c]).sum())
            .collect()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n() {
            return Err(Error::dims(format!("input has {} entries, N = {}", x.len(), self.n())));
        }
        if let Some((i, v)) = x.iter().enumerate().find(|(_, &v)| !(v >= 0.0 && v.is_finite())) {
            return Err(Error::invalid(format!("negative or non-finite release rate x[{i}] = {v}")));
        }
        Ok(())
    }

    /// `μ = Ā x + λ`.
    pub fn mean_vector(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self
            .affine_image(x)
            .into_iter()
            .zip(&self.lambda)
            .map(|(m, l)| m + l)
            .collect())
    }

    /// One channel use.
    pub fn sample<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> Result<Vec<u64>> {
        let mu = self.mean_vector(x)?;
        Ok(sample_from_mean(&mu, rng))
    }

    /// `ln P(y | x)` in nats, with Poisson mean `μ_k = (Ā x)_k + λ_k`.
    pub fn log_likelihood(&self, x: &[f64], y: &[u64]) -> Result<f64> {
        if y.len() != self.k() {
            return Err(Error::dims(format!("observation has {} entries, K = {}", y.len(), self.k())));
        }
        let mu = self.mean_vector(x)?;
        Ok(log_likelihood_from_mean(&mu, y))
    }

    pub fn to_file(&self) -> ChannelFile {
        ChannelFile {
            affinity: self.affinity.to_file(),
            v: self.v.clone(),
            lambda: self.lambda.clone(),
            v_min: self.v_min,
            v_max: self.v_max,
            lambda_min: self.lambda_min,
            lambda_max: self.lambda_max,
        }
    }

    pub fn from_file(file: &ChannelFile) -> Result<Self> {
        Self::new(
            AffinityMatrix::from_file(&file.affinity)?,
            file.v.clone(),
            file.lambda.clone(),
            (file.v_min, file.v_max),
            (file.lambda_min, file.lambda_max),
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("channel serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file(&serde_json::from_str(text)?)
    }
}

/// Independent Poisson draws with means `mu`.
pub fn sample_from_mean<R: Rng + ?Sized>(mu: &[f64], rng: &mut R) -> Vec<u64> {
    mu.iter().map(|&m| poisson::sample_poisson(m, rng)).collect()
}

pub fn log_likelihood_from_mean(mu: &[f64], y: &[u64]) -> f64 {
    mu.iter()
        .zip(y)
        .map(|(&m, &k)| -m + k as f64 * m.ln() - poisson::ln_factorial(k))
        .sum()
}
