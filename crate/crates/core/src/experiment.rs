//! Experiment configuration and the drivers behind the CLI subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::affinity::{self, AffinityMatrix, ConditionReport, ColumnSubset, VolumeMode};
use crate::bounds;
use crate::channel::ChannelParams;
use crate::codebook::{self, construct_greedy, packing_radius};
use crate::error::{Error, Result};
use crate::idcodec::{estimate_errors, DecoderParams, ErrorEstimate};
use crate::linalg;
use crate::oracle::{self, BatterySizes, Fault, OracleReport};
use crate::report::fmt_num;
use crate::rng::{self, Stream};

/// How the affinity matrix of each sweep point is produced. For generated
/// matrices the sweep value sets the size: `n` for identity and Toeplitz,
/// `k` for random sparse (with `n = ceil(k^{1/κ})`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelSpec {
    Identity,
    Toeplitz { taps: Vec<f64> },
    RandomSparse { kappa: f64, l: f64, a_min: f64, a_max: f64 },
    File { path: PathBuf },
}

/// Per-index rates (`v` or `λ`) with their declared range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateSpec {
    Constant { value: f64 },
    Values { values: Vec<f64>, min: f64, max: f64 },
}

impl RateSpec {
    fn resolve(&self, name: &str, len: usize) -> Result<(Vec<f64>, (f64, f64))> {
        match self {
            RateSpec::Constant { value } => Ok((vec![*value; len], (*value, *value))),
            RateSpec::Values { values, min, max } => {
                if values.len() != len {
                    return Err(Error::invalid(format!(
                        "{name} lists {} values but the channel needs {len}",
                        values.len()
                    )));
                }
                Ok((values.clone(), (*min, *max)))
            }
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        let (vals, lo, hi) = match self {
            RateSpec::Constant { value } => (vec![*value], *value, *value),
            RateSpec::Values { values, min, max } => (values.clone(), *min, *max),
        };
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::invalid(format!("{name} range must satisfy 0 < min ≤ max")));
        }
        if let Some(v) = vals.iter().find(|&&v| !(lo <= v && v <= hi)) {
            return Err(Error::invalid(format!("{name} value {v} outside declared [{lo}, {hi}]")));
        }
        Ok(())
    }
}

/// One experiment, read from a JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub channel: ChannelSpec,
    pub v: RateSpec,
    pub lambda: RateSpec,
    pub c_avg: f64,
    pub c_max: f64,
    pub a: f64,
    pub b: f64,
    /// Fixed exponents; when absent they are estimated from each matrix.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
    pub t_sweep: Vec<usize>,
    pub trials: usize,
    pub pair_cap: usize,
    pub candidate_budget: usize,
    pub root_seed: u64,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c_avg > 0.0 && self.c_avg.is_finite()) {
            return Err(Error::invalid("c_avg must be positive"));
        }
        if self.c_avg > self.c_max {
            return Err(Error::invalid(format!(
                "c_avg ≤ c_max violated: c_avg={}, c_max={}",
                self.c_avg, self.c_max
            )));
        }
        if !(self.a > 0.0) {
            return Err(Error::invalid("packing constant a must be positive"));
        }
        if !(self.b >= 0.0) {
            return Err(Error::invalid("packing constant b must be ≥ 0"));
        }
        if self.t_sweep.is_empty() {
            return Err(Error::invalid("t_sweep must list at least one size"));
        }
        if let Some(t) = self.t_sweep.iter().find(|&&t| t < 2) {
            return Err(Error::invalid(format!("sweep values must be ≥ 2, got {t}")));
        }
        if self.trials == 0 || self.pair_cap == 0 || self.candidate_budget == 0 {
            return Err(Error::invalid("trials, pair_cap and candidate_budget must be ≥ 1"));
        }
        if let Some(k) = self.kappa {
            if !(k > 0.0 && k <= 1.0) {
                return Err(Error::invalid(format!("kappa must lie in (0, 1], got {k}")));
            }
        }
        if let Some(l) = self.l {
            if !(0.0..1.0).contains(&l) {
                return Err(Error::invalid(format!("l must lie in [0, 1), got {l}")));
            }
        }
        match &self.channel {
            ChannelSpec::Toeplitz { taps } if taps.is_empty() => {
                return Err(Error::invalid("toeplitz taps must be non-empty"))
            }
            ChannelSpec::RandomSparse { kappa, l, a_min, a_max }
                if !(*kappa > 0.0 && *kappa <= 1.0) || !(0.0..1.0).contains(l) || !(*a_min > 0.0 && a_min <= a_max) =>
            {
                return Err(Error::invalid("random_sparse needs kappa ∈ (0,1], l ∈ [0,1), 0 < a_min ≤ a_max"))
            }
            _ => {}
        }
        self.v.validate("v")?;
        self.lambda.validate("lambda")?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Read a config, or the config embedded in a run manifest.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        let cfg: ExperimentConfig = match value.get("config") {
            Some(inner) if value.get("points").is_some() => serde_json::from_value(inner.clone())?,
            _ => serde_json::from_value(value)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn build_matrix(&self, size: usize, seed: u64) -> Result<AffinityMatrix> {
        match &self.channel {
            ChannelSpec::Identity => affinity::gen_identity(size),
            ChannelSpec::Toeplitz { taps } => affinity::gen_toeplitz(taps, size),
            ChannelSpec::RandomSparse { kappa, l, a_min, a_max } => {
                let n = ((size as f64).powf(1.0 / kappa) - 1e-9).ceil() as usize;
                Ok(affinity::gen_random_sparse(size, n.max(size), *l, *a_min, *a_max, seed)?.matrix)
            }
            ChannelSpec::File { path } => {
                let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                AffinityMatrix::from_json(&text)
            }
        }
    }
}

/// Outcome of one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub sweep_value: usize,
    pub k: usize,
    pub n: usize,
    pub t: usize,
    pub kappa: f64,
    pub l: f64,
    pub epsilon_t: f64,
    pub r0: f64,
    pub psi_t: f64,
    pub m: usize,
    pub achieved_rate: f64,
    pub min_distance: Option<f64>,
    pub saturation_count: usize,
    pub saturated: bool,
    pub packing_density: Option<f64>,
    pub density_band: (f64, f64),
    pub matrix_seed: u64,
    pub codebook_seed: u64,
    pub error_seed: u64,
    pub errors: ErrorEstimate,
    #[serde(skip)]
    pub csv_row: String,
}

pub const SIMULATE_CSV_HEADER_EXTRA: &str = "pairs_evaluated,achieved_rate,min_distance,saturation_count";

pub fn simulate_csv_header() -> String {
    format!("{},{}", ErrorEstimate::CSV_HEADER, SIMULATE_CSV_HEADER_EXTRA)
}

fn exponents(cfg: &ExperimentConfig, a: &AffinityMatrix, t: usize) -> Result<(f64, f64)> {
    let estimate = || -> Result<ConditionReport> { affinity::condition_metrics(a, t) };
    let kappa = match (cfg.kappa, &cfg.channel) {
        (Some(k), _) => k,
        (None, ChannelSpec::RandomSparse { kappa, .. }) => *kappa,
        (None, ChannelSpec::Identity | ChannelSpec::Toeplitz { .. }) => 1.0,
        (None, ChannelSpec::File { .. }) => estimate()?.kappa_hat,
    };
    let l = match (cfg.l, &cfg.channel) {
        (Some(l), _) => l,
        (None, ChannelSpec::RandomSparse { l, .. }) => *l,
        (None, ChannelSpec::Identity) => 0.0,
        (None, _) => estimate()?.l_hat,
    };
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(Error::invalid(format!("estimated kappa {kappa} outside (0, 1]; set kappa explicitly")));
    }
    if !(0.0..1.0).contains(&l) {
        return Err(Error::invalid(format!("estimated l {l} outside [0, 1); set l explicitly")));
    }
    Ok((kappa, l))
}

fn run_point(cfg: &ExperimentConfig, index: usize, size: usize) -> Result<SweepPoint> {
    let point_seed = rng::derive_seed(cfg.root_seed, Stream::SweepPoint, index as u64);
    let matrix_seed = rng::derive_seed(point_seed, Stream::Matrix, 0);
    let codebook_seed = rng::derive_seed(point_seed, Stream::Codebook, 0);
    let error_seed = rng::derive_seed(point_seed, Stream::TypeOne, 0);

    let a = cfg.build_matrix(size, matrix_seed)?;
    let (v, v_range) = cfg.v.resolve("v", a.n())?;
    let (lambda, l_range) = cfg.lambda.resolve("lambda", a.k())?;
    let ch = ChannelParams::new(a, v, lambda, v_range, l_range)?;
    let red = affinity::svd_reduction(ch.abar())?;
    let t = red.t();
    if let ChannelSpec::File { .. } = cfg.channel {
        if t != size {
            return Err(Error::invalid(format!(
                "sweep value {size} does not match the rank {t} of the matrix file"
            )));
        }
    }
    if t < 2 {
        return Err(Error::invalid(format!("rank {t} too small for rate accounting (need ≥ 2)")));
    }
    let (kappa, l) = exponents(cfg, ch.affinity(), t)?;
    let pr = packing_radius(cfg.a, cfg.b, kappa, l, t)?;
    let cb = construct_greedy(&ch, &red, cfg.c_avg, cfg.c_max, pr.r0, cfg.candidate_budget, codebook_seed)?;
    let dp = DecoderParams::new(cfg.a, cfg.b, kappa, l, &red)?;
    let errors = estimate_errors(&cb, &ch, &dp, cfg.trials, error_seed, cfg.pair_cap)?;
    let min_distance = codebook::min_distance_reduced(&cb).ok();
    let achieved_rate = codebook::achieved_rate(cb.m(), t)?;
    let packing_density = if linalg::binomial(ch.n(), t) <= affinity::EXHAUSTIVE_LIMIT {
        let vol = affinity::zonotope_volume(ch.abar(), t, cfg.c_avg, VolumeMode::Exhaustive)?;
        Some(codebook::packing_density(&cb, vol))
    } else {
        None
    };
    let csv_row = format!(
        "{},{},{},{},{}",
        errors.csv_row(&dp, cb.m()),
        errors.pairs_evaluated,
        fmt_num(achieved_rate),
        min_distance.map(fmt_num).unwrap_or_default(),
        cb.saturation_count()
    );
    Ok(SweepPoint {
        sweep_value: size,
        k: ch.k(),
        n: ch.n(),
        t,
        kappa,
        l,
        epsilon_t: pr.epsilon_t,
        r0: pr.r0,
        psi_t: dp.psi_t,
        m: cb.m(),
        achieved_rate,
        min_distance,
        saturation_count: cb.saturation_count(),
        saturated: cb.saturated(),
        packing_density,
        density_band: bounds::density_bounds(t)?,
        matrix_seed,
        codebook_seed,
        error_seed,
        errors,
        csv_row,
    })
}

/// Replay manifest written next to the CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub points: Vec<SweepPoint>,
}

pub struct SimulateOutput {
    pub csv: String,
    pub manifest: Manifest,
}

/// Run every sweep point (concurrently; rows stay in sweep order).
pub fn simulate(cfg: &ExperimentConfig) -> Result<SimulateOutput> {
    cfg.validate()?;
    let points: Vec<SweepPoint> = cfg
        .t_sweep
        .par_iter()
        .enumerate()
        .map(|(i, &size)| run_point(cfg, i, size))
        .collect::<Result<_>>()?;
    let mut csv = simulate_csv_header();
    csv.push('\n');
    for p in &points {
        csv.push_str(&p.csv_row);
        csv.push('\n');
    }
    Ok(SimulateOutput {
        csv,
        manifest: Manifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config: cfg.clone(),
            points,
        },
    })
}

pub const SIMULATE_CSV: &str = "simulate.csv";
pub const MANIFEST_JSON: &str = "manifest.json";

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Run a simulation and write `simulate.csv` and `manifest.json` to `out_dir`.
pub fn run_simulate(cfg: &ExperimentConfig, out_dir: &Path) -> Result<SimulateOutput> {
    let out = simulate(cfg)?;
    ensure_dir(out_dir)?;
    write(&out_dir.join(SIMULATE_CSV), &out.csv)?;
    let manifest = serde_json::to_string_pretty(&out.manifest)? + "\n";
    write(&out_dir.join(MANIFEST_JSON), &manifest)?;
    Ok(out)
}

/// Evaluate the capacity bounds on a grid and write the CSV to `out`.
pub fn run_bounds(kappa_grid: &[f64], l_grid: &[f64], out: Option<&Path>) -> Result<String> {
    let csv = bounds::bounds_grid_csv(kappa_grid, l_grid)?;
    if let Some(path) = out {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            ensure_dir(parent)?;
        }
        write(path, &csv)?;
    }
    Ok(csv)
}

pub const VERIFY_JSON: &str = "verify.json";

/// Run the oracle battery; writes `verify.json` into `out_dir` when given.
pub fn run_verify(seed: u64, out_dir: Option<&Path>, sizes: BatterySizes, fault: Fault) -> Result<Vec<OracleReport>> {
    let reports = oracle::run_battery(seed, sizes, fault)?;
    if let Some(dir) = out_dir {
        ensure_dir(dir)?;
        write(&dir.join(VERIFY_JSON), &(serde_json::to_string_pretty(&reports)? + "\n"))?;
    }
    Ok(reports)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolumeModeUsed {
    Exhaustive,
    MonteCarloSubsets,
}

/// Matrix analysis printed by `analyze`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyzeReport {
    pub k: usize,
    pub n: usize,
    pub rank: usize,
    pub t: usize,
    pub singular_values: Vec<f64>,
    pub independent_rows: Vec<usize>,
    pub conditions: Option<ConditionReport>,
    pub best_subset: ColumnSubset,
    pub zonotope_volume: Option<f64>,
    pub volume_mode: Option<VolumeModeUsed>,
}

/// Subsets drawn when the exhaustive zonotope sum is too large.
pub const ANALYZE_SUBSET_SAMPLES: usize = 100_000;

pub fn run_analyze(matrix_file: &Path, t_override: Option<usize>) -> Result<AnalyzeReport> {
    let text = fs::read_to_string(matrix_file).map_err(|e| Error::io(matrix_file, e))?;
    let a = AffinityMatrix::from_json(&text)?;
    analyze(&a, t_override)
}

pub fn analyze(a: &AffinityMatrix, t_override: Option<usize>) -> Result<AnalyzeReport> {
    let red = affinity::svd_reduction(a.entries())?;
    let rank = red.t();
    let t = t_override.unwrap_or(rank);
    if t > rank {
        return Err(Error::invalid(format!(
            "requested t = {t} exceeds the matrix rank {rank}"
        )));
    }
    if t == 0 {
        return Err(Error::invalid("t must be ≥ 1"));
    }
    let conditions = if a.k() >= 2 && a.n() >= 2 {
        Some(affinity::condition_metrics(a, t)?)
    } else {
        None
    };
    let best_subset = affinity::best_column_subset(a.entries(), t, affinity::auto_subset_mode(a.n(), t))?;
    let (zonotope_volume, volume_mode) = if t == rank {
        if linalg::binomial(a.n(), t) <= affinity::EXHAUSTIVE_LIMIT {
            (
                Some(affinity::zonotope_volume(a.entries(), t, 1.0, VolumeMode::Exhaustive)?),
                Some(VolumeModeUsed::Exhaustive),
            )
        } else {
            let mode = VolumeMode::MonteCarloSubsets {
                samples: ANALYZE_SUBSET_SAMPLES,
                seed: 0,
            };
            (
                Some(affinity::zonotope_volume(a.entries(), t, 1.0, mode)?),
                Some(VolumeModeUsed::MonteCarloSubsets),
            )
        }
    } else {
        (None, None)
    };
    Ok(AnalyzeReport {
        k: a.k(),
        n: a.n(),
        rank,
        t,
        singular_values: red.singular_values().to_vec(),
        independent_rows: red.independent_rows().to_vec(),
        conditions,
        best_subset,
        zonotope_volume,
        volume_mode,
    })
}
