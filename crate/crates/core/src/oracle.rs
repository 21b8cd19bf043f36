//! Independent brute-force and Monte Carlo checks of the closed forms used
//! elsewhere in the crate.
//!
//! Each check produces an [`OracleReport`]; [`run_battery`] runs the full set
//! and the battery passes iff every report passes.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::affinity::{self, svd_reduction, ReductionMap, VolumeMode};
use crate::bounds;
use crate::channel::{log_likelihood_from_mean, ChannelParams};
use crate::codebook::{self, construct_greedy, packing_radius, Codebook};
use crate::error::{Error, Result};
use crate::idcodec::{centering_statistics, DecoderParams};
use crate::linalg;
use crate::poisson::sample_poisson;
use crate::rng::{self, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToleranceKind {
    Absolute,
    Relative,
    /// `oracle_value ≤ closed_form_value + tolerance` (bounds, violation counts).
    UpperBound,
    /// `oracle_value ≥ closed_form_value − tolerance`.
    LowerBound,
    /// Reported for information; always passes.
    Diagnostic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub name: String,
    pub closed_form_value: f64,
    pub oracle_value: f64,
    pub tolerance: f64,
    pub tolerance_kind: ToleranceKind,
    pub pass: bool,
    pub samples_or_cases: u64,
}

impl OracleReport {
    pub fn new(
        name: impl Into<String>,
        closed_form_value: f64,
        oracle_value: f64,
        tolerance: f64,
        tolerance_kind: ToleranceKind,
        samples_or_cases: u64,
    ) -> Self {
        let diff = (closed_form_value - oracle_value).abs();
        let pass = match tolerance_kind {
            ToleranceKind::Absolute => diff <= tolerance,
            ToleranceKind::Relative => diff <= tolerance * closed_form_value.abs(),
            ToleranceKind::UpperBound => oracle_value <= closed_form_value + tolerance,
            ToleranceKind::LowerBound => oracle_value >= closed_form_value - tolerance,
            ToleranceKind::Diagnostic => true,
        };
        OracleReport {
            name: name.into(),
            closed_form_value,
            oracle_value,
            tolerance,
            tolerance_kind,
            pass,
            samples_or_cases,
        }
    }
}

/// `λ⁴ + 6λ³ + 7λ² + λ`, the fourth derivative at zero of the Poisson moment
/// generating function `exp(λ(e^φ − 1))`, i.e. the raw moment `E[X⁴]`.
pub fn poisson_moment4_exact(lam: f64) -> f64 {
    lam.powi(4) + 6.0 * lam.powi(3) + 7.0 * lam.powi(2) + lam
}

/// Fourth central moment `E[(X − λ)⁴] = 3λ² + λ`.
pub fn poisson_central_moment4_exact(lam: f64) -> f64 {
    3.0 * lam * lam + lam
}

/// `7(λ⁴ + λ³ + λ² + λ)`.
pub fn poisson_moment4_bound(lam: f64) -> f64 {
    7.0 * (lam.powi(4) + lam.powi(3) + lam.powi(2) + lam)
}

/// Monte Carlo estimates of the raw and central fourth moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moment4Estimate {
    pub raw: f64,
    pub raw_stderr: f64,
    pub central: f64,
    pub central_stderr: f64,
}

fn mean_and_stderr(sum: f64, sum_sq: f64, n: f64) -> (f64, f64) {
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    (mean, (var / n).sqrt())
}

pub fn poisson_moment4_mc<R: Rng + ?Sized>(lam: f64, samples: usize, rng: &mut R) -> Result<Moment4Estimate> {
    if !(lam > 0.0) {
        return Err(Error::invalid("Poisson mean must be positive"));
    }
    if samples < 10_000 {
        return Err(Error::invalid("moment oracle needs at least 10^4 samples"));
    }
    let (mut s_raw, mut q_raw, mut s_c, mut q_c) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..samples {
        let x = sample_poisson(lam, rng) as f64;
        let raw = x.powi(4);
        let central = (x - lam).powi(4);
        s_raw += raw;
        q_raw += raw * raw;
        s_c += central;
        q_c += central * central;
    }
    let n = samples as f64;
    let (raw, raw_stderr) = mean_and_stderr(s_raw, q_raw, n);
    let (central, central_stderr) = mean_and_stderr(s_c, q_c, n);
    Ok(Moment4Estimate {
        raw,
        raw_stderr,
        central,
        central_stderr,
    })
}

/// Grid-occupancy volume estimate of the reduced image of `[0, c_avg]^N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub estimate: f64,
    /// Volume of occupied cells touching an empty cell; a bound on the
    /// discretization error used in place of a standard error.
    pub surface_band: f64,
    pub occupied_cells: u64,
    pub cell_size: f64,
}

/// Grid cells per bounding-box diagonal.
pub const GRID_RESOLUTION: f64 = 512.0;

struct Grid {
    lo: Vec<f64>,
    h: f64,
    dims: Vec<usize>,
    bits: Vec<u64>,
}

impl Grid {
    fn cell(&self, p: &[f64]) -> Option<usize> {
        let mut idx = 0usize;
        for d in (0..p.len()).rev() {
            let c = ((p[d] - self.lo[d]) / self.h).floor();
            if c < 0.0 || c as usize >= self.dims[d] {
                return None;
            }
            idx = idx * self.dims[d] + c as usize;
        }
        Some(idx)
    }

    fn get(&self, i: usize) -> bool {
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    fn set(&mut self, i: usize) {
        self.bits[i / 64] |= 1 << (i % 64);
    }

    fn coords(&self, mut i: usize) -> Vec<usize> {
        self.dims
            .iter()
            .map(|&d| {
                let c = i % d;
                i /= d;
                c
            })
            .collect()
    }

    fn index(&self, coords: &[usize]) -> usize {
        coords.iter().zip(&self.dims).rev().fold(0, |acc, (&c, &d)| acc * d + c)
    }
}

/// Monte Carlo volume of the reduced zonotope for `T ≤ 3`.
///
/// Points of `[0, c_avg]^N` are mapped to the reduced space and marked in a
/// grid of cell size `diag/512` over their bounding box; a second batch of
/// uniform box points then measures the occupied fraction of the box. No
/// convexity is assumed. Input coordinates follow the arcsine law rather
/// than the uniform one: only coverage matters here, and uniform inputs
/// almost never reach the cells near the zonotope's vertices.
pub fn zonotope_volume_mc<R: Rng + ?Sized>(
    abar: &DMatrix<f64>,
    red: &ReductionMap,
    c_avg: f64,
    samples: usize,
    rng: &mut R,
) -> Result<VolumeEstimate> {
    let t = red.t();
    if t > 3 {
        return Err(Error::invalid(format!("grid volume oracle supports T ≤ 3, got T = {t}")));
    }
    if samples < 100_000 {
        return Err(Error::invalid("volume oracle needs at least 10^5 samples"));
    }
    if red.u_t().nrows() != abar.nrows() {
        return Err(Error::dims("reduction map does not match the matrix"));
    }
    let n = abar.ncols();
    let k = abar.nrows();
    let image = |rng: &mut R| {
        let c: Vec<f64> = (0..n)
            .map(|_| c_avg * (std::f64::consts::FRAC_PI_2 * rng.gen::<f64>()).sin().powi(2))
            .collect();
        let a: Vec<f64> = (0..k).map(|r| (0..n).map(|j| abar[(r, j)] * c[j]).sum()).collect();
        red.project(&a)
    };
    let points: Vec<Vec<f64>> = (0..samples).map(|_| image(rng)).collect();
    let mut lo = vec![f64::INFINITY; t];
    let mut hi = vec![f64::NEG_INFINITY; t];
    for p in &points {
        for d in 0..t {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    let diag = lo.iter().zip(&hi).map(|(l, h)| (h - l).powi(2)).sum::<f64>().sqrt();
    if !(diag > 0.0) {
        return Err(Error::Numerical("degenerate image bounding box".into()));
    }
    let h = diag / GRID_RESOLUTION;
    let dims: Vec<usize> = lo.iter().zip(&hi).map(|(l, u)| (((u - l) / h).ceil() as usize).max(1)).collect();
    let total: usize = dims.iter().product();
    let mut grid = Grid {
        lo: lo.clone(),
        h,
        dims: dims.clone(),
        bits: vec![0; total.div_ceil(64)],
    };
    for p in &points {
        if let Some(i) = grid.cell(p) {
            grid.set(i);
        }
    }
    drop(points);

    let box_volume: f64 = dims.iter().map(|&d| d as f64 * h).product();
    let mut hits = 0u64;
    for _ in 0..samples {
        let p: Vec<f64> = (0..t).map(|d| lo[d] + dims[d] as f64 * h * rng.gen::<f64>()).collect();
        if grid.cell(&p).is_some_and(|i| grid.get(i)) {
            hits += 1;
        }
    }

    let mut occupied = 0u64;
    let mut surface = 0u64;
    for i in 0..total {
        if !grid.get(i) {
            continue;
        }
        occupied += 1;
        let c = grid.coords(i);
        let on_surface = (0..t).any(|d| {
            [-1i64, 1].iter().any(|&s| {
                let nd = c[d] as i64 + s;
                if nd < 0 || nd as usize >= dims[d] {
                    return true;
                }
                let mut nc = c.clone();
                nc[d] = nd as usize;
                !grid.get(grid.index(&nc))
            })
        });
        if on_surface {
            surface += 1;
        }
    }
    let cell_volume = h.powi(t as i32);
    Ok(VolumeEstimate {
        estimate: box_volume * hits as f64 / samples as f64,
        surface_band: surface as f64 * cell_volume,
        occupied_cells: occupied,
        cell_size: h,
    })
}

/// Ordered pairs `(i₁, i₂)` with some `k` where `|1 − d_k^{i₂}/d_k^{i₁}| > θ`,
/// `d_k^i = c̄_k^i + λ_k`. Returns `(satisfying, total)`.
pub fn converse_pairwise_report(cb: &Codebook, ch: &ChannelParams, theta_t: f64) -> Result<(u64, u64)> {
    if cb.m() < 2 {
        return Err(Error::TooFewCodewords);
    }
    let shifted: Vec<Vec<f64>> = cb
        .affine()
        .iter()
        .map(|row| row.iter().zip(ch.lambda()).map(|(a, l)| a + l).collect())
        .collect();
    let (mut sat, mut total) = (0u64, 0u64);
    for (i1, d1) in shifted.iter().enumerate() {
        for (i2, d2) in shifted.iter().enumerate() {
            if i1 == i2 {
                continue;
            }
            total += 1;
            if d1.iter().zip(d2).any(|(a, b)| (1.0 - b / a).abs() > theta_t) {
                sat += 1;
            }
        }
    }
    Ok((sat, total))
}

/// Statistics of leading `t×t` submatrices of random `k×k` orthogonal matrices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitarySubmatrixReport {
    pub trials: u64,
    pub min_sv_mean: f64,
    pub min_sv_min: f64,
    pub max_sv_max: f64,
    /// Trials with more than `k − t` singular values below `1 − 1e-9`.
    pub count_violations: u64,
    /// Trials with a singular value above `1 + 1e-9`.
    pub norm_violations: u64,
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the signs
/// of `R`'s diagonal folded into `Q`.
pub fn random_orthogonal<R: Rng + ?Sized>(k: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(k, k, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for c in 0..k {
        if r[(c, c)] < 0.0 {
            q.column_mut(c).neg_mut();
        }
    }
    q
}

pub fn unitary_submatrix_sv_report<R: Rng + ?Sized>(
    k: usize,
    t: usize,
    trials: usize,
    rng: &mut R,
) -> Result<UnitarySubmatrixReport> {
    if t == 0 || t > k {
        return Err(Error::invalid(format!("submatrix size must satisfy 1 ≤ t ≤ k, got t={t}, k={k}")));
    }
    if trials == 0 {
        return Err(Error::invalid("trials must be ≥ 1"));
    }
    let mut rep = UnitarySubmatrixReport {
        trials: trials as u64,
        min_sv_mean: 0.0,
        min_sv_min: f64::INFINITY,
        max_sv_max: 0.0,
        count_violations: 0,
        norm_violations: 0,
    };
    for _ in 0..trials {
        let q = random_orthogonal(k, rng);
        let sub = q.view((0, 0), (t, t)).into_owned();
        let sv = linalg::singular_values(&sub);
        let smin = *sv.last().expect("t ≥ 1");
        rep.min_sv_mean += smin;
        rep.min_sv_min = rep.min_sv_min.min(smin);
        rep.max_sv_max = rep.max_sv_max.max(sv[0]);
        if sv.iter().filter(|&&s| s < 1.0 - 1e-9).count() > k - t {
            rep.count_violations += 1;
        }
        if sv[0] > 1.0 + 1e-9 {
            rep.norm_violations += 1;
        }
    }
    rep.min_sv_mean /= trials as f64;
    Ok(rep)
}

/// Brute-force sizes of maximal `sep`-separated subsets of a grid on
/// `[0, length]` with `steps` intervals. Returns `(smallest maximal, largest)`.
pub fn interval_packing_sizes(length: f64, sep: f64, steps: usize) -> (usize, usize) {
    let pts: Vec<f64> = (0..=steps).map(|i| length * i as f64 / steps as f64).collect();
    let tol = 1e-12 * length;
    // DFS over increasing point sets; leaves that admit no further point are maximal
    fn dfs(pts: &[f64], sep: f64, tol: f64, chosen: &mut Vec<f64>, start: usize, out: &mut (usize, usize)) {
        let admissible = |x: f64, ch: &[f64]| ch.iter().all(|&c| (x - c).abs() >= sep - tol);
        let mut extended = false;
        for i in start..pts.len() {
            if admissible(pts[i], chosen) {
                extended = true;
                chosen.push(pts[i]);
                dfs(pts, sep, tol, chosen, i + 1, out);
                chosen.pop();
            }
        }
        if !extended && pts.iter().all(|&p| !admissible(p, chosen)) {
            out.0 = out.0.min(chosen.len());
            out.1 = out.1.max(chosen.len());
        }
    }
    let mut out = (usize::MAX, 0);
    dfs(&pts, sep, tol, &mut Vec::new(), 0, &mut out);
    out
}

fn gaussian_matrix<R: Rng + ?Sized>(r: usize, c: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Hadamard inequality on random square matrices plus the equality case on
/// matrices with orthogonal columns. Returns the violation count.
pub fn hadamard_property(cases: usize, seed: u64) -> u64 {
    let mut r = rng::stream_rng(seed, Stream::Oracle, 2);
    let mut violations = 0;
    for case in 0..cases {
        let d = 2 + case % 7;
        let m = gaussian_matrix(d, d, &mut r);
        let bound = affinity::hadamard_bound(&m).expect("square");
        if m.determinant().abs() > bound * (1.0 + 1e-9) + 1e-9 {
            violations += 1;
        }
        let scales = DVector::from_fn(d, |_, _| 0.1 + 3.0 * r.gen::<f64>());
        let ortho = random_orthogonal(d, &mut r) * DMatrix::from_diagonal(&scales);
        let b = affinity::hadamard_bound(&ortho).expect("square");
        if (ortho.determinant().abs() - b).abs() > 1e-9 * b {
            violations += 1;
        }
    }
    violations
}

/// `‖B x‖ ≥ σ_min(B) ‖x‖ − 1e-9` on random pairs. Returns the violation count.
pub fn gain_property(cases: usize, seed: u64) -> u64 {
    let mut r = rng::stream_rng(seed, Stream::Oracle, 5);
    let mut violations = 0;
    for case in 0..cases {
        let d = 2 + case % 7;
        let b = gaussian_matrix(d, d, &mut r);
        let x = gaussian_matrix(d, 1, &mut r);
        let Ok(g) = affinity::min_gain(&b) else { continue };
        if (&b * &x).norm() < g * x.norm() - 1e-9 {
            violations += 1;
        }
    }
    violations
}

/// Largest relative disagreement between affine and reduced pairwise
/// distances over random low-rank matrices and codeword pairs.
pub fn isometry_property(cases: usize, seed: u64) -> f64 {
    let mut r = rng::stream_rng(seed, Stream::Oracle, 8);
    let mut worst: f64 = 0.0;
    for case in 0..cases {
        let k = 2 + case % 5;
        let n = 2 + (case / 5) % 6;
        let rank = 1 + case % k.min(n);
        let left = DMatrix::from_fn(k, rank, |_, _| r.gen::<f64>());
        let right = DMatrix::from_fn(rank, n, |_, _| r.gen::<f64>());
        let abar = left * right;
        let red = svd_reduction(&abar).expect("non-zero");
        let c1 = DVector::from_fn(n, |_, _| 5.0 * r.gen::<f64>());
        let c2 = DVector::from_fn(n, |_, _| 5.0 * r.gen::<f64>());
        let a1: Vec<f64> = (&abar * c1).iter().copied().collect();
        let a2: Vec<f64> = (&abar * c2).iter().copied().collect();
        let full = linalg::distance(&a1, &a2);
        let reduced = linalg::distance(&red.project(&a1), &red.project(&a2));
        worst = worst.max((full - reduced).abs() / full);
    }
    worst
}

/// The fixed volume battery: `(name, matrix)` with `K ≤ 4`, `N ≤ 5`, `T ≤ 2`.
pub fn volume_battery() -> Vec<(&'static str, DMatrix<f64>)> {
    vec![
        ("identity_2x2", DMatrix::identity(2, 2)),
        ("hexagon_2x3", DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0])),
        (
            "rank2_3x4",
            DMatrix::from_row_slice(3, 4, &[1.0, 0.5, 0.0, 1.0, 0.0, 1.0, 1.0, 0.5, 1.0, 1.5, 1.0, 1.5]),
        ),
        (
            "rank2_4x5",
            DMatrix::from_row_slice(
                4,
                5,
                &[
                    1.0, 0.0, 2.0, 0.5, 1.0, //
                    0.0, 1.0, 0.5, 1.0, 0.3, //
                    1.0, 2.0, 3.0, 2.5, 1.6, //
                    0.5, 0.0, 1.0, 0.25, 0.5,
                ],
            ),
        ),
        ("rank1_2x3", DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 0.5, 2.0, 4.0, 1.0])),
    ]
}

/// Fault injection for exercising the failure path of the battery.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fault {
    #[default]
    None,
    /// Perturb the fourth-moment closed form by +1.
    CorruptClosedForm,
}

/// Sample sizes for the battery.
#[derive(Debug, Clone, Copy)]
pub struct BatterySizes {
    pub moment_samples: usize,
    pub volume_samples: usize,
    pub property_cases: usize,
    pub unitary_trials: usize,
    pub centering_trials: usize,
}

impl Default for BatterySizes {
    fn default() -> Self {
        BatterySizes {
            moment_samples: 1_000_000,
            volume_samples: 4_000_000,
            property_cases: 1000,
            unitary_trials: 1000,
            centering_trials: 100_000,
        }
    }
}

pub fn moment_reports(lams: &[f64], samples: usize, seed: u64, fault: Fault) -> Result<Vec<OracleReport>> {
    let mut out = Vec::new();
    for (i, &lam) in lams.iter().enumerate() {
        let mut r = rng::stream_rng(seed, Stream::Oracle, 100 + i as u64);
        let est = poisson_moment4_mc(lam, samples, &mut r)?;
        let mut closed = poisson_moment4_exact(lam);
        if fault == Fault::CorruptClosedForm {
            closed += 1.0;
        }
        out.push(OracleReport::new(
            format!("poisson_raw_moment4[lambda={lam}]"),
            closed,
            est.raw,
            4.0 * est.raw_stderr,
            ToleranceKind::Absolute,
            samples as u64,
        ));
        out.push(OracleReport::new(
            format!("poisson_central_moment4[lambda={lam}]"),
            poisson_central_moment4_exact(lam),
            est.central,
            4.0 * est.central_stderr,
            ToleranceKind::Absolute,
            samples as u64,
        ));
    }
    Ok(out)
}

pub fn moment_bound_reports(lams: &[f64]) -> Vec<OracleReport> {
    lams.iter()
        .flat_map(|&lam| {
            let bound = poisson_moment4_bound(lam);
            let strict = |name: String, value: f64| {
                let mut r = OracleReport::new(name, bound, value, 0.0, ToleranceKind::UpperBound, 1);
                r.pass = value < bound;
                r
            };
            [
                strict(format!("poisson_moment4_bound_raw[lambda={lam}]"), poisson_moment4_exact(lam)),
                strict(format!("poisson_moment4_bound_central[lambda={lam}]"), poisson_central_moment4_exact(lam)),
            ]
        })
        .collect()
}

pub fn volume_reports(samples: usize, seed: u64) -> Result<Vec<OracleReport>> {
    let mut out = Vec::new();
    for (i, (name, m)) in volume_battery().into_iter().enumerate() {
        let red = svd_reduction(&m)?;
        let exact = affinity::zonotope_volume(&m, red.t(), 1.0, VolumeMode::Exhaustive)?;
        let mut r = rng::stream_rng(seed, Stream::Oracle, 200 + i as u64);
        let mc = zonotope_volume_mc(&m, &red, 1.0, samples, &mut r)?;
        out.push(OracleReport::new(
            format!("zonotope_volume[{name}]"),
            exact,
            mc.estimate,
            0.03,
            ToleranceKind::Relative,
            samples as u64,
        ));
    }
    Ok(out)
}

pub fn unitary_reports(trials: usize, seed: u64) -> Result<Vec<OracleReport>> {
    let mut r = rng::stream_rng(seed, Stream::Oracle, 300);
    let mut count_viol = 0;
    let mut norm_viol = 0;
    let mut cases = 0u64;
    let mut min_sv: f64 = f64::INFINITY;
    let per_config = trials.div_ceil(20).max(1);
    let mut done = 0;
    'outer: for k in 4..=8 {
        for t in 1..k {
            let rep = unitary_submatrix_sv_report(k, t, per_config.min(trials - done), &mut r)?;
            count_viol += rep.count_violations;
            norm_viol += rep.norm_violations;
            cases += rep.trials;
            min_sv = min_sv.min(rep.min_sv_min);
            done += rep.trials as usize;
            if done >= trials {
                break 'outer;
            }
        }
    }
    Ok(vec![
        OracleReport::new("orthogonal_submatrix_count_below_one", 0.0, count_viol as f64, 0.0, ToleranceKind::UpperBound, cases),
        OracleReport::new("orthogonal_submatrix_norm_at_most_one", 0.0, norm_viol as f64, 0.0, ToleranceKind::UpperBound, cases),
        OracleReport::new("orthogonal_submatrix_min_singular_value", 1.0, min_sv, 0.0, ToleranceKind::Diagnostic, cases),
    ])
}

/// Identity-channel codebook used by the packing and decoder oracles.
pub fn identity_fixture(n: usize, c_avg: f64, lambda: f64, budget: usize, seed: u64) -> Result<(ChannelParams, ReductionMap, Codebook, DecoderParams)> {
    let ch = ChannelParams::uniform(affinity::gen_identity(n)?, 1.0, lambda)?;
    let red = svd_reduction(ch.abar())?;
    let pr = packing_radius(1.0, 0.4, 1.0, 0.0, red.t())?;
    let cb = construct_greedy(&ch, &red, c_avg, c_avg, pr.r0, budget, seed)?;
    let dp = DecoderParams::new(1.0, 0.4, 1.0, 0.0, &red)?;
    Ok((ch, red, cb, dp))
}

/// Run every oracle and return the reports.
pub fn run_battery(seed: u64, sizes: BatterySizes, fault: Fault) -> Result<Vec<OracleReport>> {
    let mut reports = Vec::new();

    let c1 = bounds::capacity_bounds(1.0, 0.0)?;
    reports.push(OracleReport::new("bounds_lower[kappa=1,l=0]", 0.25, c1.lower, 1e-12, ToleranceKind::Absolute, 1));
    reports.push(OracleReport::new("bounds_upper[kappa=1,l=0]", 1.5, c1.upper, 1e-12, ToleranceKind::Absolute, 1));
    for l in [0.05, 0.1, 0.2] {
        let b = bounds::capacity_bounds(1.0, l)?;
        reports.push(OracleReport::new(format!("bounds_lower[kappa=1,l={l}]"), 0.25 - l, b.lower, 1e-12, ToleranceKind::Absolute, 1));
        reports.push(OracleReport::new(format!("bounds_upper[kappa=1,l={l}]"), 1.5 + l, b.upper, 1e-12, ToleranceKind::Absolute, 1));
    }

    reports.extend(moment_reports(&[0.5, 1.0, 5.0], sizes.moment_samples, seed, fault)?);
    reports.extend(moment_bound_reports(&[0.1, 0.5, 1.0, 2.0, 5.0, 10.0]));
    reports.extend(volume_reports(sizes.volume_samples, seed)?);

    reports.push(OracleReport::new(
        "hadamard_violations",
        0.0,
        hadamard_property(sizes.property_cases, seed) as f64,
        0.0,
        ToleranceKind::UpperBound,
        2 * sizes.property_cases as u64,
    ));
    reports.push(OracleReport::new(
        "gain_violations",
        0.0,
        gain_property(sizes.property_cases, seed) as f64,
        0.0,
        ToleranceKind::UpperBound,
        sizes.property_cases as u64,
    ));
    reports.push(OracleReport::new(
        "reduction_isometry_max_rel_error",
        0.0,
        isometry_property(100, seed),
        1e-9,
        ToleranceKind::UpperBound,
        100,
    ));
    reports.extend(unitary_reports(sizes.unitary_trials, seed)?);

    // packing and decoder checks on an identity channel, T = 16
    let (ch, red, cb, dp) = identity_fixture(16, 10.0, 1.0, 5000, rng::derive_seed(seed, Stream::Oracle, 400))?;
    let pr = packing_radius(1.0, 0.4, 1.0, 0.0, red.t())?;
    if cb.m() >= 2 {
        let dmin = codebook::min_distance_reduced(&cb)?;
        reports.push(OracleReport::new(
            "reduced_min_sq_distance",
            4.0 * red.t() as f64 * pr.epsilon_t,
            dmin * dmin,
            0.0,
            ToleranceKind::LowerBound,
            (cb.m() * (cb.m() - 1) / 2) as u64,
        ));

        let theta = bounds::converse_threshold(cb.c_max(), 1.0, 0.0, 0.4, red.t())?;
        let (sat, total) = converse_pairwise_report(&cb, &ch, theta)?;
        reports.push(OracleReport::new(
            "converse_pairwise_fraction",
            1.0,
            sat as f64 / total as f64,
            0.0,
            ToleranceKind::Diagnostic,
            total,
        ));
    }
    for message in 0..cb.m().min(5) {
        let (mean, se) = centering_statistics(&cb, &ch, &dp, message, sizes.centering_trials, seed)?;
        reports.push(OracleReport::new(
            format!("decoder_centering[message={message}]"),
            0.0,
            mean,
            4.0 * se,
            ToleranceKind::Absolute,
            sizes.centering_trials as u64,
        ));
    }

    let mut r = rng::stream_rng(seed, Stream::Oracle, 500);
    let n = sizes.moment_samples;
    let (s, q) = (0..n).fold((0.0, 0.0), |(s, q), _| {
        let x = sample_poisson(3.0, &mut r) as f64;
        (s + x, q + x * x)
    });
    let mean = s / n as f64;
    let var = (q - n as f64 * mean * mean) / (n as f64 - 1.0);
    reports.push(OracleReport::new("poisson_sampler_mean[mu=3]", 3.0, mean, 3.0 * (3.0 / n as f64).sqrt(), ToleranceKind::Absolute, n as u64));
    reports.push(OracleReport::new("poisson_sampler_variance[mu=3]", 3.0, var, 0.05, ToleranceKind::Absolute, n as u64));

    let worst_mass = [0.5, 3.0, 20.0]
        .iter()
        .map(|&mu| {
            let total: f64 = (0..=200u64).map(|y| log_likelihood_from_mean(&[mu], &[y]).exp()).sum();
            (total - 1.0).abs()
        })
        .fold(0.0, f64::max);
    reports.push(OracleReport::new("poisson_pmf_normalization", 0.0, worst_mass, 1e-9, ToleranceKind::UpperBound, 3));

    let (small, large) = interval_packing_sizes(1.0, 0.5, 20);
    reports.push(OracleReport::new("interval_packing_largest", 3.0, large as f64, 0.0, ToleranceKind::Absolute, 1));
    reports.push(OracleReport::new("interval_packing_smallest_maximal", 2.0, small as f64, 0.0, ToleranceKind::Diagnostic, 1));

    Ok(reports)
}

/// Plain-text table of reports.
pub fn render_table(reports: &[OracleReport]) -> String {
    use crate::report::fmt_num;
    let width = reports.iter().map(|r| r.name.len()).max().unwrap_or(4).max(4);
    let mut out = format!("{:<width$}  {:>16}  {:>16}  {:>12}  {:<12}  {}\n", "name", "closed_form", "oracle", "tolerance", "kind", "result");
    for r in reports {
        out.push_str(&format!(
            "{:<width$}  {:>16}  {:>16}  {:>12}  {:<12}  {}\n",
            r.name,
            fmt_num(r.closed_form_value),
            fmt_num(r.oracle_value),
            fmt_num(r.tolerance),
            format!("{:?}", r.tolerance_kind).to_lowercase(),
            if r.pass { "PASS" } else { "FAIL" }
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        assert_eq!(poisson_moment4_exact(1.0), 15.0);
        assert_eq!(poisson_moment4_exact(2.0), 94.0);
        assert_eq!(poisson_moment4_bound(1.0), 28.0);
        assert_eq!(poisson_moment4_exact(5.0), 1555.0);
        assert_eq!(poisson_central_moment4_exact(1.0), 4.0);
    }

    #[test]
    fn moment_mc_is_deterministic() {
        let a = poisson_moment4_mc(1.0, 20_000, &mut rng::seeded(4)).unwrap();
        let b = poisson_moment4_mc(1.0, 20_000, &mut rng::seeded(4)).unwrap();
        assert_eq!(a, b);
        assert!(poisson_moment4_mc(1.0, 100, &mut rng::seeded(4)).is_err());
    }

    #[test]
    fn volume_mc_examples() {
        let id = DMatrix::identity(2, 2);
        let red = svd_reduction(&id).unwrap();
        let v = zonotope_volume_mc(&id, &red, 1.0, 1_000_000, &mut rng::seeded(1)).unwrap();
        assert!((v.estimate - 1.0).abs() < 0.03, "{v:?}");
        let v2 = zonotope_volume_mc(&id, &red, 2.0, 1_000_000, &mut rng::seeded(1)).unwrap();
        assert!((v2.estimate / v.estimate - 4.0).abs() < 0.12, "{v2:?}");

        let hex = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0]);
        let red = svd_reduction(&hex).unwrap();
        let v = zonotope_volume_mc(&hex, &red, 1.0, 4_000_000, &mut rng::seeded(2)).unwrap();
        assert!((v.estimate - 3.0).abs() < 0.09, "{v:?}");

        let four = DMatrix::<f64>::identity(4, 4);
        let red4 = svd_reduction(&four).unwrap();
        assert!(zonotope_volume_mc(&four, &red4, 1.0, 100_000, &mut rng::seeded(1)).is_err());
        assert!(zonotope_volume_mc(&id, &svd_reduction(&id).unwrap(), 1.0, 10, &mut rng::seeded(1)).is_err());
    }

    #[test]
    fn converse_pair_examples() {
        let ch = ChannelParams::uniform(affinity::gen_identity(1).unwrap(), 1.0, 1.0).unwrap();
        let red = svd_reduction(ch.abar()).unwrap();
        let same = Codebook::from_codewords(&ch, &red, vec![vec![0.5], vec![0.5]], 0.1, 4.0, 4.0).unwrap();
        assert_eq!(converse_pairwise_report(&same, &ch, 0.1).unwrap(), (0, 2));
        // d¹ = 2, d² = 4
        let pair = Codebook::from_codewords(&ch, &red, vec![vec![1.0], vec![3.0]], 0.1, 4.0, 4.0).unwrap();
        let (sat, total) = converse_pairwise_report(&pair, &ch, 0.5).unwrap();
        assert_eq!(total, 2);
        // (1,2): |1 − 4/2| = 1 > 0.5; (2,1): |1 − 2/4| = 0.5, not strictly greater
        assert_eq!(sat, 1);
        let one = Codebook::from_codewords(&ch, &red, vec![vec![1.0]], 0.1, 4.0, 4.0).unwrap();
        assert!(converse_pairwise_report(&one, &ch, 0.5).is_err());
    }

    #[test]
    fn unitary_report_examples() {
        let full = unitary_submatrix_sv_report(5, 5, 50, &mut rng::seeded(3)).unwrap();
        assert!((full.min_sv_min - 1.0).abs() < 1e-9);
        let part = unitary_submatrix_sv_report(4, 2, 1000, &mut rng::seeded(3)).unwrap();
        assert_eq!(part.count_violations, 0);
        assert_eq!(part.norm_violations, 0);
        assert!(part.min_sv_min < 1.0);
        assert!(unitary_submatrix_sv_report(3, 4, 10, &mut rng::seeded(3)).is_err());
    }

    #[test]
    fn interval_packing_brute_force() {
        assert_eq!(interval_packing_sizes(1.0, 0.5, 20), (2, 3));
        assert_eq!(interval_packing_sizes(1.0, 0.3, 30), (2, 4));
    }

    #[test]
    fn report_pass_rules() {
        assert!(OracleReport::new("a", 1.0, 1.02, 0.03, ToleranceKind::Relative, 1).pass);
        assert!(!OracleReport::new("a", 1.0, 1.04, 0.03, ToleranceKind::Relative, 1).pass);
        assert!(OracleReport::new("b", 0.0, 0.0, 0.0, ToleranceKind::UpperBound, 1).pass);
        assert!(!OracleReport::new("b", 0.0, 1.0, 0.0, ToleranceKind::UpperBound, 1).pass);
        assert!(OracleReport::new("c", 0.0, 9.0, 0.0, ToleranceKind::Diagnostic, 1).pass);
    }
}
