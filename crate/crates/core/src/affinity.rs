//! Affinity matrices and the determinant, volume and singular-value
//! machinery built on them.

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, binomial, Combinations};
use crate::rng;

/// Largest number of column subsets enumerated by exhaustive modes.
pub const EXHAUSTIVE_LIMIT: u128 = 1_000_000;

/// Rows re-drawn by [`gen_random_sparse`] before settling for a lower rank.
pub const SPARSE_RETRIES: usize = 100;

/// Two Gram columns count as orthogonal when `|⟨x, y⟩| ≤ ORTHO_RTOL·‖x‖‖y‖`.
pub const ORTHO_RTOL: f64 = 1e-9;

const BOUND_SLACK: f64 = 1e-12;

/// Non-negative `K×N` matrix of receptor/molecule binding strengths.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    entries: DMatrix<f64>,
    a_min: f64,
    a_max: f64,
}

/// On-disk matrix format: dense row-major JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixFile {
    pub k: usize,
    pub n: usize,
    pub rows: Vec<Vec<f64>>,
    pub a_min: f64,
    pub a_max: f64,
}

impl AffinityMatrix {
    pub fn new(entries: DMatrix<f64>, a_min: f64, a_max: f64) -> Result<Self> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(Error::invalid("affinity matrix needs K ≥ 1 and N ≥ 1"));
        }
        if !(a_min > 0.0 && a_min.is_finite() && a_max.is_finite() && a_min <= a_max) {
            return Err(Error::invalid(format!(
                "affinity bounds must satisfy 0 < a_min ≤ a_max, got a_min={a_min}, a_max={a_max}"
            )));
        }
        for r in 0..entries.nrows() {
            for c in 0..entries.ncols() {
                let e = entries[(r, c)];
                if !e.is_finite() || e < 0.0 {
                    return Err(Error::invalid(format!(
                        "affinity entry ({r}, {c}) = {e} is not a non-negative real"
                    )));
                }
                if e != 0.0 && (e < a_min * (1.0 - BOUND_SLACK) || e > a_max * (1.0 + BOUND_SLACK)) {
                    return Err(Error::invalid(format!(
                        "affinity entry ({r}, {c}) = {e} outside [a_min, a_max] = [{a_min}, {a_max}]"
                    )));
                }
            }
        }
        Ok(AffinityMatrix {
            entries,
            a_min,
            a_max,
        })
    }

    /// Build from a matrix, taking `a_min`/`a_max` from its non-zero entries.
    pub fn from_entries(entries: DMatrix<f64>) -> Result<Self> {
        let nz: Vec<f64> = entries.iter().copied().filter(|&e| e != 0.0).collect();
        if nz.is_empty() {
            return Err(Error::invalid("affinity matrix has no non-zero entries"));
        }
        let lo = nz.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = nz.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self::new(entries, lo, hi)
    }

    pub fn from_rows(rows: &[Vec<f64>], a_min: f64, a_max: f64) -> Result<Self> {
        let k = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::dims("matrix rows have unequal lengths"));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(DMatrix::from_row_slice(k, n, &flat), a_min, a_max)
    }

    /// Number of receptor types (rows).
    pub fn k(&self) -> usize {
        self.entries.nrows()
    }

    /// Number of molecule types (columns).
    pub fn n(&self) -> usize {
        self.entries.ncols()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn a_min(&self) -> f64 {
        self.a_min
    }

    pub fn a_max(&self) -> f64 {
        self.a_max
    }

    /// Non-zero count of every row.
    pub fn f_counts(&self) -> Vec<usize> {
        self.entries
            .row_iter()
            .map(|row| row.iter().filter(|&&e| e != 0.0).count())
            .collect()
    }

    pub fn rank(&self) -> usize {
        linalg::numerical_rank(&self.entries)
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }

    pub fn to_file(&self) -> MatrixFile {
        MatrixFile {
            k: self.k(),
            n: self.n(),
            rows: self.rows(),
            a_min: self.a_min,
            a_max: self.a_max,
        }
    }

    pub fn from_file(file: &MatrixFile) -> Result<Self> {
        if file.rows.len() != file.k || file.rows.iter().any(|r| r.len() != file.n) {
            return Err(Error::dims(format!(
                "matrix file declares {}×{} but rows do not match",
                file.k, file.n
            )));
        }
        Self::from_rows(&file.rows, file.a_min, file.a_max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("matrix serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: MatrixFile = serde_json::from_str(text)?;
        Self::from_file(&file)
    }
}

/// `n×n` identity.
pub fn gen_identity(n: usize) -> Result<AffinityMatrix> {
    if n == 0 {
        return Err(Error::invalid("identity size must be ≥ 1"));
    }
    AffinityMatrix::new(DMatrix::identity(n, n), 1.0, 1.0)
}

/// Lower-triangular banded Toeplitz matrix: entry `(k, j) = taps[k − j]`.
pub fn gen_toeplitz(taps: &[f64], n: usize) -> Result<AffinityMatrix> {
    if taps.is_empty() {
        return Err(Error::invalid("toeplitz taps must be non-empty"));
    }
    if taps.len() > n {
        return Err(Error::invalid(format!(
            "toeplitz needs |taps| ≤ n, got {} taps for n = {n}",
            taps.len()
        )));
    }
    if taps.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::invalid("toeplitz taps must be positive reals"));
    }
    let entries = DMatrix::from_fn(n, n, |r, c| {
        if r >= c && r - c < taps.len() {
            taps[r - c]
        } else {
            0.0
        }
    });
    let lo = taps.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = taps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    AffinityMatrix::new(entries, lo, hi)
}

/// Result of [`gen_random_sparse`]: the matrix and the rank it achieved.
#[derive(Debug, Clone)]
pub struct SparseDraw {
    pub matrix: AffinityMatrix,
    pub rank: usize,
    pub attempts: usize,
}

/// Non-zeros per row for a target rank `t` and sparsity exponent `l`.
pub fn sparse_row_weight(t: usize, l: f64) -> usize {
    let raw = (t as f64).powf(l);
    // guard against powf landing a hair above an integer
    let snapped = raw.round();
    if (raw - snapped).abs() <= 1e-9 * snapped.max(1.0) {
        snapped as usize
    } else {
        raw.ceil() as usize
    }
    .max(1)
}

/// Random sparse affinity matrix with `ceil(k^l)` non-zeros per row.
///
/// The whole matrix is re-drawn up to [`SPARSE_RETRIES`] times while its rank
/// stays below `k`; the best draw is returned with its achieved rank.
pub fn gen_random_sparse(
    k: usize,
    n: usize,
    l: f64,
    a_min: f64,
    a_max: f64,
    seed: u64,
) -> Result<SparseDraw> {
    if k == 0 || n == 0 {
        return Err(Error::invalid("random sparse matrix needs k, n ≥ 1"));
    }
    if k > n {
        return Err(Error::invalid(format!("random sparse matrix needs k ≤ n, got k={k}, n={n}")));
    }
    if !(0.0..1.0).contains(&l) {
        return Err(Error::invalid(format!("sparsity exponent l must lie in [0, 1), got {l}")));
    }
    if !(a_min > 0.0 && a_min <= a_max && a_max.is_finite()) {
        return Err(Error::invalid("random sparse values need 0 < a_min ≤ a_max"));
    }
    let weight = sparse_row_weight(k, l);
    if weight > n {
        return Err(Error::invalid(format!(
            "ceil(k^l) = {weight} non-zeros per row cannot be placed in {n} columns"
        )));
    }
    let mut rng = rng::stream_rng(seed, rng::Stream::Matrix, 0);
    let mut best: Option<(DMatrix<f64>, usize, usize)> = None;
    for attempt in 1..=SPARSE_RETRIES {
        let mut m = DMatrix::zeros(k, n);
        for r in 0..k {
            let mut cols = index::sample(&mut rng, n, weight).into_vec();
            cols.sort_unstable();
            for c in cols {
                m[(r, c)] = a_min + (a_max - a_min) * rng.gen::<f64>();
            }
        }
        let rank = linalg::numerical_rank(&m);
        if best.as_ref().is_none_or(|b| rank > b.1) {
            best = Some((m, rank, attempt));
        }
        if rank == k {
            break;
        }
    }
    let (m, rank, attempts) = best.expect("at least one attempt");
    Ok(SparseDraw {
        matrix: AffinityMatrix::new(m, a_min, a_max)?,
        rank,
        attempts,
    })
}

/// Map from the `K`-dimensional receptor space onto the rank-`T` left
/// singular subspace of `Ā`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReductionMap {
    u_t: DMatrix<f64>,
    singular_values: Vec<f64>,
    independent_rows: Vec<usize>,
}

impl ReductionMap {
    pub fn t(&self) -> usize {
        self.singular_values.len()
    }

    /// `K×T` matrix with orthonormal columns.
    pub fn u_t(&self) -> &DMatrix<f64> {
        &self.u_t
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    /// Zero-based indices of the `T` independent rows of `Ā`.
    pub fn independent_rows(&self) -> &[usize] {
        &self.independent_rows
    }

    /// `u_tᵀ·v` for a receptor-space vector `v`.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let k = self.u_t.nrows();
        (0..self.t())
            .map(|c| {
                let col = self.u_t.column(c);
                (0..k).map(|r| col[r] * v[r]).sum()
            })
            .collect()
    }
}

/// Rank-revealing SVD of `Ā` plus the lexicographically first independent
/// row set.
pub fn svd_reduction(abar: &DMatrix<f64>) -> Result<ReductionMap> {
    if abar.iter().all(|&x| x == 0.0) || abar.is_empty() {
        return Err(Error::invalid("cannot reduce an all-zero matrix"));
    }
    let (u, sigma) = linalg::sorted_svd(abar)?;
    let t = linalg::rank_of_values(&sigma);
    let u_t = u.columns(0, t).into_owned();
    let scale = abar.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let tol = linalg::RANK_RTOL * scale * (abar.nrows().max(abar.ncols()) as f64);
    let rows = linalg::independent_rows(abar, t, tol);
    if rows.len() != t {
        return Err(Error::Numerical(format!(
            "elimination found {} independent rows but the SVD rank is {t}",
            rows.len()
        )));
    }
    Ok(ReductionMap {
        u_t,
        singular_values: sigma[..t].to_vec(),
        independent_rows: rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubsetMode {
    Exhaustive,
    Greedy,
}

/// A column subset chosen to maximize `det(Ā_Gᵀ Ā_G)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnSubset {
    pub columns: Vec<usize>,
    pub det: f64,
    pub mode: SubsetMode,
}

/// Column subset of size `t` maximizing the Gram determinant.
///
/// Exhaustive mode breaks ties toward the lexicographically smallest subset.
/// Greedy mode adds the column with the largest residual norm against the
/// span of the columns picked so far, which is the column maximizing the
/// incremental determinant; ties go to the lowest index.
pub fn best_column_subset(abar: &DMatrix<f64>, t: usize, mode: SubsetMode) -> Result<ColumnSubset> {
    let n = abar.ncols();
    if t == 0 || t > n {
        return Err(Error::invalid(format!("subset size must satisfy 1 ≤ t ≤ N, got t={t}, N={n}")));
    }
    match mode {
        SubsetMode::Exhaustive => {
            let count = binomial(n, t);
            if count > EXHAUSTIVE_LIMIT {
                return Err(Error::TooManySubsets {
                    count,
                    limit: EXHAUSTIVE_LIMIT,
                });
            }
            let mut best: Option<(Vec<usize>, f64)> = None;
            for cols in Combinations::new(n, t) {
                let d = linalg::gram_det(abar, &cols);
                let better = match &best {
                    None => true,
                    Some((_, b)) => d > *b && (d - *b) > 1e-12 * b.abs().max(f64::MIN_POSITIVE),
                };
                if better {
                    best = Some((cols, d));
                }
            }
            let (columns, det) = best.expect("at least one subset");
            Ok(ColumnSubset {
                columns,
                det,
                mode,
            })
        }
        SubsetMode::Greedy => {
            let k = abar.nrows();
            let mut residual: Vec<DVector<f64>> = (0..n).map(|c| abar.column(c).into_owned()).collect();
            let mut taken = vec![false; n];
            let mut columns = Vec::with_capacity(t);
            let mut det = 1.0;
            for _ in 0..t {
                let mut pick = None;
                let mut best = -1.0;
                for c in 0..n {
                    if taken[c] {
                        continue;
                    }
                    let r2 = residual[c].norm_squared();
                    if r2 > best {
                        best = r2;
                        pick = Some(c);
                    }
                }
                let c = pick.expect("t ≤ N leaves a candidate");
                taken[c] = true;
                columns.push(c);
                det *= best.max(0.0);
                let q = if best > 0.0 {
                    residual[c].clone() / best.sqrt()
                } else {
                    DVector::zeros(k)
                };
                for (j, r) in residual.iter_mut().enumerate() {
                    if !taken[j] {
                        let proj = q.dot(r);
                        r.axpy(-proj, &q, 1.0);
                    }
                }
            }
            columns.sort_unstable();
            Ok(ColumnSubset {
                columns,
                det,
                mode,
            })
        }
    }
}

/// Exhaustive when the subset count permits, greedy otherwise.
pub fn auto_subset_mode(n: usize, t: usize) -> SubsetMode {
    if binomial(n, t) <= EXHAUSTIVE_LIMIT {
        SubsetMode::Exhaustive
    } else {
        SubsetMode::Greedy
    }
}

/// Finite-size condition diagnostics for an affinity matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub kappa_hat: f64,
    pub l_hat: f64,
    pub tau_hat: f64,
    pub f_counts: Vec<usize>,
    pub subset: ColumnSubset,
    pub non_orthogonal_counts: Vec<usize>,
    pub c1_ok: bool,
    pub c2_ok: bool,
    pub c3_ok: bool,
    pub c4_metric: f64,
}

/// Exponent estimates and condition checks at rank `t`.
///
/// `l_hat` is defined as 0 when `t = 1`, and rows with at most one non-zero
/// contribute 0.
pub fn condition_metrics(a: &AffinityMatrix, t: usize) -> Result<ConditionReport> {
    let (k, n) = (a.k(), a.n());
    if k == 1 || n == 1 {
        return Err(Error::invalid(format!(
            "exponent estimates need K ≥ 2 and N ≥ 2, got K={k}, N={n}"
        )));
    }
    if t == 0 || t > k.min(n) {
        return Err(Error::invalid(format!("rank t={t} outside 1..=min(K, N)")));
    }
    let ln = |x: usize| (x as f64).ln();
    let kappa_hat = ln(k) / ln(n);
    let f_counts = a.f_counts();
    let l_hat = if t == 1 {
        0.0
    } else {
        f_counts
            .iter()
            .map(|&f| if f <= 1 { 0.0 } else { ln(f) / ln(t) })
            .fold(0.0, f64::max)
    };
    let tau_hat = ln(t) / ln(k);

    let subset = best_column_subset(a.entries(), t, auto_subset_mode(n, t))?;
    let sub = linalg::select_columns(a.entries(), &subset.columns);
    let gram = sub.transpose() * &sub;
    let norms: Vec<f64> = (0..t).map(|c| gram.column(c).norm()).collect();
    let non_orthogonal_counts: Vec<usize> = (0..t)
        .map(|c| {
            (0..t)
                .filter(|&o| o != c)
                .filter(|&o| gram.column(o).dot(&gram.column(c)).abs() > ORTHO_RTOL * norms[o] * norms[c])
                .count()
        })
        .collect();
    let c4_metric = non_orthogonal_counts.iter().copied().max().unwrap_or(0) as f64 / t as f64;

    let c1_ok = kappa_hat > 0.0 && kappa_hat <= 1.0;
    let c2_ok = l_hat < 1.0;
    let indicator = if kappa_hat < 1.0 { 1.0 } else { 0.0 };
    let tau_floor = 1.0 / (kappa_hat + indicator * l_hat);
    let c3_ok = tau_floor <= tau_hat && tau_hat <= 1.0;

    Ok(ConditionReport {
        kappa_hat,
        l_hat,
        tau_hat,
        f_counts,
        subset,
        non_orthogonal_counts,
        c1_ok,
        c2_ok,
        c3_ok,
        c4_metric,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VolumeMode {
    Exhaustive,
    /// Average over `samples` uniformly drawn subsets, scaled by the subset count.
    MonteCarloSubsets { samples: usize, seed: u64 },
}

/// `T`-dimensional volume of the image of `[0, c_avg]^N` under `Ā`,
/// `c_avg^t · Σ_G sqrt(det(Ā_Gᵀ Ā_G))` over all size-`t` column subsets.
pub fn zonotope_volume(abar: &DMatrix<f64>, t: usize, c_avg: f64, mode: VolumeMode) -> Result<f64> {
    let n = abar.ncols();
    if !(c_avg > 0.0) {
        return Err(Error::invalid("c_avg must be positive"));
    }
    let rank = linalg::numerical_rank(abar);
    if t != rank {
        return Err(Error::invalid(format!(
            "zonotope volume needs t equal to the rank ({rank}), got t={t}"
        )));
    }
    let count = binomial(n, t);
    let term = |cols: &[usize]| linalg::gram_det(abar, cols).sqrt();
    let sum = match mode {
        VolumeMode::Exhaustive => {
            if count > EXHAUSTIVE_LIMIT {
                return Err(Error::TooManySubsets {
                    count,
                    limit: EXHAUSTIVE_LIMIT,
                });
            }
            Combinations::new(n, t).map(|c| term(&c)).sum::<f64>()
        }
        VolumeMode::MonteCarloSubsets { samples, seed } => {
            if samples == 0 {
                return Err(Error::invalid("subset sample count must be ≥ 1"));
            }
            let mut rng = rng::stream_rng(seed, rng::Stream::Oracle, 0);
            let mut acc = 0.0;
            for _ in 0..samples {
                let mut cols = index::sample(&mut rng, n, t).into_vec();
                cols.sort_unstable();
                acc += term(&cols);
            }
            acc / samples as f64 * count as f64
        }
    };
    Ok(c_avg.powi(t as i32) * sum)
}

/// Product of the column norms, an upper bound on `|det(m)|`.
pub fn hadamard_bound(m: &DMatrix<f64>) -> Result<f64> {
    if m.nrows() != m.ncols() {
        return Err(Error::dims(format!(
            "hadamard bound needs a square matrix, got {}×{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.column_iter().map(|c| c.norm()).product())
}

/// Smallest singular value of a square full-rank matrix, the minimum of
/// `‖b·x‖/‖x‖`.
pub fn min_gain(b: &DMatrix<f64>) -> Result<f64> {
    if b.nrows() != b.ncols() || b.is_empty() {
        return Err(Error::dims(format!(
            "min gain needs a non-empty square matrix, got {}×{}",
            b.nrows(),
            b.ncols()
        )));
    }
    let sigma = linalg::singular_values(b);
    if linalg::rank_of_values(&sigma) < b.nrows() {
        return Err(Error::RankDeficient(format!(
            "{}×{} matrix has numerical rank {}",
            b.nrows(),
            b.ncols(),
            linalg::rank_of_values(&sigma)
        )));
    }
    Ok(*sigma.last().expect("non-empty"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mat(rows: &[&[f64]]) -> DMatrix<f64> {
        let k = rows.len();
        let n = rows[0].len();
        DMatrix::from_row_slice(k, n, &rows.concat())
    }

    #[test]
    fn identity_generator() {
        let one = gen_identity(1).unwrap();
        assert_eq!(one.rows(), vec![vec![1.0]]);
        let three = gen_identity(3).unwrap();
        assert_eq!(three.f_counts(), vec![1, 1, 1]);
        assert_eq!((three.a_min(), three.a_max()), (1.0, 1.0));
        let sixteen = gen_identity(16).unwrap();
        assert_eq!(sixteen.rank(), 16);
        let rep = condition_metrics(&sixteen, 16).unwrap();
        assert_eq!(rep.kappa_hat, 1.0);
        assert_eq!(rep.l_hat, 0.0);
        assert!(gen_identity(0).is_err());
    }

    #[test]
    fn toeplitz_generator() {
        assert_eq!(gen_toeplitz(&[1.0], 2).unwrap().entries(), &DMatrix::identity(2, 2));
        let t = gen_toeplitz(&[1.0, 0.5], 3).unwrap();
        assert_eq!(
            t.rows(),
            vec![vec![1.0, 0.0, 0.0], vec![0.5, 1.0, 0.0], vec![0.0, 0.5, 1.0]]
        );
        assert_eq!(t.rank(), 3);
        assert!((t.entries().determinant() - 1.0).abs() < 1e-15);
        assert!(gen_toeplitz(&[], 3).is_err());
        assert!(gen_toeplitz(&[1.0, 0.5, 0.2], 2).is_err());
    }

    #[test]
    fn random_sparse_row_weights_and_determinism() {
        let d0 = gen_random_sparse(4, 8, 0.0, 0.5, 2.0, 7).unwrap();
        assert!(d0.matrix.f_counts().iter().all(|&f| f == 1));
        let d1 = gen_random_sparse(4, 8, 0.5, 0.5, 2.0, 7).unwrap();
        assert!(d1.matrix.f_counts().iter().all(|&f| f == 2));
        let again = gen_random_sparse(4, 8, 0.5, 0.5, 2.0, 7).unwrap();
        assert_eq!(d1.matrix, again.matrix);
        assert!(d1.matrix.entries().iter().all(|&e| e == 0.0 || (0.5..=2.0).contains(&e)));
        assert_eq!(d1.rank, d1.matrix.rank());
        assert!(gen_random_sparse(4, 8, 0.999, 0.5, 2.0, 7).is_ok());
        // ceil(6^0.99) = 6 > n = 5
        assert!(gen_random_sparse(6, 5, 0.99, 0.5, 2.0, 7).is_err());
        assert!(gen_random_sparse(9, 8, 0.0, 0.5, 2.0, 7).is_err());
    }

    #[test]
    fn svd_reduction_examples() {
        let id = svd_reduction(&DMatrix::identity(2, 2)).unwrap();
        assert_eq!(id.t(), 2);
        assert!(id.singular_values().iter().all(|s| (s - 1.0).abs() < 1e-12));
        assert_eq!(id.independent_rows(), &[0, 1]);

        let dep = svd_reduction(&mat(&[&[1.0, 0.0], &[2.0, 0.0], &[0.0, 1.0]])).unwrap();
        assert_eq!(dep.t(), 2);
        assert_eq!(dep.independent_rows(), &[0, 2]);

        let r1 = svd_reduction(&mat(&[&[1.0, 1.0], &[1.0, 1.0]])).unwrap();
        assert_eq!(r1.t(), 1);
        assert!((r1.singular_values()[0] - 2.0).abs() < 1e-12);
        assert_eq!(r1.independent_rows(), &[0]);

        assert!(svd_reduction(&DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn condition_metric_examples() {
        let t = gen_toeplitz(&[1.0, 0.5], 16).unwrap();
        let rep = condition_metrics(&t, 16).unwrap();
        let mut expected = vec![2; 16];
        expected[0] = 1;
        assert_eq!(rep.f_counts, expected);
        assert!((rep.l_hat - 0.25).abs() < 1e-15);
        assert!(rep.c2_ok);

        let mut padded = DMatrix::zeros(4, 16);
        for i in 0..4 {
            padded[(i, i)] = 1.0;
        }
        let a = AffinityMatrix::from_entries(padded).unwrap();
        let rep = condition_metrics(&a, 4).unwrap();
        assert!((rep.kappa_hat - 0.5).abs() < 1e-15);
        assert!(rep.c1_ok);

        let id = gen_identity(16).unwrap();
        let rep = condition_metrics(&id, 16).unwrap();
        assert_eq!(rep.tau_hat, 1.0);
        assert!(rep.c1_ok && rep.c2_ok && rep.c3_ok);
        assert_eq!(rep.c4_metric, 0.0);

        assert!(condition_metrics(&gen_identity(1).unwrap(), 1).is_err());
        let row = AffinityMatrix::from_entries(mat(&[&[1.0, 1.0]])).unwrap();
        assert!(condition_metrics(&row, 1).is_err());
    }

    #[test]
    fn zonotope_volume_examples() {
        let id = DMatrix::identity(2, 2);
        assert!((zonotope_volume(&id, 2, 1.0, VolumeMode::Exhaustive).unwrap() - 1.0).abs() < 1e-12);
        let hex = mat(&[&[1.0, 0.0, 1.0], &[0.0, 1.0, 1.0]]);
        assert!((zonotope_volume(&hex, 2, 1.0, VolumeMode::Exhaustive).unwrap() - 3.0).abs() < 1e-12);
        assert!((zonotope_volume(&hex, 2, 2.0, VolumeMode::Exhaustive).unwrap() - 12.0).abs() < 1e-12);
        let mc = zonotope_volume(&hex, 2, 1.0, VolumeMode::MonteCarloSubsets { samples: 3000, seed: 1 }).unwrap();
        assert!((mc - 3.0).abs() < 1e-9, "all three subsets have det 1, got {mc}");
        assert!(zonotope_volume(&hex, 1, 1.0, VolumeMode::Exhaustive).is_err());
        let wide = DMatrix::from_fn(2, 3000, |r, c| if c % 2 == r { 1.0 } else { 0.5 });
        assert!(matches!(
            zonotope_volume(&wide, 2, 1.0, VolumeMode::Exhaustive),
            Err(Error::TooManySubsets { .. })
        ));
    }

    #[test]
    fn best_subset_examples() {
        let id = DMatrix::identity(3, 3);
        assert_eq!(best_column_subset(&id, 3, SubsetMode::Exhaustive).unwrap().columns, vec![0, 1, 2]);
        let m = mat(&[&[2.0, 0.0], &[1.0, 0.1]]);
        assert_eq!(best_column_subset(&m, 1, SubsetMode::Exhaustive).unwrap().columns, vec![0]);
        assert_eq!(best_column_subset(&m, 1, SubsetMode::Greedy).unwrap().columns, vec![0]);
        let hex = mat(&[&[1.0, 0.0, 1.0], &[0.0, 1.0, 1.0]]);
        let ex = best_column_subset(&hex, 2, SubsetMode::Exhaustive).unwrap();
        assert_eq!(ex.columns, vec![0, 1]);
        assert!((ex.det - 1.0).abs() < 1e-12);
        let gr = best_column_subset(&hex, 2, SubsetMode::Greedy).unwrap();
        assert!((gr.det - 1.0).abs() < 1e-12);
        assert!(best_column_subset(&hex, 4, SubsetMode::Greedy).is_err());
    }

    #[test]
    fn greedy_det_matches_direct_gram_det() {
        let m = mat(&[&[1.0, 2.0, 0.5, 0.0], &[0.0, 1.0, 3.0, 1.0], &[2.0, 0.0, 1.0, 1.0]]);
        let g = best_column_subset(&m, 3, SubsetMode::Greedy).unwrap();
        let direct = linalg::gram_det(&m, &g.columns);
        assert!((g.det - direct).abs() < 1e-9 * direct);
        let ex = best_column_subset(&m, 3, SubsetMode::Exhaustive).unwrap();
        assert!(ex.det >= g.det - 1e-9);
    }

    #[test]
    fn hadamard_and_gain_examples() {
        assert_eq!(hadamard_bound(&DMatrix::identity(2, 2)).unwrap(), 1.0);
        assert_eq!(hadamard_bound(&mat(&[&[2.0, 0.0], &[0.0, 3.0]])).unwrap(), 6.0);
        let shear = mat(&[&[1.0, 1.0], &[0.0, 1.0]]);
        assert!((hadamard_bound(&shear).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!(hadamard_bound(&DMatrix::zeros(2, 3)).is_err());

        assert!((min_gain(&DMatrix::identity(3, 3)).unwrap() - 1.0).abs() < 1e-12);
        assert!((min_gain(&mat(&[&[2.0, 0.0], &[0.0, 0.5]])).unwrap() - 0.5).abs() < 1e-12);
        let expected = ((3.0 - 5f64.sqrt()) / 2.0).sqrt();
        assert!((min_gain(&shear).unwrap() - expected).abs() < 1e-12);
        assert!(matches!(
            min_gain(&mat(&[&[1.0, 1.0], &[1.0, 1.0]])),
            Err(Error::RankDeficient(_))
        ));
    }

    #[test]
    fn matrix_file_round_trip() {
        let t = gen_toeplitz(&[1.0, 0.1 + 0.2], 4).unwrap();
        let back = AffinityMatrix::from_json(&t.to_json()).unwrap();
        assert_eq!(t, back);
        let bad = r#"{"k":2,"n":2,"rows":[[1,0]],"a_min":1,"a_max":1}"#;
        assert!(AffinityMatrix::from_json(bad).is_err());
        let out_of_bounds = r#"{"k":1,"n":2,"rows":[[1,3]],"a_min":1,"a_max":2}"#;
        assert!(AffinityMatrix::from_json(out_of_bounds).is_err());
    }

    fn small_matrix() -> impl Strategy<Value = DMatrix<f64>> {
        (1usize..=4, 1usize..=6).prop_flat_map(|(k, n)| {
            proptest::collection::vec(prop_oneof![Just(0.0), 0.1f64..3.0], k * n)
                .prop_map(move |v| DMatrix::from_row_slice(k, n, &v))
        })
    }

    proptest! {
        #[test]
        fn reduction_preserves_column_space_norms(m in small_matrix(), c in proptest::collection::vec(0.0f64..2.0, 6)) {
            prop_assume!(m.iter().any(|&x| x != 0.0));
            let red = svd_reduction(&m).unwrap();
            let x = DVector::from_iterator(m.ncols(), c.iter().copied().take(m.ncols()));
            let img: Vec<f64> = (&m * x).iter().copied().collect();
            let full = linalg::norm(&img);
            let reduced = linalg::norm(&red.project(&img));
            prop_assert!((full - reduced).abs() <= 1e-9 * full.max(1e-300));
            let sub = linalg::select_rows(&m, red.independent_rows());
            prop_assert_eq!(linalg::numerical_rank(&sub), red.t());
            let gram = red.u_t().transpose() * red.u_t();
            prop_assert!((gram - DMatrix::identity(red.t(), red.t())).amax() < 1e-10);
            prop_assert!(red.singular_values().windows(2).all(|w| w[0] >= w[1]));
        }
    }
}
