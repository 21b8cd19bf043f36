//! Dense linear-algebra helpers shared by the affinity and oracle modules.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative cutoff below which a singular value counts as zero.
pub const RANK_RTOL: f64 = 1e-10;

/// Thin SVD with singular values sorted non-increasing.
///
/// Returns `(u, sigma)` where `u` has `min(rows, cols)` columns.
pub fn sorted_svd(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let svd = m.clone().svd(true, false);
    let u = svd
        .u
        .ok_or_else(|| Error::Numerical("SVD did not produce left singular vectors".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let sigma: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let u_sorted = DMatrix::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]);
    Ok((u_sorted, sigma))
}

pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    s
}

/// Number of singular values above `RANK_RTOL · σ_max`.
pub fn rank_of_values(sigma: &[f64]) -> usize {
    let max = sigma.first().copied().unwrap_or(0.0);
    if max <= 0.0 {
        return 0;
    }
    sigma.iter().filter(|&&s| s > RANK_RTOL * max).count()
}

pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    rank_of_values(&singular_values(m))
}

/// Columns of `m` at `cols`, in the given order.
pub fn select_columns(m: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), cols.len(), |r, c| m[(r, cols[c])])
}

pub fn select_rows(m: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), m.ncols(), |r, c| m[(rows[r], c)])
}

/// `det(A_Gᵀ A_G)` for the column subset `cols`, clamped at zero.
pub fn gram_det(m: &DMatrix<f64>, cols: &[usize]) -> f64 {
    let sub = select_columns(m, cols);
    let gram = sub.transpose() * &sub;
    gram.determinant().max(0.0)
}

/// Greedy row selection by Gaussian elimination with partial pivoting.
///
/// Rows are visited in natural order; a row is kept when its residual after
/// elimination against the kept rows has an entry above `tol`. The result is
/// the lexicographically smallest independent row set of the requested size.
pub fn independent_rows(m: &DMatrix<f64>, want: usize, tol: f64) -> Vec<usize> {
    let ncols = m.ncols();
    // (pivot column, normalized reduced row)
    let mut basis: Vec<(usize, DVector<f64>)> = Vec::new();
    let mut chosen = Vec::new();
    for r in 0..m.nrows() {
        if chosen.len() == want {
            break;
        }
        let mut row: DVector<f64> = m.row(r).transpose();
        for (pivot, b) in &basis {
            let f = row[*pivot];
            if f != 0.0 {
                row.axpy(-f, b, 1.0);
            }
        }
        let (pivot, val) = (0..ncols)
            .map(|c| (c, row[c].abs()))
            .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if val > tol {
            let p = row[pivot];
            row /= p;
            basis.push((pivot, row));
            chosen.push(r);
        }
    }
    chosen
}

/// Binomial coefficient, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Lexicographic iterator over `k`-subsets of `0..n`.
#[derive(Debug, Clone)]
pub struct Combinations {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        let current = if k <= n { Some((0..k).collect()) } else { None };
        Combinations { n, current }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.take()?;
        let k = out.len();
        let mut next = out.clone();
        let mut i = k;
        while i > 0 {
            i -= 1;
            if next[i] < self.n - k + i {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                self.current = Some(next);
                return Some(out);
            }
        }
        Some(out)
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
