//! Closed-form capacity bounds, thresholds and scaling laws.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::fmt_num;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    KappaLt1,
    KappaEq1,
}

/// Lower and upper bounds on the identification capacity in the
/// `2^{(T log T) R}` scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityBounds {
    pub kappa: f64,
    pub l: f64,
    /// Raw lower-bound formula; negative once `l` exceeds `1/2 − κ/4`.
    pub lower: f64,
    pub upper: f64,
    pub regime: Regime,
}

impl CapacityBounds {
    /// Lower bound clamped at zero, since rates are non-negative.
    pub fn lower_clamped(&self) -> f64 {
        self.lower.max(0.0)
    }

    /// The lower bound is only established for `l < 1/4`.
    pub fn l_out_of_range(&self) -> bool {
        self.l >= 0.25
    }
}

fn check_kappa_l(kappa: f64, l: f64) -> Result<()> {
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(Error::invalid(format!("kappa must lie in (0, 1], got {kappa}")));
    }
    if !(0.0..1.0).contains(&l) {
        return Err(Error::invalid(format!("l must lie in [0, 1), got {l}")));
    }
    Ok(())
}

/// `1/2 − (κ/4 + l) ≤ C ≤ 1/2 + κ + l + 2(1 − δ_{κ,1}) l`.
///
/// `δ_{κ,1}` compares `kappa` to `1.0` exactly.
pub fn capacity_bounds(kappa: f64, l: f64) -> Result<CapacityBounds> {
    check_kappa_l(kappa, l)?;
    let regime = if kappa == 1.0 { Regime::KappaEq1 } else { Regime::KappaLt1 };
    let off_one = if regime == Regime::KappaEq1 { 0.0 } else { 1.0 };
    Ok(CapacityBounds {
        kappa,
        l,
        lower: 0.5 - (kappa / 4.0 + l),
        upper: 0.5 + kappa + l + 2.0 * off_one * l,
        regime,
    })
}

/// Gap between the `κ → 1⁻` limit of the upper bound and its value at
/// `κ = 1`. Equal to `2l`.
pub fn upper_bound_jump(l: f64) -> Result<f64> {
    check_kappa_l(1.0, l)?;
    let at_one = capacity_bounds(1.0, l)?.upper;
    let left_limit = 0.5 + 1.0 + l + 2.0 * l;
    Ok(left_limit - at_one)
}

/// `θ_T = C_max / T^{κ(1 − l δ_{κ,1}) + 2l + b}`.
pub fn converse_threshold(c_max: f64, kappa: f64, l: f64, b: f64, t: usize) -> Result<f64> {
    check_kappa_l(kappa, l)?;
    if !(c_max > 0.0) || !(b >= 0.0) || t == 0 {
        return Err(Error::invalid("converse threshold needs c_max > 0, b ≥ 0, t ≥ 1"));
    }
    let delta = if kappa == 1.0 { 1.0 } else { 0.0 };
    let exponent = kappa * (1.0 - l * delta) + 2.0 * l + b;
    Ok(c_max / (t as f64).powf(exponent))
}

/// Density band `(2^{−t}, 2^{−0.599 t})` for saturated packings.
pub fn density_bounds(t: usize) -> Result<(f64, f64)> {
    if t == 0 {
        return Err(Error::invalid("t must be ≥ 1"));
    }
    let tf = t as f64;
    Ok(((-tf).exp2(), (-0.599 * tf).exp2()))
}

/// Codebook size `2^{(t log2 t) r}` returned as `(value, log2 value)`.
/// The value overflows to infinity for large exponents; the log form does not.
pub fn codebook_size(r: f64, t: usize) -> Result<(f64, f64)> {
    if t < 2 {
        return Err(Error::invalid(format!("codebook size needs t ≥ 2, got {t}")));
    }
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::invalid(format!("rate must be a non-negative real, got {r}")));
    }
    let tf = t as f64;
    let log2 = tf * tf.log2() * r;
    Ok((log2.exp2(), log2))
}

/// Chebyshev bound on the type I error:
/// `7 (A⁴ + A³ + A² + A) / (t ψ²)` with `A = f·(a_max v_max c_avg + λ_max)`.
pub fn type1_bound(
    f_k_max: usize,
    a_max: f64,
    v_max: f64,
    c_avg: f64,
    lambda_max: f64,
    t: usize,
    psi_t: f64,
) -> Result<f64> {
    if f_k_max == 0 || t == 0 || !(a_max > 0.0 && v_max > 0.0 && c_avg > 0.0 && lambda_max > 0.0 && psi_t > 0.0) {
        return Err(Error::invalid("type I bound needs positive arguments"));
    }
    let a = f_k_max as f64 * (a_max * v_max * c_avg + lambda_max);
    let u = a.powi(4) + a.powi(3) + a.powi(2) + a;
    Ok(7.0 * u / (t as f64 * psi_t * psi_t))
}

pub const GRID_CSV_HEADER: &str = "kappa,l,lower_raw,lower_clamped,upper";

/// Evaluate [`capacity_bounds`] on the cross product of the grids, as CSV.
pub fn bounds_grid_csv(kappa_grid: &[f64], l_grid: &[f64]) -> Result<String> {
    if kappa_grid.is_empty() || l_grid.is_empty() {
        return Err(Error::invalid("bounds grid needs non-empty kappa and l lists"));
    }
    let mut out = String::from(GRID_CSV_HEADER);
    out.push('\n');
    for &kappa in kappa_grid {
        for &l in l_grid {
            let b = capacity_bounds(kappa, l)?;
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt_num(kappa),
                fmt_num(l),
                fmt_num(b.lower),
                fmt_num(b.lower_clamped()),
                fmt_num(b.upper)
            ));
        }
    }
    Ok(out)
}
