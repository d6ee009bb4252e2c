//! Small helpers for vectors on the probability simplex.

use crate::error::{Error, Result};

/// Slack allowed when a vector of shares is checked for `sum <= 1`.
pub const SHARE_SUM_SLACK: f64 = 1e-9;

pub fn sum(v: &[f64]) -> f64 {
    v.iter().sum()
}

/// True when every entry is finite, nonnegative, and the sum is within `tol` of 1.
pub fn is_on_simplex(v: &[f64], tol: f64) -> bool {
    !v.is_empty()
        && v.iter().all(|a| a.is_finite() && *a >= 0.0)
        && (sum(v) - 1.0).abs() <= tol
}

/// Turns population shares into a simplex point.
///
/// Shares may leave an unassigned remainder (`sum < 1`), which is spread
/// proportionally by renormalizing over the assigned mass. A sum above 1,
/// a negative entry, or zero total mass is rejected.
pub fn normalize_shares(field: &str, v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::validation(field, "empty vector"));
    }
    if let Some((i, a)) = v.iter().enumerate().find(|(_, a)| !a.is_finite() || **a < 0.0) {
        return Err(Error::validation(
            format!("{field}[{i}]"),
            format!("share {a} must be finite and nonnegative"),
        ));
    }
    let total = sum(v);
    if total > 1.0 + SHARE_SUM_SLACK {
        return Err(Error::validation(
            field,
            format!("shares sum to {total}, which exceeds 1"),
        ));
    }
    if total <= 0.0 {
        return Err(Error::validation(field, "shares have zero total mass"));
    }
    Ok(v.iter().map(|a| a / total).collect())
}

/// Rescales in place so the entries sum to 1. No-op on zero mass.
pub fn renormalize(v: &mut [f64]) {
    let total = sum(v);
    if total > 0.0 {
        v.iter_mut().for_each(|a| *a /= total);
    }
}

pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).abs()).sum()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}
