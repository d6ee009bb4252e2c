//! State-dependent payoffs.
//!
//! Each Q-factor splits into a `+Q` and a `-Q` sign whose payoffs are the
//! z-scores and their negation. With `z[i]` the frequency of `+Q_i`, the
//! stakeholder payoff matrix is `A[i][j] = score[i][j] * (2 z[i] - 1)`, and
//! the community plays against `Aᵀ`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::qdata::ZScoreMatrix;

/// A dense payoff matrix, row-major, rows = stakeholder strategies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PayoffMatrix {
    rows: usize,
    cols: usize,
    a: Vec<f64>,
    /// z used to build this matrix; empty for raw matrices.
    z_snapshot: Vec<f64>,
}

impl PayoffMatrix {
    /// A matrix not tied to any z-score table.
    pub fn from_raw(rows: usize, cols: usize, a: Vec<f64>) -> Result<Self> {
        if a.len() != rows * cols {
            return Err(Error::dims("payoff entries", rows * cols, a.len()));
        }
        Ok(PayoffMatrix {
            rows,
            cols,
            a,
            z_snapshot: Vec::new(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.a
    }

    pub fn z_snapshot(&self) -> &[f64] {
        &self.z_snapshot
    }

    /// `A y`
    pub fn mul_vec(&self, y: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate().take(self.rows) {
            *o = dot(&self.a[i * self.cols..(i + 1) * self.cols], y);
        }
    }

    /// `Aᵀ x`
    pub fn tr_mul_vec(&self, x: &[f64], out: &mut [f64]) {
        out[..self.cols].iter_mut().for_each(|o| *o = 0.0);
        for (i, &xi) in x.iter().enumerate().take(self.rows) {
            let row = &self.a[i * self.cols..(i + 1) * self.cols];
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * xi;
            }
        }
    }

    /// `xᵀ A y`
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter()
            .enumerate()
            .map(|(i, xi)| xi * dot(&self.a[i * self.cols..(i + 1) * self.cols], y))
            .sum()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> PayoffMatrix {
        PayoffMatrix {
            rows: self.rows,
            cols: self.cols,
            a: self.a.iter().map(|&v| f(v)).collect(),
            z_snapshot: self.z_snapshot.clone(),
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

fn check_len(context: &'static str, expected: usize, v: &[f64]) -> Result<()> {
    if v.len() != expected {
        return Err(Error::dims(context, expected, v.len()));
    }
    Ok(())
}

/// Expected utility of `+Q_i` against the community mix: `Σ_j score[i][j] y[j]`.
pub fn psi_plus(scores: &ZScoreMatrix, y: &[f64]) -> Result<Vec<f64>> {
    check_len("y", scores.strategies(), y)?;
    Ok((0..scores.factors()).map(|i| dot(scores.row(i), y)).collect())
}

/// `A[i][j] = score[i][j] * (2 z[i] - 1)`.
pub fn build_payoff(scores: &ZScoreMatrix, z: &[f64]) -> Result<PayoffMatrix> {
    check_len("z", scores.factors(), z)?;
    let cols = scores.strategies();
    let mut a = Vec::with_capacity(scores.factors() * cols);
    for (i, zi) in z.iter().enumerate() {
        let sign = 2.0 * zi - 1.0;
        a.extend(scores.row(i).iter().map(|s| s * sign));
    }
    Ok(PayoffMatrix {
        rows: scores.factors(),
        cols,
        a,
        z_snapshot: z.to_vec(),
    })
}

/// Average stakeholder payoff `xᵀ A y`.
pub fn expected_total_utility(a: &PayoffMatrix, x: &[f64], y: &[f64]) -> Result<f64> {
    check_len("x", a.rows(), x)?;
    check_len("y", a.cols(), y)?;
    Ok(a.bilinear(x, y))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UtilityReport {
    pub psi_plus: Vec<f64>,
    pub expected_total: f64,
}

pub fn utility_report(scores: &ZScoreMatrix, x: &[f64], y: &[f64], z: &[f64]) -> Result<UtilityReport> {
    let a = build_payoff(scores, z)?;
    Ok(UtilityReport {
        psi_plus: psi_plus(scores, y)?,
        expected_total: expected_total_utility(&a, x, y)?,
    })
}
