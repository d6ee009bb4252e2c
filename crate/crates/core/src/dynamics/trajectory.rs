use serde::Serialize;

use super::GameState;
use crate::error::{Error, Result};
use crate::payoff::utility_report;
use crate::qdata::ZScoreMatrix;

/// Counters collected while integrating.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IntegrationStats {
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub rhs_evals: usize,
    /// Largest `|Σx - 1|` seen after a step, before any renormalization.
    pub max_x_drift: f64,
    /// Same for `y`.
    pub max_y_drift: f64,
    pub renormalizations: usize,
    pub clamped_entries: usize,
    pub stopped_early: bool,
}

/// Time-ordered samples with derived utility series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub samples: Vec<GameState>,
    /// `xᵀ A(z) y` at each sample.
    pub utility_series: Vec<f64>,
    /// `ψ⁺` at each sample.
    pub psi_series: Vec<Vec<f64>>,
    pub stats: IntegrationStats,
}

impl Trajectory {
    /// Builds from samples, computing the derived series from `scores`.
    pub fn from_samples(samples: Vec<GameState>, scores: &ZScoreMatrix) -> Result<Self> {
        let mut traj = Trajectory {
            samples: Vec::with_capacity(samples.len()),
            utility_series: Vec::with_capacity(samples.len()),
            psi_series: Vec::with_capacity(samples.len()),
            stats: IntegrationStats::default(),
        };
        for s in samples {
            traj.push(s, scores)?;
        }
        Ok(traj)
    }

    pub(crate) fn push(&mut self, s: GameState, scores: &ZScoreMatrix) -> Result<()> {
        if let Some(last) = self.samples.last() {
            if s.t <= last.t {
                return Err(Error::InvalidState(format!(
                    "sample time {} does not follow {}",
                    s.t, last.t
                )));
            }
        }
        let report = utility_report(scores, &s.x, &s.y, &s.z)?;
        self.utility_series.push(report.expected_total);
        self.psi_series.push(report.psi_plus);
        self.samples.push(s);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn initial(&self) -> Option<&GameState> {
        self.samples.first()
    }

    pub fn terminal(&self) -> Option<&GameState> {
        self.samples.last()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }

    /// Time series of `y[j]`.
    pub fn y_series(&self, j: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s.y[j]).collect()
    }

    pub fn x_series(&self, i: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s.x[i]).collect()
    }

    pub fn z_series(&self, i: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s.z[i]).collect()
    }

    /// Keeps every `stride`-th sample plus the terminal one.
    pub fn subsample(&self, stride: usize) -> Trajectory {
        let stride = stride.max(1);
        let n = self.samples.len();
        let keep: Vec<usize> = (0..n).filter(|i| i % stride == 0 || *i + 1 == n).collect();
        Trajectory {
            samples: keep.iter().map(|&i| self.samples[i].clone()).collect(),
            utility_series: keep.iter().map(|&i| self.utility_series[i]).collect(),
            psi_series: keep.iter().map(|&i| self.psi_series[i].clone()).collect(),
            stats: self.stats.clone(),
        }
    }

    /// Same samples with every time multiplied by `factor > 0`.
    pub fn rescale_time(&self, factor: f64) -> Trajectory {
        let mut out = self.clone();
        out.samples.iter_mut().for_each(|s| s.t *= factor);
        out
    }
}
