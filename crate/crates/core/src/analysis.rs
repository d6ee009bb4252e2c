//! Post-processing of trajectories: fixation, transient classification and
//! utility diagnostics.

use serde::{Deserialize, Serialize, Serializer};

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::strategy_space::{factor_label, strategy_label};

/// Slack for "nondecreasing" checks on sampled series.
pub const MONOTONE_SLACK: f64 = 1e-9;

/// Second differences smaller than this fraction of the largest one are
/// treated as zero when counting inflections.
pub const INFLECTION_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub winner_threshold: f64,
    pub z_tol: f64,
    /// Minimum rise above the initial share for a strategy to count as
    /// growing. Dips no deeper than this do not break monotonicity.
    pub rise_tol: f64,
    pub die_tol: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            winner_threshold: 0.99,
            z_tol: 0.01,
            rise_tol: 0.01,
            die_tol: 1e-4,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::validation(format!("analysis.{name}"), format!("{v} not in (0, 1)")))
            }
        };
        unit("winner_threshold", self.winner_threshold)?;
        unit("z_tol", self.z_tol)?;
        unit("rise_tol", self.rise_tol)?;
        unit("die_tol", self.die_tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Winner {
    pub index: usize,
    pub label: String,
    pub share: f64,
    /// First sample time from which the share stays above the threshold.
    pub t_crossing: f64,
}

/// Limit of one sign frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZLimit {
    Zero,
    One,
    Unresolved,
}

impl Serialize for ZLimit {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ZLimit::Zero => s.serialize_u8(0),
            ZLimit::One => s.serialize_u8(1),
            ZLimit::Unresolved => s.serialize_str("unresolved"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixationReport {
    pub winner_x: Option<Winner>,
    pub winner_y: Option<Winner>,
    pub z_limits: Vec<ZLimit>,
    pub converged: bool,
    pub t_convergence: Option<f64>,
}

fn crossing_time(times: &[f64], series: &[f64], threshold: f64) -> Option<f64> {
    // last sample at or below threshold; the crossing is the one after it
    match series.iter().rposition(|v| *v <= threshold) {
        None => times.first().copied(),
        Some(k) if k + 1 < series.len() => Some(times[k + 1]),
        Some(_) => None,
    }
}

fn winner_of(
    traj: &Trajectory,
    shares: &[f64],
    threshold: f64,
    series: impl Fn(usize) -> Vec<f64>,
    label: impl Fn(usize) -> String,
) -> Option<Winner> {
    let (index, &share) = shares
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    if share <= threshold {
        return None;
    }
    let times: Vec<f64> = traj.times().collect();
    let t_crossing = crossing_time(&times, &series(index), threshold)?;
    Some(Winner {
        index,
        label: label(index),
        share,
        t_crossing,
    })
}

/// Inspects the terminal state for dominant strategies and sign limits.
pub fn detect_fixation(traj: &Trajectory, cfg: &AnalysisConfig) -> Result<FixationReport> {
    let last = traj.terminal().ok_or(Error::EmptyTrajectory)?;
    let m = last.y.len();
    let winner_x = winner_of(traj, &last.x, cfg.winner_threshold, |i| traj.x_series(i), factor_label);
    let winner_y = winner_of(
        traj,
        &last.y,
        cfg.winner_threshold,
        |j| traj.y_series(j),
        |j| strategy_label(j, m),
    );
    let z_limits: Vec<ZLimit> = last
        .z
        .iter()
        .map(|&z| {
            if z > 1.0 - cfg.z_tol {
                ZLimit::One
            } else if z < cfg.z_tol {
                ZLimit::Zero
            } else {
                ZLimit::Unresolved
            }
        })
        .collect();
    let converged = winner_x.is_some()
        && winner_y.is_some()
        && z_limits.iter().all(|l| *l != ZLimit::Unresolved);
    let t_convergence = match (&winner_x, &winner_y) {
        (Some(a), Some(b)) if converged => Some(a.t_crossing.max(b.t_crossing)),
        _ => None,
    };
    Ok(FixationReport {
        winner_x,
        winner_y,
        z_limits,
        converged,
        t_convergence,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransientClass {
    NeverGrows,
    GrowThenDie,
    MonotoneWinner,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyTransient {
    pub index: usize,
    pub label: String,
    pub class: TransientClass,
    pub initial: f64,
    pub terminal: f64,
    pub peak_value: f64,
    pub peak_time: f64,
    pub inflections: usize,
    /// Monotone winner with exactly one inflection.
    pub sigmoidal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransientProfile {
    pub strategies: Vec<StrategyTransient>,
    pub grow_then_die: Vec<String>,
    pub monotone_winners: Vec<String>,
}

pub fn is_nondecreasing(series: &[f64], slack: f64) -> bool {
    series.windows(2).all(|w| w[1] >= w[0] - slack)
}

/// Largest drop below the running maximum.
pub fn max_drawdown(series: &[f64]) -> f64 {
    let mut peak = f64::NEG_INFINITY;
    let mut worst = 0.0f64;
    for &v in series {
        peak = peak.max(v);
        worst = worst.max(peak - v);
    }
    worst
}

/// Sign changes of the second divided difference, ignoring entries below
/// [`INFLECTION_REL_TOL`] of the largest magnitude.
pub fn count_inflections(times: &[f64], series: &[f64]) -> usize {
    if series.len() < 3 {
        return 0;
    }
    let d2: Vec<f64> = (1..series.len() - 1)
        .map(|k| {
            let left = (series[k] - series[k - 1]) / (times[k] - times[k - 1]);
            let right = (series[k + 1] - series[k]) / (times[k + 1] - times[k]);
            2.0 * (right - left) / (times[k + 1] - times[k - 1])
        })
        .collect();
    let scale = d2.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0;
    }
    let floor = scale * INFLECTION_REL_TOL;
    let signs: Vec<bool> = d2.iter().filter(|v| v.abs() > floor).map(|v| *v > 0.0).collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

pub fn classify_transients(traj: &Trajectory, rise_tol: f64, die_tol: f64) -> Result<TransientProfile> {
    let last = traj.terminal().ok_or(Error::EmptyTrajectory)?;
    let m = last.y.len();
    let times: Vec<f64> = traj.times().collect();
    let strategies: Vec<StrategyTransient> = (0..m)
        .map(|j| {
            let series = traj.y_series(j);
            let initial = series[0];
            let terminal = *series.last().unwrap();
            let (peak_k, &peak_value) = series
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
                .unwrap();
            let rose = peak_value > initial + rise_tol;
            let class = if rose && terminal < die_tol {
                TransientClass::GrowThenDie
            } else if rose && max_drawdown(&series) <= rise_tol {
                TransientClass::MonotoneWinner
            } else if !rose {
                TransientClass::NeverGrows
            } else {
                TransientClass::Other
            };
            let inflections = count_inflections(&times, &series);
            StrategyTransient {
                index: j,
                label: strategy_label(j, m),
                class,
                initial,
                terminal,
                peak_value,
                peak_time: times[peak_k],
                inflections,
                sigmoidal: class == TransientClass::MonotoneWinner && inflections == 1,
            }
        })
        .collect();
    let pick = |c: TransientClass| {
        strategies
            .iter()
            .filter(|s| s.class == c)
            .map(|s| s.label.clone())
            .collect()
    };
    Ok(TransientProfile {
        grow_then_die: pick(TransientClass::GrowThenDie),
        monotone_winners: pick(TransientClass::MonotoneWinner),
        strategies,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UtilityDiagnostics {
    pub initial: f64,
    pub terminal: f64,
    pub min: f64,
    pub max: f64,
    /// Earliest sample time after which the series is nondecreasing.
    pub monotone_after: f64,
}

pub fn utility_diagnostics(traj: &Trajectory) -> Result<UtilityDiagnostics> {
    let u = &traj.utility_series;
    if u.is_empty() || traj.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let mut start = u.len() - 1;
    while start > 0 && u[start] >= u[start - 1] - MONOTONE_SLACK {
        start -= 1;
    }
    Ok(UtilityDiagnostics {
        initial: u[0],
        terminal: u[u.len() - 1],
        min: u.iter().copied().fold(f64::INFINITY, f64::min),
        max: u.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        monotone_after: traj.samples[start].t,
    })
}

/// Everything written to `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub fixation: FixationReport,
    pub transients: TransientProfile,
    pub utility: UtilityDiagnostics,
    pub thresholds: AnalysisConfig,
}

pub const REPORT_SCHEMA_VERSION: u32 = 1;

pub fn analyze(traj: &Trajectory, cfg: &AnalysisConfig) -> Result<AnalysisReport> {
    Ok(AnalysisReport {
        schema_version: REPORT_SCHEMA_VERSION,
        fixation: detect_fixation(traj, cfg)?,
        transients: classify_transients(traj, cfg.rise_tol, cfg.die_tol)?,
        utility: utility_diagnostics(traj)?,
        thresholds: *cfg,
    })
}

impl AnalysisReport {
    /// Plain-text summary for terminals and logs.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let fmt_winner = |w: &Option<Winner>| match w {
            Some(w) => format!("{} (share {:.6}, from t = {})", w.label, w.share, w.t_crossing),
            None => "none".to_string(),
        };
        out.push_str(&format!("stakeholder winner: {}\n", fmt_winner(&self.fixation.winner_x)));
        out.push_str(&format!("strategy winner:    {}\n", fmt_winner(&self.fixation.winner_y)));
        let z: Vec<String> = self
            .fixation
            .z_limits
            .iter()
            .map(|l| match l {
                ZLimit::Zero => "0".into(),
                ZLimit::One => "1".into(),
                ZLimit::Unresolved => "?".into(),
            })
            .collect();
        out.push_str(&format!("sign limits:        ({})\n", z.join(", ")));
        out.push_str(&format!("converged:          {}\n", self.fixation.converged));
        let list = |v: &[String]| if v.is_empty() { "none".to_string() } else { v.join(", ") };
        out.push_str(&format!("grow-then-die:      {}\n", list(&self.transients.grow_then_die)));
        out.push_str(&format!("monotone winners:   {}\n", list(&self.transients.monotone_winners)));
        out.push_str(&format!(
            "utility:            {:.6} -> {:.6} (nondecreasing from t = {})\n",
            self.utility.initial, self.utility.terminal, self.utility.monotone_after
        ));
        out
    }
}
