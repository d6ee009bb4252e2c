//! Explicit Runge-Kutta integration with simplex guards.
//!
//! After every accepted step, entries of `x` and `y` in `[-clamp_eps, 0)`
//! are clamped to zero, `z` is clamped into `[0, 1]` with the same slack,
//! and `x`, `y` are renormalized whenever their sum drifts more than
//! `renorm_tol` from 1. Larger violations are integration failures.

use serde::{Deserialize, Serialize};

use super::{check_shape, CoupledGame, GameState, IntegrationStats, Trajectory, STATE_DRIFT_TOL};
use crate::error::{Error, Result};
use crate::qdata::ZScoreMatrix;
use crate::simplex;

/// Smallest step the adaptive controller may take.
pub const MIN_STEP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Classical fixed-step fourth-order Runge-Kutta.
    Rk4,
    /// Dormand-Prince 5(4) with adaptive steps.
    Rk45,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rk4" => Ok(Method::Rk4),
            "rk45" => Ok(Method::Rk45),
            other => Err(Error::InvalidConfig(format!("unknown method `{other}`"))),
        }
    }
}

/// Stop once the vector field max-norm stays below `tol` for
/// `consecutive` recorded samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConvergenceStop {
    pub tol: f64,
    pub consecutive: usize,
}

impl Default for ConvergenceStop {
    fn default() -> Self {
        ConvergenceStop {
            tol: 1e-10,
            consecutive: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Fixed step for RK4, initial step for RK45.
    pub step: f64,
    pub t_end: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub renorm_tol: f64,
    pub clamp_eps: f64,
    /// Record every n-th accepted step; the final state is always recorded.
    pub sample_stride: usize,
    pub early_stop: Option<ConvergenceStop>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            method: Method::Rk4,
            step: 0.01,
            t_end: 50.0,
            abs_tol: 1e-9,
            rel_tol: 1e-9,
            renorm_tol: 1e-12,
            clamp_eps: 1e-12,
            sample_stride: 1,
            early_stop: None,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("step", self.step),
            ("t_end", self.t_end),
            ("abs_tol", self.abs_tol),
            ("rel_tol", self.rel_tol),
            ("renorm_tol", self.renorm_tol),
            ("clamp_eps", self.clamp_eps),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if self.sample_stride == 0 {
            return Err(Error::InvalidConfig("sample_stride must be at least 1".into()));
        }
        if let Some(stop) = &self.early_stop {
            if stop.tol.is_nan() || stop.tol <= 0.0 || stop.consecutive == 0 {
                return Err(Error::InvalidConfig("early_stop needs tol > 0 and consecutive >= 1".into()));
            }
        }
        Ok(())
    }
}

struct Workspace<'a> {
    game: CoupledGame<'a>,
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    evals: usize,
}

impl<'a> Workspace<'a> {
    fn new(game: CoupledGame<'a>) -> Self {
        let n = game.dim();
        Workspace {
            game,
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
            evals: 0,
        }
    }

    fn eval(&mut self, stage: usize) {
        self.game.rates(&self.tmp, &mut self.k[stage]);
        self.evals += 1;
    }

    /// `tmp = y + h Σ a_s k_s`
    fn stage_input(&mut self, y: &[f64], h: f64, coeffs: &[f64]) {
        for (i, t) in self.tmp.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (s, c) in coeffs.iter().enumerate() {
                if *c != 0.0 {
                    acc += c * self.k[s][i];
                }
            }
            *t = y[i] + h * acc;
        }
    }

    fn rk4(&mut self, y: &[f64], h: f64, out: &mut [f64]) {
        self.tmp.copy_from_slice(y);
        self.eval(0);
        self.stage_input(y, h, &[0.5]);
        self.eval(1);
        self.stage_input(y, h, &[0.0, 0.5]);
        self.eval(2);
        self.stage_input(y, h, &[0.0, 0.0, 1.0]);
        self.eval(3);
        for (i, o) in out.iter_mut().enumerate() {
            let k = &self.k;
            *o = y[i] + h / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
        }
    }

    /// One Dormand-Prince step; returns the scaled error norm.
    fn dopri(&mut self, y: &[f64], h: f64, out: &mut [f64], atol: f64, rtol: f64) -> f64 {
        const A: [&[f64]; 6] = [
            &[1.0 / 5.0],
            &[3.0 / 40.0, 9.0 / 40.0],
            &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
            &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
            &[9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0],
            &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
        ];
        // fifth-order weights minus embedded fourth-order weights
        const E: [f64; 7] = [
            71.0 / 57600.0,
            0.0,
            -71.0 / 16695.0,
            71.0 / 1920.0,
            -17253.0 / 339200.0,
            22.0 / 525.0,
            -1.0 / 40.0,
        ];
        self.tmp.copy_from_slice(y);
        self.eval(0);
        for (s, row) in A.iter().enumerate() {
            self.stage_input(y, h, row);
            self.eval(s + 1);
        }
        // the last stage input is the fifth-order solution
        out.copy_from_slice(&self.tmp);
        let mut err: f64 = 0.0;
        for i in 0..y.len() {
            let e: f64 = h * (0..7).map(|s| E[s] * self.k[s][i]).sum::<f64>();
            let scale = atol + rtol * y[i].abs().max(out[i].abs());
            err = err.max(e.abs() / scale);
        }
        err
    }
}

/// Applies clamping and renormalization in place.
fn project(
    state: &mut [f64],
    factors: usize,
    cfg: &IntegratorConfig,
    stats: &mut IntegrationStats,
) -> std::result::Result<(), String> {
    let m = state.len() - 2 * factors;
    let (x, rest) = state.split_at_mut(factors);
    let (y, z) = rest.split_at_mut(m);

    for (name, block, drift) in [
        ("x", x, &mut stats.max_x_drift),
        ("y", y, &mut stats.max_y_drift),
    ] {
        for (i, v) in block.iter_mut().enumerate() {
            if !v.is_finite() {
                return Err(format!("{name}[{i}] is not finite"));
            }
            if *v < 0.0 {
                if *v < -cfg.clamp_eps {
                    return Err(format!("{name}[{i}] = {v:e} below -clamp_eps"));
                }
                *v = 0.0;
                stats.clamped_entries += 1;
            }
        }
        let d = (simplex::sum(block) - 1.0).abs();
        *drift = drift.max(d);
        if d > cfg.renorm_tol {
            simplex::renormalize(block);
            stats.renormalizations += 1;
        }
    }
    for (i, v) in z.iter_mut().enumerate() {
        if !v.is_finite() {
            return Err(format!("z[{i}] is not finite"));
        }
        if *v < 0.0 || *v > 1.0 {
            if *v < -cfg.clamp_eps || *v > 1.0 + cfg.clamp_eps {
                return Err(format!("z[{i}] = {v} outside [0, 1]"));
            }
            *v = v.clamp(0.0, 1.0);
            stats.clamped_entries += 1;
        }
    }
    Ok(())
}

struct Recorder<'a> {
    traj: Trajectory,
    scores: &'a ZScoreMatrix,
    factors: usize,
    stop: Option<ConvergenceStop>,
    quiet_samples: usize,
    field: Vec<f64>,
}

impl Recorder<'_> {
    /// Records a sample; returns true when the convergence stop fires.
    fn record(&mut self, t: f64, state: &[f64], game: &CoupledGame) -> Result<bool> {
        self.traj
            .push(GameState::from_flat(t, state, self.factors), self.scores)?;
        let Some(stop) = self.stop else {
            return Ok(false);
        };
        game.rates(state, &mut self.field);
        let norm = self.field.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if norm < stop.tol {
            self.quiet_samples += 1;
        } else {
            self.quiet_samples = 0;
        }
        Ok(self.quiet_samples >= stop.consecutive)
    }
}

/// Integrates from `s0` (taken as `t = 0`) to `cfg.t_end`.
pub fn integrate(s0: &GameState, scores: &ZScoreMatrix, cfg: &IntegratorConfig) -> Result<Trajectory> {
    cfg.validate()?;
    check_shape(s0, scores)?;
    s0.validate(STATE_DRIFT_TOL)?;

    let game = CoupledGame::new(scores);
    let factors = game.factors();
    let mut ws = Workspace::new(game);
    let mut stats = IntegrationStats::default();
    let mut recorder = Recorder {
        traj: Trajectory {
            samples: Vec::new(),
            utility_series: Vec::new(),
            psi_series: Vec::new(),
            stats: IntegrationStats::default(),
        },
        scores,
        factors,
        stop: cfg.early_stop,
        quiet_samples: 0,
        field: vec![0.0; game.dim()],
    };

    let mut y = s0.to_flat();
    let mut next = vec![0.0; y.len()];
    let mut stopped = recorder.record(0.0, &y, &game)?;

    match cfg.method {
        Method::Rk4 => {
            let n_steps = ((cfg.t_end / cfg.step) - 1e-9).ceil().max(1.0) as usize;
            let time_at = |k: usize| {
                if k >= n_steps {
                    cfg.t_end
                } else {
                    k as f64 * cfg.step
                }
            };
            for k in 0..n_steps {
                if stopped {
                    break;
                }
                let (t0, t1) = (time_at(k), time_at(k + 1));
                ws.rk4(&y, t1 - t0, &mut next);
                project(&mut next, factors, cfg, &mut stats)
                    .map_err(|m| Error::InvalidState(format!("at t = {t1}: {m}")))?;
                std::mem::swap(&mut y, &mut next);
                stats.accepted_steps += 1;
                if stats.accepted_steps % cfg.sample_stride == 0 || k + 1 == n_steps {
                    stopped = recorder.record(t1, &y, &game)?;
                }
            }
        }
        Method::Rk45 => {
            let mut t = 0.0;
            let mut h = cfg.step.min(cfg.t_end);
            while !stopped && t < cfg.t_end {
                let last = t + h >= cfg.t_end;
                let h_try = if last { cfg.t_end - t } else { h };
                let err = ws.dopri(&y, h_try, &mut next, cfg.abs_tol, cfg.rel_tol);
                let mut trial_stats = stats.clone();
                let ok = err <= 1.0
                    && err.is_finite()
                    && project(&mut next, factors, cfg, &mut trial_stats).is_ok();
                let factor = if err.is_finite() && err > 0.0 {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                } else if err == 0.0 {
                    5.0
                } else {
                    0.2
                };
                if ok {
                    stats = trial_stats;
                    t = if last { cfg.t_end } else { t + h_try };
                    std::mem::swap(&mut y, &mut next);
                    stats.accepted_steps += 1;
                    if stats.accepted_steps % cfg.sample_stride == 0 || t >= cfg.t_end {
                        stopped = recorder.record(t, &y, &game)?;
                    }
                    h = h_try * factor;
                } else {
                    stats.rejected_steps += 1;
                    h = h_try * factor.min(0.5);
                    if h < MIN_STEP {
                        return Err(Error::StepSizeUnderflow { t, min: MIN_STEP });
                    }
                }
            }
        }
    }

    stats.rhs_evals = ws.evals;
    stats.stopped_early = stopped && recorder.traj.terminal().is_some_and(|s| s.t < cfg.t_end);
    let mut traj = recorder.traj;
    traj.stats = stats;
    Ok(traj)
}
