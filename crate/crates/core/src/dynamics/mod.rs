//! The coupled 46-dimensional vector field and its integration.
//!
//! State layout is `[x (k), y (m), z (k)]` for `k` factors and `m`
//! strategies. The payoff matrix is rebuilt from the instantaneous `z` on
//! every evaluation, including Runge-Kutta stages.

mod integrator;
mod trajectory;

pub use integrator::{integrate, ConvergenceStop, IntegratorConfig, Method};
pub use trajectory::{IntegrationStats, Trajectory};

use serde::Serialize;

use crate::bundled;
use crate::error::{Error, Result};
use crate::par::Execution;
use crate::payoff::{build_payoff, dot, PayoffMatrix};
use crate::qdata::{InitialConditions, ZScoreMatrix};
use crate::simplex;

/// Tolerance on `|Σ - 1|` when a state is validated.
pub const STATE_DRIFT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameState {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

impl GameState {
    pub fn new(x: Vec<f64>, y: Vec<f64>, z: Vec<f64>) -> Self {
        GameState { t: 0.0, x, y, z }
    }

    pub fn from_initial(ic: &InitialConditions) -> Self {
        GameState::new(ic.x0.clone(), ic.y0.clone(), ic.z0.clone())
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let check_simplex = |name: &str, v: &[f64]| -> Result<()> {
            if let Some(i) = v.iter().position(|a| !a.is_finite() || *a < 0.0) {
                return Err(Error::InvalidState(format!("{name}[{i}] = {} is negative", v[i])));
            }
            let drift = (simplex::sum(v) - 1.0).abs();
            if drift > tol {
                return Err(Error::InvalidState(format!("{name} sums to 1 {drift:+e}")));
            }
            Ok(())
        };
        check_simplex("x", &self.x)?;
        check_simplex("y", &self.y)?;
        if self.z.len() != self.x.len() {
            return Err(Error::InvalidState(format!(
                "z has {} entries for {} factors",
                self.z.len(),
                self.x.len()
            )));
        }
        if let Some(i) = self.z.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidState(format!("z[{i}] = {} outside [0, 1]", self.z[i])));
        }
        Ok(())
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.x.len() + self.y.len() + self.z.len());
        v.extend_from_slice(&self.x);
        v.extend_from_slice(&self.y);
        v.extend_from_slice(&self.z);
        v
    }

    pub fn from_flat(t: f64, flat: &[f64], factors: usize) -> Self {
        let m = flat.len() - 2 * factors;
        GameState {
            t,
            x: flat[..factors].to_vec(),
            y: flat[factors..factors + m].to_vec(),
            z: flat[factors + m..].to_vec(),
        }
    }
}

/// Time derivative of a [`GameState`].
#[derive(Debug, Clone, PartialEq)]
pub struct GameDerivative {
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
    pub dz: Vec<f64>,
}

impl GameDerivative {
    pub fn max_norm(&self) -> f64 {
        self.dx
            .iter()
            .chain(&self.dy)
            .chain(&self.dz)
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Bimatrix replicator rates for a fixed payoff matrix:
/// `dx_i = x_i((Ay)_i - xᵀAy)` and `dy_j = y_j((Aᵀx)_j - yᵀAᵀx)`.
pub fn replicator_rates(a: &PayoffMatrix, x: &[f64], y: &[f64], dx: &mut [f64], dy: &mut [f64]) {
    let mut ay = vec![0.0; a.rows()];
    a.mul_vec(y, &mut ay);
    let mean_x = dot(x, &ay);
    for ((d, xi), p) in dx.iter_mut().zip(x).zip(&ay) {
        *d = xi * (p - mean_x);
    }
    let mut atx = vec![0.0; a.cols()];
    a.tr_mul_vec(x, &mut atx);
    let mean_y = dot(y, &atx);
    for ((d, yj), p) in dy.iter_mut().zip(y).zip(&atx) {
        *d = yj * (p - mean_y);
    }
}

/// The coupled game as a flat ODE right-hand side.
#[derive(Debug, Clone, Copy)]
pub struct CoupledGame<'a> {
    scores: &'a ZScoreMatrix,
}

impl<'a> CoupledGame<'a> {
    pub fn new(scores: &'a ZScoreMatrix) -> Self {
        CoupledGame { scores }
    }

    pub fn factors(&self) -> usize {
        self.scores.factors()
    }

    pub fn strategies(&self) -> usize {
        self.scores.strategies()
    }

    pub fn dim(&self) -> usize {
        2 * self.factors() + self.strategies()
    }

    pub fn scores(&self) -> &ZScoreMatrix {
        self.scores
    }

    pub fn rates(&self, state: &[f64], out: &mut [f64]) {
        let k = self.factors();
        let m = self.strategies();
        let (x, rest) = state.split_at(k);
        let (y, z) = rest.split_at(m);
        let (dx, rest) = out.split_at_mut(k);
        let (dy, dz) = rest.split_at_mut(m);

        let a = build_payoff(self.scores, z).expect("state layout matches score shape");
        replicator_rates(&a, x, y, dx, dy);
        for (i, d) in dz.iter_mut().enumerate() {
            let psi = dot(self.scores.row(i), y);
            *d = z[i] * (1.0 - z[i]) * 2.0 * psi;
        }
    }
}

fn check_shape(state: &GameState, scores: &ZScoreMatrix) -> Result<()> {
    if state.x.len() != scores.factors() {
        return Err(Error::dims("x", scores.factors(), state.x.len()));
    }
    if state.y.len() != scores.strategies() {
        return Err(Error::dims("y", scores.strategies(), state.y.len()));
    }
    Ok(())
}

/// Evaluates `(dx, dy, dz)` at a valid state.
pub fn vector_field(state: &GameState, scores: &ZScoreMatrix) -> Result<GameDerivative> {
    check_shape(state, scores)?;
    state.validate(STATE_DRIFT_TOL)?;
    let game = CoupledGame::new(scores);
    let mut out = vec![0.0; game.dim()];
    game.rates(&state.to_flat(), &mut out);
    let k = game.factors();
    let m = game.strategies();
    Ok(GameDerivative {
        dx: out[..k].to_vec(),
        dy: out[k..k + m].to_vec(),
        dz: out[k + m..].to_vec(),
    })
}

/// Integrates several initial states under one configuration. Each run is
/// independent; output order matches input order.
pub fn integrate_batch(
    initial: &[GameState],
    scores: &ZScoreMatrix,
    cfg: &IntegratorConfig,
    exec: Execution,
) -> Vec<Result<Trajectory>> {
    exec.map_slice(initial, |s0| integrate(s0, scores, cfg))
}

/// Bundled score table and initial conditions, integrated under `cfg`.
pub fn run_paper_scenario(cfg: &IntegratorConfig) -> Result<Trajectory> {
    let scores = bundled::zscores()?;
    let ic = bundled::initial_conditions()?;
    integrate(&GameState::from_initial(&ic), &scores, cfg)
}
