//! The published study's data set, compiled into the library.

use crate::error::Result;
use crate::qdata::{self, InitialConditions, LoadingMatrix, ZScoreMatrix};
use crate::simplex;

pub const ZSCORES_CSV: &str = include_str!("../../../data/zscores.csv");
pub const LOADINGS_CSV: &str = include_str!("../../../data/loadings.csv");
pub const Y0_CSV: &str = include_str!("../../../data/y0.csv");

/// Share of stakeholders flagged on each factor (7, 3, 3, 4, 2 of 20).
pub const PAPER_X0_SHARES: [f64; 5] = [0.35, 0.15, 0.15, 0.20, 0.10];

/// Published initial frequencies of the positive sign of each factor.
pub const PAPER_Z0: [f64; 5] = [0.39, 0.33, 0.39, 0.28, 0.28];

pub fn zscores() -> Result<ZScoreMatrix> {
    qdata::load_zscores(ZSCORES_CSV.as_bytes())
}

pub fn loadings() -> Result<LoadingMatrix> {
    LoadingMatrix::from_reader(LOADINGS_CSV.as_bytes())
}

/// Published y(0) shares as printed (they sum to 0.9996).
pub fn y0_shares() -> Result<Vec<f64>> {
    qdata::load_strategy_shares(Y0_CSV.as_bytes())
}

/// x(0), y(0), z(0) with the share vectors renormalized onto the simplex.
pub fn initial_conditions() -> Result<InitialConditions> {
    Ok(InitialConditions {
        x0: simplex::normalize_shares("x0", &PAPER_X0_SHARES)?,
        y0: simplex::normalize_shares("y0", &y0_shares()?)?,
        z0: PAPER_Z0.to_vec(),
    })
}
