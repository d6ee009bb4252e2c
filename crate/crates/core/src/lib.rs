//! Coupled evolutionary game between stakeholder Q-factor populations and
//! community strategy populations.
//!
//! Stakeholders (`x`, one share per Q-factor) and the community (`y`, one
//! share per coded strategy) follow bimatrix replicator dynamics with payoff
//! `A(z)` and `Aᵀ`. Each factor also carries the frequency `z` of its
//! positive sign, which evolves by its own two-strategy replicator equation
//! driven by the factor's expected utility against `y`.
//!
//! Modules, bottom-up:
//! - [`strategy_space`]: the 36 coded strategies and their canonical order
//! - [`qdata`]: loadings, z-scores, flagging, initial conditions
//! - [`payoff`]: `ψ⁺`, `A(z)`, expected total utility
//! - [`dynamics`]: vector field, RK4 / RK45 integration
//! - [`sampling`]: Monte Carlo y(0) estimation
//! - [`analysis`]: fixation, transients, utility diagnostics
//! - [`scenario`], [`export`]: file formats
//!
//! The `parallel` feature (on by default) runs the Monte Carlo sampler,
//! repeated-run stability checks and trajectory sweeps on rayon. Results are
//! identical with and without it.

pub mod analysis;
pub mod bundled;
pub mod dynamics;
pub mod error;
pub mod export;
pub mod par;
pub mod payoff;
pub mod qdata;
pub mod sampling;
pub mod scenario;
pub mod simplex;
pub mod strategy_space;

pub use error::{Error, Result};
pub use par::Execution;
