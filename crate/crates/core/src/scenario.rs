//! Scenario files (JSON, `schema_version` 1).
//!
//! A scenario names a z-score table and says where each initial condition
//! comes from. Relative paths resolve against the scenario file's directory.
//! The schema is documented in `docs/scenario.md`.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::analysis::AnalysisConfig;
use crate::dynamics::{GameState, IntegratorConfig, Method};
use crate::error::{Error, Result};
use crate::qdata::{self, FlagAssignment, InitialConditions, LoadingMatrix, ZScoreMatrix};
use crate::sampling::{self, SamplerConfig, StatementDistribution, TieRule};
use crate::simplex;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum DeriveKeyword {
    #[serde(rename = "derive-from-loadings")]
    DeriveFromLoadings,
}

/// Explicit values or a derivation from the loading table.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum FactorVector {
    Explicit(Vec<f64>),
    Derive(DeriveKeyword),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSpec {
    pub distribution: PathBuf,
    #[serde(default = "default_sequences")]
    pub n_sequences: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tie_rule: TieRule,
}

fn default_sequences() -> usize {
    SamplerConfig::default().n_sequences
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum StrategyVector {
    Explicit(Vec<f64>),
    Table {
        table: PathBuf,
    },
    Sample {
        sample: SampleSpec,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlaggingConfig {
    pub n_statements: usize,
    pub p_threshold: f64,
}

impl Default for FlaggingConfig {
    fn default() -> Self {
        FlaggingConfig {
            n_statements: 36,
            p_threshold: 0.05,
        }
    }
}

/// The on-disk scenario document.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    #[serde(default)]
    pub name: Option<String>,
    pub zscores: PathBuf,
    #[serde(default)]
    pub loadings: Option<PathBuf>,
    pub x0: FactorVector,
    pub z0: FactorVector,
    pub y0: StrategyVector,
    #[serde(default)]
    pub flagging: FlaggingConfig,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScenarioOverrides {
    pub seed: Option<u64>,
    pub t_end: Option<f64>,
    pub step: Option<f64>,
    pub method: Option<Method>,
}

/// Fully validated inputs for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedScenario {
    pub name: String,
    pub scores: ZScoreMatrix,
    pub loadings: Option<LoadingMatrix>,
    pub flags: Option<FlagAssignment>,
    pub initial: InitialConditions,
    pub integrator: IntegratorConfig,
    pub analysis: AnalysisConfig,
}

impl ResolvedScenario {
    pub fn initial_state(&self) -> GameState {
        GameState::from_initial(&self.initial)
    }
}

pub fn parse_scenario(text: &str, origin: &str) -> Result<ScenarioFile> {
    serde_json::from_str(text).map_err(|e| Error::parse(origin, e))
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<ResolvedScenario> {
    load_scenario_with(path, &ScenarioOverrides::default())
}

pub fn load_scenario_with(path: impl AsRef<Path>, overrides: &ScenarioOverrides) -> Result<ResolvedScenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    let file = parse_scenario(&text, &path.display().to_string())?;
    let base = path.parent().unwrap_or(Path::new("."));
    resolve(file, base, overrides)
}

fn resolve_path(base: &Path, p: &Path) -> Result<PathBuf> {
    let full = if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
    if !full.exists() {
        return Err(Error::FileNotFound(full));
    }
    Ok(full)
}

fn check_len(field: &str, expected: usize, v: &[f64]) -> Result<()> {
    if v.len() != expected {
        return Err(Error::validation(
            field,
            format!("expected {expected} entries, got {}", v.len()),
        ));
    }
    Ok(())
}

/// Validates a parsed scenario and materializes its inputs.
pub fn resolve(file: ScenarioFile, base: &Path, overrides: &ScenarioOverrides) -> Result<ResolvedScenario> {
    if file.schema_version != SCHEMA_VERSION {
        return Err(Error::validation(
            "schema_version",
            format!("unsupported version {} (expected {SCHEMA_VERSION})", file.schema_version),
        ));
    }
    let scores = qdata::load_zscores_path(resolve_path(base, &file.zscores)?)?;
    let k = scores.factors();

    let loadings = file
        .loadings
        .as_ref()
        .map(|p| -> Result<LoadingMatrix> {
            let l = LoadingMatrix::from_path(resolve_path(base, p)?)?;
            l.expect_factors(k)?;
            Ok(l)
        })
        .transpose()?;
    let needs_loadings = matches!(file.x0, FactorVector::Derive(_)) || matches!(file.z0, FactorVector::Derive(_));
    let loadings_or_err = || {
        loadings
            .as_ref()
            .ok_or_else(|| Error::validation("loadings", "required by derive-from-loadings"))
    };
    let flags = if needs_loadings || loadings.is_some() {
        Some(qdata::flag_stakeholders(
            loadings_or_err()?,
            file.flagging.n_statements,
            file.flagging.p_threshold,
        )?)
    } else {
        None
    };

    let x0 = match &file.x0 {
        FactorVector::Explicit(v) => {
            check_len("x0", k, v)?;
            simplex::normalize_shares("x0", v)?
        }
        FactorVector::Derive(_) => qdata::derive_x0(flags.as_ref().expect("flags computed when deriving"))?,
    };
    let z0 = match &file.z0 {
        FactorVector::Explicit(v) => {
            check_len("z0", k, v)?;
            if let Some(i) = v.iter().position(|z| !(0.0..=1.0).contains(z)) {
                return Err(Error::validation(format!("z0[{i}]"), format!("{} outside [0, 1]", v[i])));
            }
            v.clone()
        }
        FactorVector::Derive(_) => qdata::derive_z0(loadings_or_err()?),
    };
    let m = scores.strategies();
    let y0 = match &file.y0 {
        StrategyVector::Explicit(v) => {
            check_len("y0", m, v)?;
            simplex::normalize_shares("y0", v)?
        }
        StrategyVector::Table { table } => {
            let shares = qdata::load_strategy_shares_path(resolve_path(base, table)?)?;
            simplex::normalize_shares("y0.table", &shares)?
        }
        StrategyVector::Sample { sample } => {
            let dist = StatementDistribution::from_path(resolve_path(base, &sample.distribution)?)?;
            if sample.n_sequences == 0 {
                return Err(Error::validation("y0.sample.n_sequences", "must be at least 1"));
            }
            let cfg = SamplerConfig {
                n_sequences: sample.n_sequences,
                seed: overrides.seed.unwrap_or(sample.seed),
                tie_rule: sample.tie_rule,
            };
            sampling::sample_y0(&dist, &cfg)?
        }
    };

    let mut integrator = file.integrator.clone();
    if let Some(t) = overrides.t_end {
        integrator.t_end = t;
    }
    if let Some(h) = overrides.step {
        integrator.step = h;
    }
    if let Some(method) = overrides.method {
        integrator.method = method;
    }
    integrator
        .validate()
        .map_err(|e| Error::validation("integrator", e.to_string()))?;
    file.analysis.validate()?;

    let initial = InitialConditions { x0, y0, z0 };
    initial.validate(1e-12)?;
    Ok(ResolvedScenario {
        name: file.name.clone().unwrap_or_else(|| "scenario".to_string()),
        scores,
        loadings,
        flags,
        initial,
        integrator,
        analysis: file.analysis,
    })
}
