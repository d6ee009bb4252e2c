//! Q-methodology inputs: stakeholder loadings, factor z-scores, automatic
//! flagging, and the initial conditions derived from them.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::simplex;
use crate::strategy_space::{StrategyCode, StrategySpace, STRATEGY_COUNT};

/// Largest magnitude on the Q-sort grid.
pub const SCORE_LIMIT: f64 = 5.0;

pub(crate) fn csv_reader<R: Read>(source: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(source)
}

pub(crate) fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })
}

fn parse_f64(location: &str, text: &str) -> Result<f64> {
    text.parse::<f64>()
        .map_err(|e| Error::parse(location, format!("`{text}`: {e}")))
}

/// Stakeholder-by-factor loadings, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadingMatrix {
    stakeholder_ids: Vec<String>,
    factor_count: usize,
    loadings: Vec<f64>,
}

impl LoadingMatrix {
    pub fn new(stakeholder_ids: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::validation("loadings", "no stakeholder rows"));
        }
        if stakeholder_ids.len() != rows.len() {
            return Err(Error::dims("stakeholder labels", rows.len(), stakeholder_ids.len()));
        }
        let factor_count = rows[0].len();
        if factor_count == 0 {
            return Err(Error::validation("loadings", "no factor columns"));
        }
        let mut loadings = Vec::with_capacity(rows.len() * factor_count);
        for (s, row) in rows.iter().enumerate() {
            if row.len() != factor_count {
                return Err(Error::dims("loading row", factor_count, row.len()));
            }
            for (f, &v) in row.iter().enumerate() {
                if !v.is_finite() || v.abs() > 1.0 {
                    return Err(Error::validation(
                        format!("loadings[{}][{}]", stakeholder_ids[s], f),
                        format!("loading {v} outside [-1, 1]"),
                    ));
                }
            }
            loadings.extend_from_slice(row);
        }
        Ok(LoadingMatrix {
            stakeholder_ids,
            factor_count,
            loadings,
        })
    }

    /// Reads `stakeholder,Q1,...,Qk` CSV; `#` lines are comments.
    pub fn from_reader<R: Read>(source: R) -> Result<Self> {
        let mut rdr = csv_reader(source);
        let headers = rdr
            .headers()
            .map_err(|e| Error::parse("loadings header", e))?
            .clone();
        if headers.len() < 2 {
            return Err(Error::validation("loadings", "expected an id column and at least one factor column"));
        }
        let mut ids = Vec::new();
        let mut rows = Vec::new();
        for (n, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::parse(format!("loadings row {}", n + 1), e))?;
            if rec.len() != headers.len() {
                return Err(Error::dims("loading row", headers.len(), rec.len()));
            }
            ids.push(rec[0].to_string());
            let row = rec
                .iter()
                .skip(1)
                .map(|t| parse_f64(&format!("loadings row {}", n + 1), t))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        LoadingMatrix::new(ids, rows)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_reader(open(path.as_ref())?)
    }

    pub fn stakeholder_count(&self) -> usize {
        self.stakeholder_ids.len()
    }

    pub fn factor_count(&self) -> usize {
        self.factor_count
    }

    pub fn stakeholder_ids(&self) -> &[String] {
        &self.stakeholder_ids
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.loadings[s * self.factor_count..(s + 1) * self.factor_count]
    }

    pub fn get(&self, s: usize, f: usize) -> f64 {
        self.row(s)[f]
    }

    pub fn expect_factors(&self, expected: usize) -> Result<()> {
        if self.factor_count != expected {
            return Err(Error::dims("loading factor columns", expected, self.factor_count));
        }
        Ok(())
    }
}

/// Factor scores per strategy: rows are Q-factors, columns strategies.
///
/// The shape is free so that reduced games can reuse the machinery; the
/// CSV loader pins the canonical 36-strategy columns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZScoreMatrix {
    factors: usize,
    strategies: usize,
    scores: Vec<f64>,
}

impl ZScoreMatrix {
    /// Builds from factor rows. Every entry must be an integer in [-5, 5].
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::validation("zscores", "empty score matrix"));
        }
        let strategies = rows[0].len();
        let mut scores = Vec::with_capacity(rows.len() * strategies);
        for row in rows {
            if row.len() != strategies {
                return Err(Error::dims("score row", strategies, row.len()));
            }
            for (j, &v) in row.iter().enumerate() {
                check_score(&crate::strategy_space::strategy_label(j, strategies), v)?;
            }
            scores.extend_from_slice(row);
        }
        Ok(ZScoreMatrix {
            factors: rows.len(),
            strategies,
            scores,
        })
    }

    pub fn factors(&self) -> usize {
        self.factors
    }

    pub fn strategies(&self) -> usize {
        self.strategies
    }

    pub fn get(&self, factor: usize, strategy: usize) -> f64 {
        self.scores[factor * self.strategies + strategy]
    }

    pub fn row(&self, factor: usize) -> &[f64] {
        &self.scores[factor * self.strategies..(factor + 1) * self.strategies]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.scores
    }

    pub fn max_abs(&self) -> f64 {
        self.scores.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn check_score(strategy: &str, value: f64) -> Result<()> {
    if !value.is_finite() || value.fract() != 0.0 || value.abs() > SCORE_LIMIT {
        return Err(Error::ScoreOutOfRange {
            strategy: strategy.to_string(),
            value,
        });
    }
    Ok(())
}

/// Reads a `strategy,Q1,...,Qk` table keyed by strategy code into canonical
/// column order. Row order in the source is irrelevant.
pub fn load_zscores<R: Read>(source: R) -> Result<ZScoreMatrix> {
    let mut rdr = csv_reader(source);
    let headers = rdr
        .headers()
        .map_err(|e| Error::parse("zscores header", e))?
        .clone();
    let factors = headers.len().saturating_sub(1);
    if factors == 0 {
        return Err(Error::validation("zscores", "expected a strategy column and at least one factor column"));
    }
    let mut columns: Vec<Option<Vec<f64>>> = vec![None; STRATEGY_COUNT];
    for (n, rec) in rdr.records().enumerate() {
        let location = format!("zscores row {}", n + 1);
        let rec = rec.map_err(|e| Error::parse(&location, e))?;
        if rec.len() != headers.len() {
            return Err(Error::dims("score row", headers.len(), rec.len()));
        }
        let code = StrategyCode::parse(&rec[0])?;
        let label = code.to_string();
        let values = rec
            .iter()
            .skip(1)
            .map(|t| {
                let v = parse_f64(&location, t)?;
                check_score(&label, v)?;
                Ok(v)
            })
            .collect::<Result<Vec<_>>>()?;
        let slot = &mut columns[code.index()];
        if slot.is_some() {
            return Err(Error::DuplicateStrategy(label));
        }
        *slot = Some(values);
    }
    let space = StrategySpace::canonical();
    let mut rows = vec![vec![0.0; STRATEGY_COUNT]; factors];
    for (j, col) in columns.into_iter().enumerate() {
        let col = col.ok_or_else(|| Error::MissingStrategy(space[j].to_string()))?;
        for (i, v) in col.into_iter().enumerate() {
            rows[i][j] = v;
        }
    }
    ZScoreMatrix::from_rows(&rows)
}

pub fn load_zscores_path(path: impl AsRef<Path>) -> Result<ZScoreMatrix> {
    load_zscores(open(path.as_ref())?)
}

/// Reads a `strategy,share` table into canonical order, without normalizing.
pub fn load_strategy_shares<R: Read>(source: R) -> Result<Vec<f64>> {
    let mut rdr = csv_reader(source);
    let mut shares: Vec<Option<f64>> = vec![None; STRATEGY_COUNT];
    for (n, rec) in rdr.records().enumerate() {
        let location = format!("share row {}", n + 1);
        let rec = rec.map_err(|e| Error::parse(&location, e))?;
        if rec.len() != 2 {
            return Err(Error::dims("share row", 2, rec.len()));
        }
        let code = StrategyCode::parse(&rec[0])?;
        let v = parse_f64(&location, &rec[1])?;
        let slot = &mut shares[code.index()];
        if slot.is_some() {
            return Err(Error::DuplicateStrategy(code.to_string()));
        }
        *slot = Some(v);
    }
    let space = StrategySpace::canonical();
    shares
        .into_iter()
        .enumerate()
        .map(|(j, v)| v.ok_or_else(|| Error::MissingStrategy(space[j].to_string())))
        .collect()
}

pub fn load_strategy_shares_path(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    load_strategy_shares(open(path.as_ref())?)
}

/// Two-sided significance level for the loading threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Significance {
    P05,
    P01,
}

impl Significance {
    pub fn z_critical(self) -> f64 {
        match self {
            Significance::P05 => 1.96,
            Significance::P01 => 2.58,
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Significance::P05 => 0.05,
            Significance::P01 => 0.01,
        }
    }

    /// Loading magnitude a flag must exceed for a sort of `n_statements` items.
    pub fn loading_threshold(self, n_statements: usize) -> f64 {
        self.z_critical() / (n_statements as f64).sqrt()
    }
}

impl TryFrom<f64> for Significance {
    type Error = Error;

    fn try_from(p: f64) -> Result<Self> {
        if (p - 0.05).abs() < 1e-12 {
            Ok(Significance::P05)
        } else if (p - 0.01).abs() < 1e-12 {
            Ok(Significance::P01)
        } else {
            Err(Error::UnsupportedSignificance(p))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LoadingSign {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Flag {
    pub factor: usize,
    pub sign: LoadingSign,
    pub loading: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlagAssignment {
    pub stakeholder_ids: Vec<String>,
    pub factor_count: usize,
    pub assignments: Vec<Option<Flag>>,
    pub threshold: f64,
}

impl FlagAssignment {
    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.factor_count];
        for flag in self.assignments.iter().flatten() {
            counts[flag.factor] += 1;
        }
        counts
    }

    pub fn unassigned(&self) -> Vec<&str> {
        self.stakeholder_ids
            .iter()
            .zip(&self.assignments)
            .filter(|(_, a)| a.is_none())
            .map(|(id, _)| id.as_str())
            .collect()
    }

    pub fn flagged_total(&self) -> usize {
        self.assignments.iter().flatten().count()
    }

    /// Flag counts over the whole sample, unassigned stakeholders included in
    /// the denominator. These are population shares, not yet a simplex point.
    pub fn fractions(&self) -> Vec<f64> {
        let total = self.stakeholder_ids.len() as f64;
        self.counts().iter().map(|&c| c as f64 / total).collect()
    }
}

/// Automatic flagging: stakeholder `s` goes to factor `f` when the loading
/// is significant (`|L| > z_crit / sqrt(n_statements)`) and its square
/// exceeds the sum of squares of the other loadings. Among qualifying
/// factors the largest magnitude wins.
pub fn flag_stakeholders(
    loadings: &LoadingMatrix,
    n_statements: usize,
    p_threshold: f64,
) -> Result<FlagAssignment> {
    if n_statements < 2 {
        return Err(Error::InvalidConfig(format!(
            "n_statements must be at least 2, got {n_statements}"
        )));
    }
    let significance = Significance::try_from(p_threshold)?;
    let threshold = significance.loading_threshold(n_statements);
    let assignments = (0..loadings.stakeholder_count())
        .map(|s| {
            let row = loadings.row(s);
            let total_sq: f64 = row.iter().map(|v| v * v).sum();
            row.iter()
                .enumerate()
                .filter(|(_, &v)| v.abs() > threshold && v * v > total_sq - v * v)
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                .map(|(f, &v)| Flag {
                    factor: f,
                    sign: if v < 0.0 {
                        LoadingSign::Negative
                    } else {
                        LoadingSign::Positive
                    },
                    loading: v,
                })
        })
        .collect();
    Ok(FlagAssignment {
        stakeholder_ids: loadings.stakeholder_ids.clone(),
        factor_count: loadings.factor_count,
        assignments,
        threshold,
    })
}

/// x(0) on the simplex: flag fractions renormalized over the flagged mass.
pub fn derive_x0(flags: &FlagAssignment) -> Result<Vec<f64>> {
    if flags.flagged_total() == 0 {
        return Err(Error::NoFlaggedStakeholders);
    }
    simplex::normalize_shares("x0", &flags.fractions())
}

/// Naive z(0) candidate: share of stakeholders with a strictly positive
/// loading on each factor.
pub fn derive_z0(loadings: &LoadingMatrix) -> Vec<f64> {
    let n = loadings.stakeholder_count() as f64;
    (0..loadings.factor_count())
        .map(|f| {
            let positive = (0..loadings.stakeholder_count())
                .filter(|&s| loadings.get(s, f) > 0.0)
                .count();
            positive as f64 / n
        })
        .collect()
}

/// Alternative z(0) candidate: among stakeholders flagged on each factor,
/// the share flagged with a positive loading. Factors with no flags get 0.5.
pub fn derive_z0_flagged(flags: &FlagAssignment) -> Vec<f64> {
    let mut pos = vec![0usize; flags.factor_count];
    let mut all = vec![0usize; flags.factor_count];
    for flag in flags.assignments.iter().flatten() {
        all[flag.factor] += 1;
        if flag.sign == LoadingSign::Positive {
            pos[flag.factor] += 1;
        }
    }
    pos.iter()
        .zip(&all)
        .map(|(&p, &a)| if a == 0 { 0.5 } else { p as f64 / a as f64 })
        .collect()
}

/// Initial conditions for a coupled run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InitialConditions {
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
    pub z0: Vec<f64>,
}

impl InitialConditions {
    pub fn validate(&self, tol: f64) -> Result<()> {
        if !simplex::is_on_simplex(&self.x0, tol) {
            return Err(Error::validation("x0", "not on the simplex"));
        }
        if !simplex::is_on_simplex(&self.y0, tol) {
            return Err(Error::validation("y0", "not on the simplex"));
        }
        if self.z0.len() != self.x0.len() {
            return Err(Error::dims("z0", self.x0.len(), self.z0.len()));
        }
        if let Some(i) = self.z0.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::validation(format!("z0[{i}]"), "outside [0, 1]"));
        }
        Ok(())
    }
}

/// Resolves strategy codes to values, in canonical order.
pub fn shares_from_map(map: &HashMap<String, f64>) -> Result<Vec<f64>> {
    let mut out = vec![None; STRATEGY_COUNT];
    for (k, &v) in map {
        let idx = StrategyCode::parse(k)?.index();
        if out[idx].is_some() {
            return Err(Error::DuplicateStrategy(k.clone()));
        }
        out[idx] = Some(v);
    }
    let space = StrategySpace::canonical();
    out.into_iter()
        .enumerate()
        .map(|(j, v)| v.ok_or_else(|| Error::MissingStrategy(space[j].to_string())))
        .collect()
}
