//! Monte Carlo construction of y(0).
//!
//! Each simulated sequence draws one independent normal score per strategy;
//! y(0)[j] is the fraction of sequences in which strategy `j` scores highest.
//! Sequence `k` always uses ChaCha8 stream `k` of the configured seed, so the
//! result is bit-identical across runs and independent of how sequences are
//! split across threads.

use std::io::Read;
use std::path::Path;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::Execution;
use crate::qdata::{csv_reader, open};
use crate::simplex;
use crate::strategy_space::{StrategyCode, StrategySpace, STRATEGY_COUNT};

/// Sequences handled per work item.
const BATCH: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalParams {
    pub mean: f64,
    pub sigma: f64,
}

/// Per-strategy normal score distributions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatementDistribution {
    params: Vec<NormalParams>,
}

impl StatementDistribution {
    pub fn new(params: Vec<NormalParams>) -> Result<Self> {
        if params.is_empty() {
            return Err(Error::validation("distribution", "no strategies"));
        }
        for (j, p) in params.iter().enumerate() {
            if !p.mean.is_finite() {
                return Err(Error::validation(format!("distribution[{j}].mean"), "not finite"));
            }
            if !(p.sigma.is_finite() && p.sigma > 0.0) {
                return Err(Error::validation(
                    format!("distribution[{j}].sigma"),
                    format!("sigma {} must be positive", p.sigma),
                ));
            }
        }
        Ok(StatementDistribution { params })
    }

    /// `n` identical distributions.
    pub fn symmetric(n: usize, mean: f64, sigma: f64) -> Result<Self> {
        Self::new(vec![NormalParams { mean, sigma }; n])
    }

    /// Reads `strategy_code,mean,sigma` rows into canonical order.
    pub fn from_reader<R: Read>(source: R) -> Result<Self> {
        let mut rdr = csv_reader(source);
        let mut slots: Vec<Option<NormalParams>> = vec![None; STRATEGY_COUNT];
        for (n, rec) in rdr.records().enumerate() {
            let location = format!("distribution row {}", n + 1);
            let rec = rec.map_err(|e| Error::parse(&location, e))?;
            if rec.len() != 3 {
                return Err(Error::dims("distribution row", 3, rec.len()));
            }
            let code = StrategyCode::parse(&rec[0])?;
            let num = |i: usize| {
                rec[i]
                    .parse::<f64>()
                    .map_err(|e| Error::parse(&location, format!("`{}`: {e}", &rec[i])))
            };
            let p = NormalParams {
                mean: num(1)?,
                sigma: num(2)?,
            };
            let slot = &mut slots[code.index()];
            if slot.is_some() {
                return Err(Error::DuplicateStrategy(code.to_string()));
            }
            *slot = Some(p);
        }
        let space = StrategySpace::canonical();
        let params = slots
            .into_iter()
            .enumerate()
            .map(|(j, p)| p.ok_or_else(|| Error::MissingStrategy(space[j].to_string())))
            .collect::<Result<Vec<_>>>()?;
        Self::new(params)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_reader(open(path.as_ref())?)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn params(&self) -> &[NormalParams] {
        &self.params
    }

    pub fn with_mean(&self, j: usize, mean: f64) -> Self {
        let mut params = self.params.clone();
        params[j].mean = mean;
        StatementDistribution { params }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TieRule {
    /// Lowest canonical index among the tied maxima.
    #[default]
    FirstIndex,
    /// Uniform among the tied maxima, drawn from the sequence's stream.
    RandomUniform,
}

impl std::str::FromStr for TieRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first-index" => Ok(TieRule::FirstIndex),
            "random-uniform" => Ok(TieRule::RandomUniform),
            other => Err(Error::InvalidConfig(format!("unknown tie rule `{other}`"))),
        }
    }
}

impl std::fmt::Display for TieRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TieRule::FirstIndex => "first-index",
            TieRule::RandomUniform => "random-uniform",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub n_sequences: usize,
    pub seed: u64,
    pub tie_rule: TieRule,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            n_sequences: 30_000,
            seed: 0,
            tie_rule: TieRule::FirstIndex,
        }
    }
}

fn sequence_rng(seed: u64, k: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    rng
}

/// Index of the winning strategy of sequence `k`.
fn sequence_winner(dist: &StatementDistribution, cfg: &SamplerConfig, k: usize, scratch: &mut Vec<f64>) -> usize {
    let mut rng = sequence_rng(cfg.seed, k);
    scratch.clear();
    scratch.extend(dist.params.iter().map(|p| {
        let n: f64 = rng.sample(StandardNormal);
        p.mean + p.sigma * n
    }));
    let best = scratch.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    match cfg.tie_rule {
        TieRule::FirstIndex => scratch.iter().position(|v| *v == best).unwrap_or(0),
        TieRule::RandomUniform => {
            let tied: Vec<usize> = (0..scratch.len()).filter(|&j| scratch[j] == best).collect();
            if tied.len() == 1 {
                tied[0]
            } else {
                tied[rng.random_range(0..tied.len())]
            }
        }
    }
}

/// Per-strategy counts of sequences won.
pub fn argmax_counts(dist: &StatementDistribution, cfg: &SamplerConfig, exec: Execution) -> Result<Vec<u64>> {
    if cfg.n_sequences == 0 {
        return Err(Error::InvalidConfig("n_sequences must be at least 1".into()));
    }
    let n = dist.len();
    let batches = cfg.n_sequences.div_ceil(BATCH);
    let partial = exec.map_range(batches, |b| {
        let mut counts = vec![0u64; n];
        let mut scratch = Vec::with_capacity(n);
        let end = ((b + 1) * BATCH).min(cfg.n_sequences);
        for k in b * BATCH..end {
            counts[sequence_winner(dist, cfg, k, &mut scratch)] += 1;
        }
        counts
    });
    let mut counts = vec![0u64; n];
    for c in partial {
        counts.iter_mut().zip(c).for_each(|(a, b)| *a += b);
    }
    Ok(counts)
}

pub fn sample_y0_with(dist: &StatementDistribution, cfg: &SamplerConfig, exec: Execution) -> Result<Vec<f64>> {
    let counts = argmax_counts(dist, cfg, exec)?;
    let n = cfg.n_sequences as f64;
    Ok(counts.into_iter().map(|c| c as f64 / n).collect())
}

/// Fraction of sequences in which each strategy attains the maximum.
pub fn sample_y0(dist: &StatementDistribution, cfg: &SamplerConfig) -> Result<Vec<f64>> {
    sample_y0_with(dist, cfg, Execution::default())
}

/// Sub-seeds for repeated runs, drawn from the master seed's stream.
pub fn derive_seeds(seed: u64, repeats: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    (0..repeats).map(|_| rng.next_u64()).collect()
}

/// Largest L1 distance between y(0) estimates obtained with `seeds`.
pub fn repeat_stability_with_seeds(
    dist: &StatementDistribution,
    cfg: &SamplerConfig,
    seeds: &[u64],
    exec: Execution,
) -> Result<f64> {
    if seeds.len() < 2 {
        return Err(Error::InvalidConfig("repeat stability needs at least 2 runs".into()));
    }
    let runs = exec
        .map_slice(seeds, |&seed| sample_y0_with(dist, &SamplerConfig { seed, ..*cfg }, exec))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut worst: f64 = 0.0;
    for (i, a) in runs.iter().enumerate() {
        for b in &runs[i + 1..] {
            worst = worst.max(simplex::l1_distance(a, b));
        }
    }
    Ok(worst)
}

/// Reruns the sampler `repeats` times with seeds derived from `cfg.seed`.
pub fn repeat_stability(dist: &StatementDistribution, cfg: &SamplerConfig, repeats: usize) -> Result<f64> {
    repeat_stability_with_seeds(dist, cfg, &derive_seeds(cfg.seed, repeats), Execution::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: usize, seed: u64) -> SamplerConfig {
        SamplerConfig {
            n_sequences: n,
            seed,
            tie_rule: TieRule::FirstIndex,
        }
    }

    #[test]
    fn dominant_mean_takes_everything() {
        let dist = StatementDistribution::symmetric(36, 0.0, 1.0).unwrap().with_mean(7, 100.0);
        let y0 = sample_y0(&dist, &cfg(5000, 3)).unwrap();
        assert!(y0[7] > 0.999);
    }

    #[test]
    fn counts_sum_to_n() {
        let dist = StatementDistribution::symmetric(36, 0.0, 2.0).unwrap();
        let counts = argmax_counts(&dist, &cfg(3001, 9), Execution::default()).unwrap();
        assert_eq!(counts.iter().sum::<u64>(), 3001);
    }

    #[test]
    fn execution_policy_does_not_change_result() {
        let dist = StatementDistribution::symmetric(36, 1.0, 1.5).unwrap();
        let c = cfg(4500, 77);
        assert_eq!(
            sample_y0_with(&dist, &c, Execution::Sequential).unwrap(),
            sample_y0_with(&dist, &c, Execution::Parallel).unwrap()
        );
    }

    #[test]
    fn identical_seeds_give_zero_distance() {
        let dist = StatementDistribution::symmetric(36, 0.0, 1.0).unwrap();
        let d = repeat_stability_with_seeds(&dist, &cfg(2000, 0), &[5, 5], Execution::default()).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn tiny_runs_are_unstable() {
        let dist = StatementDistribution::symmetric(36, 0.0, 1.0).unwrap();
        let d = repeat_stability(&dist, &cfg(10, 1), 5).unwrap();
        assert!(d > 0.1, "{d}");
    }

    #[test]
    fn random_tie_rule_spreads_ties() {
        // sigma this small cannot separate equal means: every draw ties
        let dist = StatementDistribution::symmetric(4, 1e9, 1e-300).unwrap();
        let first = sample_y0(&dist, &SamplerConfig { n_sequences: 400, seed: 2, tie_rule: TieRule::FirstIndex }).unwrap();
        assert_eq!(first, vec![1.0, 0.0, 0.0, 0.0]);
        let uniform = sample_y0(&dist, &SamplerConfig { n_sequences: 400, seed: 2, tie_rule: TieRule::RandomUniform }).unwrap();
        assert!(uniform.iter().all(|v| *v > 0.15), "{uniform:?}");
    }

    #[test]
    fn invalid_inputs() {
        assert!(StatementDistribution::symmetric(3, 0.0, 0.0).is_err());
        assert!(StatementDistribution::symmetric(0, 0.0, 1.0).is_err());
        let dist = StatementDistribution::symmetric(3, 0.0, 1.0).unwrap();
        assert!(sample_y0(&dist, &cfg(0, 1)).is_err());
        assert!(repeat_stability(&dist, &cfg(10, 1), 1).is_err());
        assert!("coin".parse::<TieRule>().is_err());
    }

    #[test]
    fn csv_round_trip_order() {
        let mut text = String::from("strategy_code,mean,sigma\n");
        for s in StrategySpace::canonical().iter().rev() {
            text.push_str(&format!("{s},{},1.5\n", s.index()));
        }
        let dist = StatementDistribution::from_reader(text.as_bytes()).unwrap();
        assert!(dist.params().iter().enumerate().all(|(j, p)| p.mean == j as f64));
    }
}
