use qgame::sampling::{
    argmax_counts, derive_seeds, repeat_stability, sample_y0, sample_y0_with, SamplerConfig, StatementDistribution,
    TieRule,
};
use qgame::Execution;

fn cfg(n: usize, seed: u64) -> SamplerConfig {
    SamplerConfig {
        n_sequences: n,
        seed,
        tie_rule: TieRule::FirstIndex,
    }
}

#[test]
fn symmetric_distribution_is_near_uniform() {
    let dist = StatementDistribution::symmetric(36, 0.0, 1.0).unwrap();
    let band = 3.0 * ((1.0 / 36.0) * (35.0 / 36.0) / 30_000.0f64).sqrt();
    let y = sample_y0(&dist, &cfg(30_000, 7)).unwrap();
    let inside = y.iter().filter(|v| (*v - 1.0 / 36.0).abs() <= band).count();
    assert!(inside >= 34, "{inside} of 36 inside the band");
}

#[test]
fn dominant_mean_takes_all_mass() {
    let dist = StatementDistribution::symmetric(36, 0.0, 1.0).unwrap().with_mean(26, 100.0);
    let y = sample_y0(&dist, &cfg(5_000, 1)).unwrap();
    assert!(y[26] > 0.999);
}

#[test]
fn output_sums_to_one_exactly_in_counts() {
    let dist = StatementDistribution::symmetric(36, 2.0, 0.5).unwrap();
    let counts = argmax_counts(&dist, &cfg(12_345, 3), Execution::default()).unwrap();
    assert_eq!(counts.iter().sum::<u64>(), 12_345);
}

#[test]
fn seeded_runs_are_bitwise_identical_across_execution_modes() {
    let dist = StatementDistribution::symmetric(36, 0.0, 1.0).unwrap().with_mean(4, 0.3);
    let c = cfg(30_000, 42);
    let a = sample_y0_with(&dist, &c, Execution::Sequential).unwrap();
    let b = sample_y0_with(&dist, &c, Execution::Parallel).unwrap();
    let again = sample_y0(&dist, &c).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, again);
}

#[test]
fn raising_a_mean_never_lowers_its_share() {
    // paired seeds: the same normal draws with one coordinate shifted up
    let base = StatementDistribution::symmetric(36, 0.0, 1.0).unwrap();
    for (j, seed) in derive_seeds(11, 10).into_iter().enumerate() {
        let lo = sample_y0(&base, &cfg(5_000, seed)).unwrap();
        let hi = sample_y0(&base.with_mean(j, 0.25), &cfg(5_000, seed)).unwrap();
        assert!(hi[j] >= lo[j], "strategy {j}: {} < {}", hi[j], lo[j]);
    }
}

#[test]
fn repeated_runs_agree_at_full_size() {
    let dist = StatementDistribution::symmetric(36, 0.0, 1.0).unwrap();
    let d = repeat_stability(&dist, &cfg(30_000, 5), 5).unwrap();
    // two independent runs differ per cell by N(0, 2p(1-p)/n); E|N(0, s^2)| = s*sqrt(2/pi)
    let p = 1.0 / 36.0;
    let expected_l1 = 36.0 * (2.0 * p * (1.0 - p) / 30_000.0f64).sqrt() * (2.0 / std::f64::consts::PI).sqrt();
    assert!((expected_l1 - 0.0385).abs() < 1e-3);
    assert!(d < 1.5 * expected_l1, "max pairwise L1 {d}");
}

#[test]
fn tiny_runs_disagree() {
    let dist = StatementDistribution::symmetric(36, 0.0, 1.0).unwrap();
    assert!(repeat_stability(&dist, &cfg(10, 5), 5).unwrap() > 0.1);
}

#[test]
fn distribution_csv_by_code() {
    let mut text = String::from("strategy_code,mean,sigma\n");
    for (j, code) in qgame::strategy_space::StrategySpace::canonical().iter().enumerate().rev() {
        text.push_str(&format!("{code},{},1\n", if j == 26 { 50 } else { 0 }));
    }
    let dist = StatementDistribution::from_reader(text.as_bytes()).unwrap();
    assert_eq!(dist.params()[26].mean, 50.0);
    assert!(sample_y0(&dist, &cfg(1_000, 0)).unwrap()[26] > 0.999);
}
