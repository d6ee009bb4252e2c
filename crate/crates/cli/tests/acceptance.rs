//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use qgame::dynamics::{integrate, vector_field, GameState, IntegratorConfig, Method, Trajectory};
use qgame::export::read_trajectory_path;
use qgame::payoff::{build_payoff, psi_plus};
use qgame::qdata::{self, LoadingMatrix, ZScoreMatrix};
use qgame::sampling::{sample_y0, SamplerConfig, StatementDistribution};
use qgame::scenario::load_scenario;
use qgame::simplex::max_abs_diff;
use serde_json::Value;

type Verdict = Result<String, String>;

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn check(cond: bool, detail: String) -> Verdict {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// --- 1 ---

fn flagging() -> Verdict {
    let start = Instant::now();
    let mut out = Vec::new();
    qgame_cli::cmd_flag(&repo().join("data/loadings.csv"), 36, 0.05, &mut out).map_err(|e| e.to_string())?;
    let text = String::from_utf8(out).unwrap();
    let l = LoadingMatrix::from_path(repo().join("data/loadings.csv")).map_err(|e| e.to_string())?;
    let flags = qdata::flag_stakeholders(&l, 36, 0.05).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let counts = flags.counts();
    let unassigned = flags.unassigned().len();
    check(
        counts == [7, 3, 3, 4, 2]
            && unassigned == 1
            && text.contains("counts: Q1=7 Q2=3 Q3=3 Q4=4 Q5=2")
            && elapsed < Duration::from_secs(1),
        format!("counts {counts:?}, unassigned {unassigned}, {elapsed:.2?}"),
    )
}

// --- 2 to 6 share one run of the bundled scenario through the CLI layer ---

struct PaperRun {
    traj: Trajectory,
    report: Value,
    elapsed: Duration,
    _dir: tempfile::TempDir,
}

fn paper_run() -> &'static Result<PaperRun, String> {
    static RUN: OnceLock<Result<PaperRun, String>> = OnceLock::new();
    RUN.get_or_init(|| {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let scenario = repo().join("scenarios/paper.json");
        let start = Instant::now();
        let mut sink = Vec::new();
        qgame_cli::cmd_simulate(&scenario, dir.path(), &Default::default(), &mut sink).map_err(|e| e.to_string())?;
        let elapsed = start.elapsed();
        let scores = load_scenario(&scenario).map_err(|e| e.to_string())?.scores;
        let traj = read_trajectory_path(dir.path().join("trajectory.csv"), &scores).map_err(|e| e.to_string())?;
        let report = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .map_err(|e| e.to_string())?;
        Ok(PaperRun {
            traj,
            report,
            elapsed,
            _dir: dir,
        })
    })
}

fn run() -> Result<&'static PaperRun, String> {
    paper_run().as_ref().map_err(Clone::clone)
}

fn x_fixation() -> Verdict {
    let r = run()?;
    let end = r.traj.terminal().unwrap();
    let others = end.x[1..].iter().copied().fold(0.0, f64::max);
    check(
        end.t >= 50.0 && end.x[0] > 0.99 && others < 0.01 && r.elapsed < Duration::from_secs(10),
        format!("t = {}, x_Q1 = {:.6}, max other x = {others:.2e}, {:.2?}", end.t, end.x[0], r.elapsed),
    )
}

fn z_limits() -> Verdict {
    let end = run()?.traj.terminal().unwrap();
    let z = &end.z;
    check(
        z[0] > 0.99 && z[1] > 0.99 && z[3] > 0.99 && z[4] > 0.99 && z[2] < 0.01,
        format!("z = [{}]", z.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(", ")),
    )
}

fn y_fixation() -> Verdict {
    let r = run()?;
    let y = r.traj.terminal().unwrap().y[26];
    let s = &r.report["transients"]["strategies"][26];
    let winners = &r.report["transients"]["monotone_winners"];
    check(
        y > 0.99
            && s["label"] == "D.R.A.PP"
            && s["class"] == "monotone-winner"
            && s["sigmoidal"] == true
            && s["inflections"] == 1
            && *winners == serde_json::json!(["D.R.A.PP"]),
        format!(
            "y_D.R.A.PP = {y:.6}, class {}, inflections {}, sigmoidal {}",
            s["class"], s["inflections"], s["sigmoidal"]
        ),
    )
}

fn utility_endpoints() -> Verdict {
    let u = &run()?.traj.utility_series;
    let (first, last) = (u[0], u[u.len() - 1]);
    check(
        first < 0.0 && (last - 5.0).abs() < 0.1,
        format!("utility {first:.6} -> {last:.6}"),
    )
}

fn two_phase() -> Verdict {
    let r = run()?;
    let set = r.report["transients"]["grow_then_die"].as_array().cloned().unwrap_or_default();
    let profile = &r.report["transients"]["strategies"];
    let consistent = set.iter().all(|label| {
        profile
            .as_array()
            .unwrap()
            .iter()
            .any(|s| s["label"] == *label && s["class"] == "grow-then-die")
    });
    check(
        !set.is_empty() && consistent,
        format!("{} grow-then-die strategies: {}", set.len(), Value::Array(set.clone())),
    )
}

// --- 7 ---

fn terminal(method: Method, step: f64, t_end: f64) -> Result<Vec<f64>, String> {
    let sc = load_scenario(repo().join("scenarios/paper.json")).map_err(|e| e.to_string())?;
    let cfg = IntegratorConfig {
        method,
        step,
        t_end,
        sample_stride: usize::MAX,
        ..IntegratorConfig::default()
    };
    let traj = integrate(&sc.initial_state(), &sc.scores, &cfg).map_err(|e| e.to_string())?;
    Ok(traj.terminal().unwrap().to_flat())
}

fn robustness() -> Verdict {
    let mut detail = Vec::new();
    let mut ok = true;
    // the horizon end is near fixation; t = 5 is mid-transition
    for t_end in [50.0, 5.0] {
        let base = terminal(Method::Rk4, 0.01, t_end)?;
        let halved = max_abs_diff(&base, &terminal(Method::Rk4, 0.005, t_end)?);
        let adaptive = max_abs_diff(&base, &terminal(Method::Rk45, 0.01, t_end)?);
        ok &= halved < 1e-6 && adaptive < 1e-5;
        detail.push(format!("t = {t_end}: halved step {halved:.1e}, rk45 {adaptive:.1e}"));
    }
    check(ok, detail.join("; "))
}

// --- 8 ---

#[derive(Debug, Clone)]
struct Game {
    scores: ZScoreMatrix,
    state: GameState,
}

fn simplex(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, n).prop_map(|w| {
        let s: f64 = w.iter().sum();
        w.into_iter().map(|v| v / s).collect()
    })
}

fn game() -> impl Strategy<Value = Game> {
    (2usize..=5, 2usize..=8).prop_flat_map(|(k, m)| {
        (
            prop::collection::vec(prop::collection::vec(-5i32..=5, m), k),
            simplex(k),
            simplex(m),
            prop::collection::vec(0.01f64..0.99, k),
        )
            .prop_map(|(rows, x, y, z)| {
                let rows: Vec<Vec<f64>> = rows.into_iter().map(|r| r.into_iter().map(f64::from).collect()).collect();
                Game {
                    scores: ZScoreMatrix::from_rows(&rows).unwrap(),
                    state: GameState::new(x, y, z),
                }
            })
    })
}

const CASES: u32 = 128;

fn property<S: Strategy>(strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String> {
    TestRunner::new(Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    })
    .run(&strategy, test)
    .map_err(|e| e.to_string())
}

fn full_run() -> IntegratorConfig {
    IntegratorConfig {
        t_end: 50.0,
        sample_stride: 50,
        ..IntegratorConfig::default()
    }
}

fn invariants() -> Verdict {
    let mut names = Vec::new();

    property(game(), |g| {
        let t = integrate(&g.state, &g.scores, &full_run()).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!(t.stats.max_x_drift <= 1e-6 && t.stats.max_y_drift <= 1e-6);
        Ok(())
    })
    .map_err(|e| format!("simplex conservation: {e}"))?;
    names.push("simplex conservation");

    property((game(), any::<prop::sample::Index>()), |(g, pick)| {
        let mut s = g.state.clone();
        let j = pick.index(s.y.len());
        s.y[j] = 0.0;
        let total: f64 = s.y.iter().sum();
        s.y.iter_mut().for_each(|v| *v /= total);
        let t = integrate(&s, &g.scores, &full_run()).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!(t.samples.iter().all(|p| p.y[j] == 0.0));
        Ok(())
    })
    .map_err(|e| format!("face invariance: {e}"))?;
    names.push("face invariance");

    property((game(), any::<u8>()), |(g, mask)| {
        let mut s = g.state.clone();
        for (i, z) in s.z.iter_mut().enumerate() {
            *z = f64::from(mask >> i & 1);
        }
        let d = vector_field(&s, &g.scores).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert!(d.dz.iter().all(|v| *v == 0.0));
        let t = integrate(&s, &g.scores, &full_run()).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(&t.terminal().unwrap().z, &s.z);
        Ok(())
    })
    .map_err(|e| format!("z-boundary fixed points: {e}"))?;
    names.push("z-boundary fixed points");

    property(game(), |g| {
        let flipped: Vec<f64> = g.state.z.iter().map(|z| 1.0 - z).collect();
        let a = build_payoff(&g.scores, &g.state.z).unwrap();
        let b = build_payoff(&g.scores, &flipped).unwrap();
        prop_assert!(a.as_slice().iter().zip(b.as_slice()).all(|(u, v)| (u + v).abs() < 1e-12));
        Ok(())
    })
    .map_err(|e| format!("sign flip: {e}"))?;
    names.push("sign flip");

    property((game(), -3.0f64..3.0, -3.0f64..3.0), |(g, a, b)| {
        let y1 = g.state.y.clone();
        let y2: Vec<f64> = y1.iter().rev().copied().collect();
        let mix: Vec<f64> = y1.iter().zip(&y2).map(|(p, q)| a * p + b * q).collect();
        let (l, p1, p2) = (
            psi_plus(&g.scores, &mix).unwrap(),
            psi_plus(&g.scores, &y1).unwrap(),
            psi_plus(&g.scores, &y2).unwrap(),
        );
        prop_assert!((0..l.len()).all(|i| (l[i] - (a * p1[i] + b * p2[i])).abs() < 1e-9));
        Ok(())
    })
    .map_err(|e| format!("psi linearity: {e}"))?;
    names.push("psi linearity");

    Ok(format!("{} x {CASES} cases: {}", names.len(), names.join(", ")))
}

// --- 9 ---

fn sampler_oracle() -> Verdict {
    let n = 30_000usize;
    let p = 1.0 / 36.0;
    let band = 3.0 * (p * (1.0 - p) / n as f64).sqrt();
    let dist = StatementDistribution::symmetric(36, 0.0, 1.0).map_err(|e| e.to_string())?;
    let mut inside = 0usize;
    let mut total = 0usize;
    for seed in 0..20u64 {
        let cfg = SamplerConfig {
            n_sequences: n,
            seed,
            ..SamplerConfig::default()
        };
        let y = sample_y0(&dist, &cfg).map_err(|e| e.to_string())?;
        inside += y.iter().filter(|v| (*v - p).abs() <= band).count();
        total += y.len();
    }
    let frac = inside as f64 / total as f64;
    check(
        frac >= 0.95,
        format!("{inside}/{total} entries within {band:.4} of 1/36 ({:.1}%)", 100.0 * frac),
    )
}

// --- 10 ---

fn small_game() -> Verdict {
    // strategy 1 strictly dominates for both factors; z pinned at 1
    let scores = ZScoreMatrix::from_rows(&[vec![3.0, 1.0], vec![2.0, -1.0]]).unwrap();
    let delta = 3.0 - 1.0;
    let y0 = 0.1;
    let logistic = |t: f64| y0 * (delta * t).exp() / (1.0 - y0 + y0 * (delta * t).exp());

    let mut worst = 0.0f64;
    for method in [Method::Rk4, Method::Rk45] {
        let cfg = IntegratorConfig {
            method,
            t_end: 20.0,
            ..IntegratorConfig::default()
        };
        let s0 = GameState::new(vec![1.0, 0.0], vec![y0, 1.0 - y0], vec![1.0, 1.0]);
        let traj = integrate(&s0, &scores, &cfg).map_err(|e| e.to_string())?;
        for s in &traj.samples {
            worst = worst.max((s.y[0] - logistic(s.t)).abs());
        }
    }

    let mut min_share = f64::INFINITY;
    let grid = [0.05, 0.25, 0.5, 0.75, 0.95];
    for &x1 in &grid {
        for &y1 in &grid {
            let s0 = GameState::new(vec![x1, 1.0 - x1], vec![y1, 1.0 - y1], vec![1.0, 1.0]);
            let traj = integrate(&s0, &scores, &IntegratorConfig::default()).map_err(|e| e.to_string())?;
            min_share = min_share.min(traj.terminal().unwrap().y[0]);
        }
    }
    check(
        worst < 1e-6 && min_share > 0.99,
        format!("max |y1 - logistic| = {worst:.1e}; min terminal y1 over 25 interior starts = {min_share:.6}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("flagging reproduction", flagging),
        ("x-fixation", x_fixation),
        ("z-limits", z_limits),
        ("y-fixation", y_fixation),
        ("utility endpoints", utility_endpoints),
        ("two-phase selection", two_phase),
        ("numerical robustness", robustness),
        ("invariant suite", invariants),
        ("sampler oracle", sampler_oracle),
        ("small-game oracle", small_game),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let verdict = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match verdict {
            Ok(d) => println!("PASS {:>2} {name}: {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {d}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
