//! Command-line front end: scenario runs, flagging, y(0) sampling and
//! re-analysis of saved trajectories.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use qgame::analysis::{analyze, AnalysisConfig};
use qgame::dynamics::{integrate, Method};
use qgame::error::Error;
use qgame::export;
use qgame::qdata::{self, LoadingMatrix, ZScoreMatrix};
use qgame::sampling::{self, SamplerConfig, StatementDistribution, TieRule};
use qgame::scenario::{self, ScenarioOverrides};
use qgame::strategy_space::factor_label;

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_FILE_NOT_FOUND: i32 = 3;
pub const EXIT_VALIDATION: i32 = 4;
pub const EXIT_PARSE: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "qgame", version, about = "Coupled stakeholder/community replicator simulator")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct GlobalOpts {
    /// RNG seed for sampled initial conditions
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Integration horizon
    #[arg(long, global = true)]
    pub t_end: Option<f64>,
    /// RK4 step, or initial step for RK45
    #[arg(long, global = true)]
    pub step: Option<f64>,
    /// rk4 or rk45
    #[arg(long, global = true)]
    pub method: Option<Method>,
    /// Output directory (simulate, analyze) or file (sample-y0)
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate a scenario and write trajectory.csv, report.json and plotdata/
    Simulate { scenario: PathBuf },
    /// Flag stakeholders on Q-factors from a loading table
    Flag {
        loadings: PathBuf,
        #[arg(long, default_value_t = 36)]
        n_statements: usize,
        #[arg(long, default_value_t = 0.05)]
        p: f64,
    },
    /// Estimate y(0) as argmax frequencies of sampled statement scores
    #[command(name = "sample-y0")]
    SampleY0 {
        distribution: PathBuf,
        #[arg(long, default_value_t = 30_000)]
        n_sequences: usize,
        #[arg(long, default_value_t = TieRule::FirstIndex)]
        tie_rule: TieRule,
    },
    /// Re-run the analysis on an existing trajectory.csv
    Analyze {
        trajectory: PathBuf,
        /// Scenario supplying the score table and thresholds (bundled data otherwise)
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::FileNotFound(_) => EXIT_FILE_NOT_FOUND,
        Error::Validation { .. } | Error::InvalidConfig(_) | Error::UnsupportedSignificance(_) => EXIT_VALIDATION,
        Error::Parse { .. }
        | Error::MalformedCode(_)
        | Error::UnknownLevel { .. }
        | Error::MissingStrategy(_)
        | Error::DuplicateStrategy(_)
        | Error::ScoreOutOfRange { .. } => EXIT_PARSE,
        _ => EXIT_FAILURE,
    }
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> qgame::Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Simulate { scenario } => {
            let dir = g.output.clone().unwrap_or_else(|| PathBuf::from("out"));
            cmd_simulate(scenario, &dir, &overrides(g), out)
        }
        Command::Flag { loadings, n_statements, p } => cmd_flag(loadings, *n_statements, *p, out),
        Command::SampleY0 { distribution, n_sequences, tie_rule } => {
            let cfg = SamplerConfig {
                n_sequences: *n_sequences,
                seed: g.seed.unwrap_or(0),
                tie_rule: *tie_rule,
            };
            cmd_sample_y0(distribution, &cfg, g.output.as_deref(), out)
        }
        Command::Analyze { trajectory, scenario } => {
            cmd_analyze(trajectory, scenario.as_deref(), g.output.as_deref(), out)
        }
    }
}

fn overrides(g: &GlobalOpts) -> ScenarioOverrides {
    ScenarioOverrides {
        seed: g.seed,
        t_end: g.t_end,
        step: g.step,
        method: g.method,
    }
}

pub fn cmd_simulate(scenario: &Path, dir: &Path, ov: &ScenarioOverrides, out: &mut dyn Write) -> qgame::Result<()> {
    let sc = scenario::load_scenario_with(scenario, ov)?;
    let traj = integrate(&sc.initial_state(), &sc.scores, &sc.integrator)?;
    let report = analyze(&traj, &sc.analysis)?;

    fs::create_dir_all(dir)?;
    export::write_trajectory_csv(io::BufWriter::new(fs::File::create(dir.join("trajectory.csv"))?), &traj)?;
    fs::write(dir.join("report.json"), export::report_json(&report)? + "\n")?;
    export::write_plot_data(&dir.join("plotdata"), &traj)?;

    writeln!(out, "scenario {}: {} samples, {} steps", sc.name, traj.len(), traj.stats.accepted_steps)?;
    write!(out, "{}", report.summary())?;
    writeln!(out, "wrote {}", dir.display())?;
    Ok(())
}

pub fn cmd_flag(loadings: &Path, n_statements: usize, p: f64, out: &mut dyn Write) -> qgame::Result<()> {
    let l = LoadingMatrix::from_path(loadings)?;
    let flags = qdata::flag_stakeholders(&l, n_statements, p)?;
    writeln!(out, "threshold |loading| > {:.4} (n = {n_statements}, p = {p})", flags.threshold)?;
    for (id, a) in flags.stakeholder_ids.iter().zip(&flags.assignments) {
        match a {
            Some(f) => writeln!(out, "{id}\t{}\t{:+.2}", factor_label(f.factor), f.loading)?,
            None => writeln!(out, "{id}\t-")?,
        }
    }
    let counts: Vec<String> = flags
        .counts()
        .iter()
        .enumerate()
        .map(|(i, c)| format!("{}={c}", factor_label(i)))
        .collect();
    writeln!(out, "counts: {}", counts.join(" "))?;
    writeln!(out, "unassigned: {} [{}]", flags.unassigned().len(), flags.unassigned().join(", "))?;
    Ok(())
}

pub fn cmd_sample_y0(
    distribution: &Path,
    cfg: &SamplerConfig,
    output: Option<&Path>,
    out: &mut dyn Write,
) -> qgame::Result<()> {
    let dist = StatementDistribution::from_path(distribution)?;
    let y0 = sampling::sample_y0(&dist, cfg)?;
    match output {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            export::write_shares_csv(io::BufWriter::new(fs::File::create(path)?), &y0)?;
            writeln!(out, "wrote {}", path.display())?;
        }
        None => export::write_shares_csv(out, &y0)?,
    }
    Ok(())
}

pub fn cmd_analyze(
    trajectory: &Path,
    scenario: Option<&Path>,
    dir: Option<&Path>,
    out: &mut dyn Write,
) -> qgame::Result<()> {
    let (scores, cfg): (ZScoreMatrix, AnalysisConfig) = match scenario {
        Some(p) => {
            let sc = scenario::load_scenario(p)?;
            (sc.scores, sc.analysis)
        }
        None => (qgame::bundled::zscores()?, AnalysisConfig::default()),
    };
    let traj = export::read_trajectory_path(trajectory, &scores)?;
    let report = analyze(&traj, &cfg)?;
    let json = export::report_json(&report)? + "\n";
    match dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join("report.json"), json)?;
            write!(out, "{}", report.summary())?;
        }
        None => write!(out, "{json}")?,
    }
    Ok(())
}
