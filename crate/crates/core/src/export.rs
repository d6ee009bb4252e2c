//! CSV and JSON output: trajectories, per-figure plot data, reports, and
//! strategy share tables.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! re-parsed file reproduces the in-memory values exactly.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::analysis::AnalysisReport;
use crate::dynamics::{GameState, Trajectory};
use crate::error::{Error, Result};
use crate::qdata::{csv_reader, ZScoreMatrix};
use crate::strategy_space::{factor_label, strategy_label, StrategySpace, STRATEGY_COUNT};

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::parse("csv", format!("{other:?}")),
    }
}

/// `t, x_Q1.., z_Q1.., y_<code>.., utility`
pub fn trajectory_header(factors: usize, strategies: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((0..factors).map(|i| format!("x_{}", factor_label(i))));
    h.extend((0..factors).map(|i| format!("z_{}", factor_label(i))));
    h.extend((0..strategies).map(|j| format!("y_{}", strategy_label(j, strategies))));
    h.push("utility".to_string());
    h
}

pub fn write_trajectory_csv<W: Write>(out: W, traj: &Trajectory) -> Result<()> {
    let first = traj.initial().ok_or(Error::EmptyTrajectory)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trajectory_header(first.x.len(), first.y.len()))
        .map_err(csv_err)?;
    for (s, u) in traj.samples.iter().zip(&traj.utility_series) {
        let mut row = Vec::with_capacity(3 + 2 * s.x.len() + s.y.len());
        row.push(s.t.to_string());
        row.extend(s.x.iter().map(f64::to_string));
        row.extend(s.z.iter().map(f64::to_string));
        row.extend(s.y.iter().map(f64::to_string));
        row.push(u.to_string());
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a trajectory CSV. The `ψ⁺` series is recomputed from `scores`;
/// the utility column is taken from the file.
pub fn read_trajectory_csv<R: Read>(source: R, scores: &ZScoreMatrix) -> Result<Trajectory> {
    let k = scores.factors();
    let m = scores.strategies();
    let mut rdr = csv_reader(source);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::parse("trajectory header", e))?
        .iter()
        .map(str::to_string)
        .collect();
    if header != trajectory_header(k, m) {
        return Err(Error::parse(
            "trajectory header",
            format!("expected {} columns t, x_*, z_*, y_*, utility", 2 + 2 * k + m),
        ));
    }
    let mut samples = Vec::new();
    let mut utility = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let location = format!("trajectory row {}", n + 1);
        let rec = rec.map_err(|e| Error::parse(&location, e))?;
        let v = rec
            .iter()
            .map(|t| t.parse::<f64>().map_err(|e| Error::parse(&location, format!("`{t}`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        samples.push(GameState {
            t: v[0],
            x: v[1..1 + k].to_vec(),
            z: v[1 + k..1 + 2 * k].to_vec(),
            y: v[1 + 2 * k..1 + 2 * k + m].to_vec(),
        });
        utility.push(v[1 + 2 * k + m]);
    }
    if samples.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let mut traj = Trajectory::from_samples(samples, scores)?;
    traj.utility_series = utility;
    Ok(traj)
}

pub fn read_trajectory_path(path: impl AsRef<Path>, scores: &ZScoreMatrix) -> Result<Trajectory> {
    read_trajectory_csv(crate::qdata::open(path.as_ref())?, scores)
}

fn write_columns(path: &Path, header: Vec<String>, rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(&header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.iter().map(f64::to_string)).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-figure CSVs: `x.csv`, `z.csv`, `utility.csv`, and the strategy
/// shares split by Tool level (`y_T.csv`, `y_S.csv`, `y_A.csv`). Games
/// that are not on the canonical strategy space get a single `y.csv`.
pub fn write_plot_data(dir: &Path, traj: &Trajectory) -> Result<Vec<String>> {
    let first = traj.initial().ok_or(Error::EmptyTrajectory)?;
    let (k, m) = (first.x.len(), first.y.len());
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut emit = |name: &str, header: Vec<String>, pick: &dyn Fn(&GameState, f64) -> Vec<f64>| -> Result<()> {
        let mut h = vec!["t".to_string()];
        h.extend(header);
        write_columns(
            &dir.join(name),
            h,
            traj.samples.iter().zip(&traj.utility_series).map(|(s, u)| {
                let mut row = vec![s.t];
                row.extend(pick(s, *u));
                row
            }),
        )?;
        written.push(name.to_string());
        Ok(())
    };
    emit("x.csv", (0..k).map(|i| format!("x_{}", factor_label(i))).collect(), &|s, _| s.x.clone())?;
    emit("z.csv", (0..k).map(|i| format!("z_{}", factor_label(i))).collect(), &|s, _| s.z.clone())?;
    if m == STRATEGY_COUNT {
        let space = StrategySpace::canonical();
        for tool in ["T", "S", "A"] {
            let block = space.tool_block(tool);
            let header = block.iter().map(|&j| format!("y_{}", space[j])).collect();
            emit(&format!("y_{tool}.csv"), header, &|s, _| block.iter().map(|&j| s.y[j]).collect())?;
        }
    } else {
        let header = (0..m).map(|j| format!("y_{}", strategy_label(j, m))).collect();
        emit("y.csv", header, &|s, _| s.y.clone())?;
    }
    emit("utility.csv", vec!["utility".to_string()], &|_, u| vec![u])?;
    Ok(written)
}

pub fn report_json(report: &AnalysisReport) -> Result<String> {
    serde_json::to_string_pretty(report).map_err(|e| Error::parse("report", e))
}

/// `strategy,share` rows in canonical order.
pub fn write_shares_csv<W: Write>(out: W, shares: &[f64]) -> Result<()> {
    if shares.len() != STRATEGY_COUNT {
        return Err(Error::dims("shares", STRATEGY_COUNT, shares.len()));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["strategy", "share"]).map_err(csv_err)?;
    for (code, v) in StrategySpace::canonical().iter().zip(shares) {
        w.write_record([code.to_string(), v.to_string()]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let h = trajectory_header(5, 36);
        assert_eq!(h.len(), 1 + 5 + 5 + 36 + 1);
        assert_eq!(h[1], "x_Q1");
        assert_eq!(h[6], "z_Q1");
        assert_eq!(h[11 + 26], "y_D.R.A.PP");
        assert_eq!(h.last().unwrap(), "utility");
    }

    #[test]
    fn shares_csv_needs_36() {
        let mut buf = Vec::new();
        assert!(write_shares_csv(&mut buf, &[1.0]).is_err());
        write_shares_csv(&mut buf, &[1.0 / 36.0; 36]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("strategy,share\nD.R.T.Pu,"));
    }
}
