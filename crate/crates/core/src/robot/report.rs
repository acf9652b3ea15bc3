//! CSV tables of an experiment. Floats use the shortest round-trip decimal
//! form, so equal reports give byte-identical files.

use std::io::Write;
use std::path::{Path, PathBuf};

use super::experiment::{CenterRecord, ExperimentReport, Strategy};
use super::model::RobotParams;
use crate::error::{Error, Result};

pub const SIGMA_FILE: &str = "sigma_per_center.csv";
pub const ECDF_FILE: &str = "ecdf.csv";
pub const FIT_ERRORS_FILE: &str = "fit_errors.csv";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const ONESTEP_FILE: &str = "onestep_errors.csv";

fn io(e: impl std::fmt::Display) -> Error {
    Error::Io(e.to_string())
}

fn table<W: Write>(out: W, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Records grouped by (strategy, neighbors), each group sorted by ascending
/// `sigma_min` (ties by center index), paired with their rank.
pub fn sorted_records(report: &ExperimentReport) -> Vec<(usize, &CenterRecord)> {
    let mut recs: Vec<&CenterRecord> = report.records.iter().collect();
    recs.sort_by(|a, b| {
        (a.strategy, a.neighbors)
            .cmp(&(b.strategy, b.neighbors))
            .then(a.sigma_min.total_cmp(&b.sigma_min))
            .then(a.center_index.cmp(&b.center_index))
    });
    let mut out = Vec::with_capacity(recs.len());
    let mut prev: Option<(Strategy, usize)> = None;
    let mut rank = 0;
    for r in recs {
        if prev != Some((r.strategy, r.neighbors)) {
            rank = 0;
            prev = Some((r.strategy, r.neighbors));
        }
        out.push((rank, r));
        rank += 1;
    }
    out
}

pub fn write_sigma<W: Write>(report: &ExperimentReport, out: W) -> Result<()> {
    table(
        out,
        &["strategy", "neighbors", "rank", "center", "sigma_min", "sigma_tilde"],
        sorted_records(report).into_iter().map(|(rank, r)| {
            vec![
                r.strategy.name().to_string(),
                r.neighbors.to_string(),
                rank.to_string(),
                r.center_index.to_string(),
                r.sigma_min.to_string(),
                r.sigma_tilde.to_string(),
            ]
        }),
    )
}

pub fn write_ecdf<W: Write>(report: &ExperimentReport, out: W) -> Result<()> {
    table(
        out,
        &["strategy", "neighbors", "sigma_min_ratio", "fraction"],
        report.ecdf.iter().map(|e| {
            vec![
                e.strategy.name().to_string(),
                e.neighbors.to_string(),
                e.value.to_string(),
                e.fraction.to_string(),
            ]
        }),
    )
}

pub fn write_fit_errors<W: Write>(report: &ExperimentReport, out: W) -> Result<()> {
    table(
        out,
        &["strategy", "neighbors", "rank", "center", "sigma_min", "r_eps", "fit_error", "bound"],
        sorted_records(report).into_iter().map(|(rank, r)| {
            vec![
                r.strategy.name().to_string(),
                r.neighbors.to_string(),
                rank.to_string(),
                r.center_index.to_string(),
                r.sigma_min.to_string(),
                r.r_eps.to_string(),
                r.fit_error.to_string(),
                r.bound.to_string(),
            ]
        }),
    )
}

pub fn write_trajectory<W: Write>(report: &ExperimentReport, params: &RobotParams, out: W) -> Result<()> {
    let rows = report.runs.iter().flat_map(|run| {
        let label = run.label();
        run.rollout
            .reference
            .iter()
            .zip(&run.rollout.surrogate)
            .enumerate()
            .map(move |(k, (r, s))| {
                vec![
                    label.clone(),
                    k.to_string(),
                    (k as f64 * params.dt).to_string(),
                    r[0].to_string(),
                    r[1].to_string(),
                    r[2].to_string(),
                    s[0].to_string(),
                    s[1].to_string(),
                    s[2].to_string(),
                ]
            })
    });
    table(
        out,
        &["run", "step", "t", "ref_x1", "ref_x2", "ref_x3", "sur_x1", "sur_x2", "sur_x3"],
        rows,
    )
}

pub fn write_onestep<W: Write>(report: &ExperimentReport, params: &RobotParams, out: W) -> Result<()> {
    let rows = report.runs.iter().flat_map(|run| {
        let label = run.label();
        run.rollout
            .position_errors
            .iter()
            .zip(&run.rollout.orientation_errors)
            .enumerate()
            .map(move |(k, (p, o))| {
                vec![
                    label.clone(),
                    (k + 1).to_string(),
                    ((k + 1) as f64 * params.dt).to_string(),
                    p.to_string(),
                    o.to_string(),
                ]
            })
    });
    table(out, &["run", "step", "t", "position_error", "orientation_error"], rows)
}

/// Writes all five tables into `dir` and returns their paths.
pub fn write_all(report: &ExperimentReport, params: &RobotParams, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(io)?;
    let create = |name: &str| -> Result<(PathBuf, std::io::BufWriter<std::fs::File>)> {
        let p = dir.join(name);
        let f = std::fs::File::create(&p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
        Ok((p, std::io::BufWriter::new(f)))
    };
    let mut paths = Vec::new();
    let (p, f) = create(SIGMA_FILE)?;
    write_sigma(report, f)?;
    paths.push(p);
    let (p, f) = create(ECDF_FILE)?;
    write_ecdf(report, f)?;
    paths.push(p);
    let (p, f) = create(FIT_ERRORS_FILE)?;
    write_fit_errors(report, f)?;
    paths.push(p);
    let (p, f) = create(TRAJECTORY_FILE)?;
    write_trajectory(report, params, f)?;
    paths.push(p);
    let (p, f) = create(ONESTEP_FILE)?;
    write_onestep(report, params, f)?;
    paths.push(p);
    Ok(paths)
}
