//! CSV and JSON result files.
//!
//! Floats are written in shortest round-trip decimal form, so parsing a
//! file back yields bit-identical values. Missing values are written as
//! `NaN`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DVector;

use super::metrics::{StepRow, Summary};
use super::run::{RunRecord, StepRecord, TrackStep};
use super::scenario::TruthPoint;
use crate::channel::Observation;
use crate::filter::SceneState;
use crate::{Error, Result};

pub const STEPS_HEADER: &str =
    "run,step,px,py,pz,ex,ey,ez,ess,pg_meas_db,pg_pred_db,pg_fused_db,pg_outdated_db,pg_future_db";

pub fn step_row(run: usize, rec: &StepRecord) -> StepRow {
    let p = rec.truth.position();
    let e = rec.estimate.position();
    let eff = &rec.efficiency;
    let rel = |pg: Option<f64>| pg.map_or(f64::NAN, |v| eff.relative_db(v));
    StepRow {
        run,
        step: rec.step,
        px: p.x,
        py: p.y,
        pz: p.z,
        ex: e.x,
        ey: e.y,
        ez: e.z,
        ess: rec.ess,
        pg_meas_db: rel(Some(eff.pg_measured)),
        pg_pred_db: rel(Some(eff.pg_predicted)),
        pg_fused_db: rel(Some(eff.pg_fused)),
        pg_outdated_db: rel(eff.pg_outdated),
        pg_future_db: rel(eff.pg_future_predicted),
    }
}

pub fn step_rows(runs: &[RunRecord]) -> Vec<StepRow> {
    runs.iter()
        .flat_map(|r| r.steps.iter().map(move |s| step_row(r.run, s)))
        .collect()
}

pub fn write_steps(path: &Path, rows: &[StepRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if rows.is_empty() {
        w.write_record(STEPS_HEADER.split(','))?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_steps(path: &Path) -> Result<Vec<StepRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != STEPS_HEADER {
        return Err(Error::Io(format!("unexpected steps header: {header}")));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

fn fmt(x: f64) -> String {
    // Display of f64 is the shortest string that parses back to the same value.
    format!("{x}")
}

fn parse(field: &str) -> Result<f64> {
    field
        .parse()
        .map_err(|_| Error::Io(format!("not a number: {field:?}")))
}

/// Per-step filter output: `run,step,ess,degenerate,x0..,var0..`.
pub fn write_estimates(path: &Path, runs: &[(usize, Vec<TrackStep>)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let dim = runs
        .iter()
        .find_map(|(_, s)| s.first())
        .map_or(0, |s| s.estimate.dim());
    let mut header = vec!["run".to_string(), "step".into(), "ess".into(), "degenerate".into()];
    header.extend((0..dim).map(|i| format!("x{i}")));
    header.extend((0..dim).map(|i| format!("var{i}")));
    w.write_record(&header)?;
    for (run, steps) in runs {
        for (n, s) in steps.iter().enumerate() {
            let mut rec = vec![run.to_string(), (n + 1).to_string(), fmt(s.ess), u8::from(s.degenerate).to_string()];
            rec.extend(s.estimate.as_vector().iter().map(|&v| fmt(v)));
            rec.extend(s.cov_diag.iter().map(|&v| fmt(v)));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Inverse of [`write_estimates`], grouped by run in file order.
pub fn read_estimates(path: &Path) -> Result<Vec<(usize, Vec<TrackStep>)>> {
    let mut r = csv::Reader::from_path(path)?;
    let n_cols = r.headers()?.len();
    if n_cols < 4 || (n_cols - 4) % 2 != 0 {
        return Err(Error::Io(format!("estimates file has {n_cols} columns")));
    }
    let dim = (n_cols - 4) / 2;
    let mut out: Vec<(usize, Vec<TrackStep>)> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let run: usize = rec[0].parse().map_err(|_| Error::Io(format!("bad run index {:?}", &rec[0])))?;
        let x = (0..dim).map(|i| parse(&rec[4 + i])).collect::<Result<Vec<_>>>()?;
        let var = (0..dim).map(|i| parse(&rec[4 + dim + i])).collect::<Result<Vec<_>>>()?;
        let step = TrackStep {
            estimate: SceneState::from_vector(DVector::from_vec(x))?,
            cov_diag: var,
            ess: parse(&rec[2])?,
            degenerate: &rec[3] == "1",
        };
        match out.last_mut() {
            Some((r0, steps)) if *r0 == run => steps.push(step),
            _ => out.push((run, vec![step])),
        }
    }
    Ok(out)
}

pub fn write_summary(path: &Path, summary: &Summary) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, summary)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_summary(path: &Path) -> Result<Summary> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

/// Ground-truth trajectory: `step,px,py,pz,vx,vy`.
pub fn write_truth(path: &Path, trajectory: &[TruthPoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["step", "px", "py", "pz", "vx", "vy"])?;
    for (n, t) in trajectory.iter().enumerate() {
        let p = t.position;
        let v = t.velocity;
        w.write_record([(n + 1).to_string(), fmt(p.x), fmt(p.y), fmt(p.z), fmt(v.x), fmt(v.y)])?;
    }
    w.flush()?;
    Ok(())
}

/// Observations in long format: `run,step,anchor,index,re,im`, where
/// `index = m * n_freq + k`.
pub fn write_observations<'a>(
    path: &Path,
    rows: impl IntoIterator<Item = (usize, &'a Observation)>,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["run", "step", "anchor", "index", "re", "im"])?;
    for (run, obs) in rows {
        for (i, y) in obs.y.iter().enumerate() {
            w.write_record([
                run.to_string(),
                (obs.time_index + 1).to_string(),
                obs.anchor_id.to_string(),
                i.to_string(),
                fmt(y.re),
                fmt(y.im),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Vector2, Vector3};

    #[test]
    fn estimates_round_trip_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("estimates.csv");
        let s = SceneState::new(
            Vector3::new(0.1, 1.0 / 3.0, -2.5e-7),
            Vector2::new(f64::MIN_POSITIVE, 1e300),
            &[Vector3::new(0.0, 2.0, 0.1 + 0.2)],
        );
        let step = TrackStep {
            estimate: s,
            cov_diag: vec![0.5; 8],
            ess: 123.456,
            degenerate: true,
        };
        let runs = vec![(0, vec![step.clone(), step.clone()]), (3, vec![step])];
        write_estimates(&path, &runs).unwrap();
        assert_eq!(read_estimates(&path).unwrap(), runs);
    }

    #[test]
    fn steps_round_trip_with_nan() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("steps.csv");
        let row = StepRow {
            run: 1,
            step: 2,
            px: 0.1,
            py: 0.2,
            pz: 0.3,
            ex: 1.0 / 7.0,
            ey: -0.0,
            ez: 1e-17,
            ess: 499.99999999,
            pg_meas_db: -6.5,
            pg_pred_db: -0.25,
            pg_fused_db: -0.125,
            pg_outdated_db: f64::NAN,
            pg_future_db: f64::NAN,
        };
        write_steps(&path, &[row]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), STEPS_HEADER);
        let back = read_steps(&path).unwrap();
        assert_eq!(back.len(), 1);
        let b = back[0];
        assert_eq!(b.ex.to_bits(), row.ex.to_bits());
        assert_eq!(b.ess, row.ess);
        assert!(b.pg_outdated_db.is_nan());
    }

    #[test]
    fn empty_steps_file_has_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("steps.csv");
        write_steps(&path, &[]).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap().trim_end(), STEPS_HEADER);
    }
}
