//! Position-error and efficiency summaries.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Minimal per-step row needed for summaries; mirrors one `steps.csv` line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRow {
    pub run: usize,
    pub step: usize,
    pub px: f64,
    pub py: f64,
    pub pz: f64,
    pub ex: f64,
    pub ey: f64,
    pub ez: f64,
    pub ess: f64,
    pub pg_meas_db: f64,
    pub pg_pred_db: f64,
    pub pg_fused_db: f64,
    pub pg_outdated_db: f64,
    pub pg_future_db: f64,
}

impl StepRow {
    pub fn horizontal_error(&self) -> f64 {
        (self.ex - self.px).hypot(self.ey - self.py)
    }

    pub fn vertical_error(&self) -> f64 {
        (self.ez - self.pz).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run: usize,
    pub horizontal_rmse_m: f64,
    pub vertical_rmse_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub runs: usize,
    pub steps_per_run: usize,
    /// First step (1-based) included in the RMSE window.
    pub first_converged_step: usize,
    pub horizontal_rmse_m: f64,
    pub vertical_rmse_m: f64,
    pub per_run: Vec<RunSummary>,
    pub cdf_resolution_m: f64,
    /// `horizontal_cdf[k]` is the fraction of all steps with horizontal
    /// error at most `k * cdf_resolution_m`.
    pub horizontal_cdf: Vec<f64>,
    pub vertical_cdf: Vec<f64>,
    /// Mean path gains relative to perfect CSI over the converged window,
    /// computed on the linear scale and reported in dB.
    pub mean_pg_meas_db: Option<f64>,
    pub mean_pg_pred_db: Option<f64>,
    pub mean_pg_fused_db: Option<f64>,
    pub mean_pg_outdated_db: Option<f64>,
    pub mean_pg_future_db: Option<f64>,
}

/// First 1-based step of the converged window.
pub fn first_converged_step(steps_per_run: usize, convergence_fraction: f64) -> usize {
    (convergence_fraction * steps_per_run as f64).floor() as usize + 1
}

fn rmse(errors: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = errors.fold((0.0, 0usize), |(s, n), e| (s + e * e, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        (sum / n as f64).sqrt()
    }
}

fn cdf(errors: &[f64], resolution: f64) -> Vec<f64> {
    if errors.is_empty() {
        return Vec::new();
    }
    let max = errors.iter().copied().fold(0.0, f64::max);
    // Errors within a relative 1e-9 of a bin edge count toward that edge.
    let bin = |e: f64| (e / resolution - 1e-9).ceil().max(0.0) as usize;
    let bins = bin(max).min(100_000) + 1;
    let mut counts = vec![0usize; bins];
    for &e in errors {
        let k = bin(e).min(bins - 1);
        counts[k] += 1;
    }
    let n = errors.len() as f64;
    let mut acc = 0;
    counts
        .into_iter()
        .map(|c| {
            acc += c;
            acc as f64 / n
        })
        .collect()
}

/// Mean of linear gains given in dB, returned in dB. NaN entries (aging
/// figures of the first step) are skipped; `None` if nothing remains.
pub fn mean_db(values_db: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values_db
        .filter(|v| !v.is_nan())
        .fold((0.0, 0usize), |(s, n), v| (s + 10f64.powf(v / 10.0), n + 1));
    (n > 0).then(|| 10.0 * (sum / n as f64).log10())
}

pub fn summarize(rows: &[StepRow], convergence_fraction: f64, cdf_resolution_m: f64) -> Result<Summary> {
    if rows.is_empty() {
        return Err(Error::Dimension("no step records to summarize".into()));
    }
    let steps_per_run = rows.iter().map(|r| r.step).max().unwrap_or(0);
    let first = first_converged_step(steps_per_run, convergence_fraction);
    let converged: Vec<&StepRow> = rows.iter().filter(|r| r.step >= first).collect();

    let mut run_ids: Vec<usize> = rows.iter().map(|r| r.run).collect();
    run_ids.sort_unstable();
    run_ids.dedup();
    let per_run = run_ids
        .iter()
        .map(|&run| {
            let mine = || converged.iter().filter(move |r| r.run == run);
            RunSummary {
                run,
                horizontal_rmse_m: rmse(mine().map(|r| r.horizontal_error())),
                vertical_rmse_m: rmse(mine().map(|r| r.vertical_error())),
            }
        })
        .collect();

    let h_all: Vec<f64> = rows.iter().map(StepRow::horizontal_error).collect();
    let v_all: Vec<f64> = rows.iter().map(StepRow::vertical_error).collect();
    Ok(Summary {
        runs: run_ids.len(),
        steps_per_run,
        first_converged_step: first,
        horizontal_rmse_m: rmse(converged.iter().map(|r| r.horizontal_error())),
        vertical_rmse_m: rmse(converged.iter().map(|r| r.vertical_error())),
        per_run,
        cdf_resolution_m,
        horizontal_cdf: cdf(&h_all, cdf_resolution_m),
        vertical_cdf: cdf(&v_all, cdf_resolution_m),
        mean_pg_meas_db: mean_db(converged.iter().map(|r| r.pg_meas_db)),
        mean_pg_pred_db: mean_db(converged.iter().map(|r| r.pg_pred_db)),
        mean_pg_fused_db: mean_db(converged.iter().map(|r| r.pg_fused_db)),
        mean_pg_outdated_db: mean_db(converged.iter().map(|r| r.pg_outdated_db)),
        mean_pg_future_db: mean_db(converged.iter().map(|r| r.pg_future_db)),
    })
}

/// Incremental RMSE over the converged window, fed one row at a time.
#[derive(Debug, Clone, Default)]
pub struct StreamingRmse {
    first_step: usize,
    sum_h: f64,
    sum_v: f64,
    count: usize,
}

impl StreamingRmse {
    pub fn new(first_step: usize) -> Self {
        Self {
            first_step,
            ..Self::default()
        }
    }

    pub fn push(&mut self, row: &StepRow) {
        if row.step >= self.first_step {
            self.sum_h += row.horizontal_error().powi(2);
            self.sum_v += row.vertical_error().powi(2);
            self.count += 1;
        }
    }

    /// `(horizontal, vertical)` RMSE.
    pub fn finish(&self) -> (f64, f64) {
        let n = self.count as f64;
        ((self.sum_h / n).sqrt(), (self.sum_v / n).sqrt())
    }
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn row(run: usize, step: usize, dx: f64, dz: f64) -> StepRow {
        StepRow {
            run,
            step,
            px: 1.0,
            py: 2.0,
            pz: 1.0,
            ex: 1.0 + dx,
            ey: 2.0,
            ez: 1.0 + dz,
            ess: 10.0,
            pg_meas_db: -3.0,
            pg_pred_db: 0.0,
            pg_fused_db: 0.0,
            pg_outdated_db: f64::NAN,
            pg_future_db: f64::NAN,
        }
    }

    #[test]
    fn zero_error_rmse() {
        let rows: Vec<_> = (1..=5).map(|s| row(0, s, 0.0, 0.0)).collect();
        let s = summarize(&rows, 0.2, 0.01).unwrap();
        assert_eq!(s.horizontal_rmse_m, 0.0);
        assert_eq!(s.vertical_rmse_m, 0.0);
        assert_eq!(s.horizontal_cdf, vec![1.0]);
    }

    #[test]
    fn single_three_centimeter_error() {
        let s = summarize(&[row(0, 1, 0.03, 0.0)], 0.0, 0.01).unwrap();
        assert_relative_eq!(s.horizontal_rmse_m, 0.03, epsilon = 1e-12);
        assert_eq!(s.first_converged_step, 1);
        assert_eq!(s.horizontal_cdf.len(), 4);
        assert_eq!(s.horizontal_cdf[3], 1.0);
        assert_eq!(s.horizontal_cdf[2], 0.0);
    }

    #[test]
    fn mean_db_averages_linear_values() {
        assert_relative_eq!(mean_db([0.0, 10.0, f64::NAN].into_iter()).unwrap(), 10.0 * 5.5f64.log10(), epsilon = 1e-12);
    }

    #[test]
    fn mean_db_of_nothing_is_none() {
        assert_eq!(mean_db([f64::NAN].into_iter()), None);
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(summarize(&[], 0.2, 0.01).is_err());
    }

    #[test]
    fn window_excludes_leading_steps() {
        assert_eq!(first_converged_step(50, 0.2), 11);
        let rows = vec![row(0, 1, 5.0, 0.0), row(0, 2, 0.1, 0.0)];
        let s = summarize(&rows, 0.5, 0.01).unwrap();
        assert_relative_eq!(s.horizontal_rmse_m, 0.1, epsilon = 1e-12);
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
