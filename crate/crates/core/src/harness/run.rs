//! Monte Carlo tracking runs.

use rayon::prelude::*;

use super::scenario::Scenario;
use crate::beamform::{aging_comparison, EfficiencyReport};
use crate::filter::{estimate, init_uniform, predict, resample_regularized, update, SceneState};
use crate::rng::{derive_seed, TAG_RUN};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// 1-based time index.
    pub step: usize,
    pub truth: SceneState,
    pub estimate: SceneState,
    pub cov_diag: Vec<f64>,
    /// ESS after the update, before resampling.
    pub ess: f64,
    pub degenerate: bool,
    pub efficiency: EfficiencyReport,
}

impl StepRecord {
    pub fn horizontal_error(&self) -> f64 {
        let d = self.estimate.position() - self.truth.position();
        d.xy().norm()
    }

    pub fn vertical_error(&self) -> f64 {
        (self.estimate.position().z - self.truth.position().z).abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run: usize,
    pub steps: Vec<StepRecord>,
}

/// Seeds of one Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSeeds {
    pub tracking: u64,
    pub evaluation: u64,
}

impl RunSeeds {
    pub fn for_run(tracking: u64, evaluation: u64, run: usize) -> Self {
        Self {
            tracking: derive_seed(tracking, &[TAG_RUN, run as u64]),
            evaluation: derive_seed(evaluation, &[TAG_RUN, run as u64]),
        }
    }
}

/// Filter output of one step, before any CSI evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackStep {
    pub estimate: SceneState,
    pub cov_diag: Vec<f64>,
    pub ess: f64,
    pub degenerate: bool,
}

/// Runs the filter over the scenario trajectory:
/// observe -> update -> estimate -> resample -> predict.
/// Only the tracking seed is consumed.
pub fn track(scenario: &Scenario, tracking_seed: u64) -> Result<Vec<TrackStep>> {
    let cfg = &scenario.config;
    let (lo, hi) = scenario.init_bounds();
    let mut ps = init_uniform(&lo, &hi, cfg.filter.n_particles, tracking_seed)?;
    let kind = cfg.likelihood;
    let mut out = Vec::with_capacity(cfg.n_steps);
    for n in 0..cfg.n_steps {
        let obs = scenario.observe(n, tracking_seed)?;
        let report = update(&mut ps, |s| {
            s.hypothesis()
                .and_then(|h| scenario.inference.loglik(kind, &h, &obs))
                .map_or(f64::NEG_INFINITY, |l| l.value)
        });
        let (est, cov) = estimate(&ps);
        out.push(TrackStep {
            estimate: est,
            cov_diag: cov.diagonal().iter().copied().collect(),
            ess: ps.ess(),
            degenerate: report.degenerate,
        });
        resample_regularized(&mut ps, &cfg.filter.regularization, cfg.filter.ess_threshold, tracking_seed, n);
        predict(&mut ps, &cfg.motion, tracking_seed, n);
    }
    Ok(out)
}

/// CSI and beamforming evaluation of saved filter estimates. Only the
/// evaluation seed is consumed.
pub fn evaluate_run(scenario: &Scenario, run: usize, steps: Vec<TrackStep>, evaluation_seed: u64) -> Result<RunRecord> {
    let setup = scenario.carrier_setup();
    let positions: Vec<_> = scenario.trajectory[..steps.len()].iter().map(|t| t.position).collect();
    let estimates: Vec<SceneState> = steps.iter().map(|s| s.estimate.clone()).collect();
    let reports = aging_comparison(&setup, &positions, &estimates, evaluation_seed)?;
    let steps = steps
        .into_iter()
        .zip(reports)
        .enumerate()
        .map(|(n, (t, efficiency))| StepRecord {
            step: n + 1,
            truth: scenario.truth_state(n),
            estimate: t.estimate,
            cov_diag: t.cov_diag,
            ess: t.ess,
            degenerate: t.degenerate,
            efficiency,
        })
        .collect();
    Ok(RunRecord { run, steps })
}

/// Tracking followed by CSI evaluation of one run.
pub fn run_tracking(scenario: &Scenario, run: usize, seeds: RunSeeds) -> Result<RunRecord> {
    let steps = track(scenario, seeds.tracking)?;
    evaluate_run(scenario, run, steps, seeds.evaluation)
}

/// Independent runs `0..runs`, executed in parallel and returned in order.
pub fn run_campaign(scenario: &Scenario, runs: usize) -> Result<Vec<RunRecord>> {
    let seeds = scenario.config.seeds;
    (0..runs)
        .into_par_iter()
        .map(|r| run_tracking(scenario, r, RunSeeds::for_run(seeds.tracking, seeds.evaluation, r)))
        .collect()
}
