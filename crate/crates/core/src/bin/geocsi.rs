use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use geocsi::harness::output::{
    read_estimates, read_steps, step_rows, write_estimates, write_observations, write_steps, write_summary,
    write_truth,
};
use geocsi::harness::presets::{desk, hallway, DeskOptions};
use geocsi::harness::{evaluate_run, summarize, track, RunSeeds, Scenario, ScenarioConfig};
use geocsi::likelihood::LikelihoodKind;
use geocsi::Result;
use rayon::prelude::*;

#[derive(Parser)]
#[command(name = "geocsi", version, about = "Geometry-based channel simulation, tracking and CSI evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write ground truth and noisy observations.
    Simulate(Common),
    /// Track, evaluate CSI and summarize.
    Track(Common),
    /// Re-evaluate CSI and beamforming from saved estimates.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Estimates file; defaults to `<out>/estimates.csv`.
        #[arg(long)]
        estimates: Option<PathBuf>,
    },
    /// Summarize a steps file into summary.json.
    Summarize {
        #[command(flatten)]
        common: Common,
        /// Steps file; defaults to `<out>/steps.csv`.
        #[arg(long)]
        steps: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Hallway,
    Desk,
}

#[derive(Clone, Copy, ValueEnum)]
enum Likelihood {
    Det,
    Sto,
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML). Takes precedence over `--preset`.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "hallway")]
    preset: Preset,
    /// Tracking seed (observations, filter).
    #[arg(long)]
    seed: Option<u64>,
    /// Evaluation seed (downlink CSI noise).
    #[arg(long)]
    eval_seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    runs: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum)]
    likelihood: Option<Likelihood>,
    /// Infer with a LoS-only model and no map.
    #[arg(long)]
    los_only: bool,
    /// Override the number of particles.
    #[arg(long)]
    particles: Option<usize>,
    /// Override the number of steps.
    #[arg(long)]
    steps_count: Option<usize>,
}

impl Common {
    fn config(&self) -> Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(path) => ScenarioConfig::load(path)?,
            None => match self.preset {
                Preset::Hallway => hallway(),
                Preset::Desk => desk(DeskOptions::default()),
            },
        };
        if let Some(s) = self.seed {
            cfg.seeds.tracking = s;
        }
        if let Some(s) = self.eval_seed {
            cfg.seeds.evaluation = s;
        }
        if let Some(l) = self.likelihood {
            cfg.likelihood = match l {
                Likelihood::Det => LikelihoodKind::Deterministic,
                Likelihood::Sto => LikelihoodKind::Stochastic,
            };
        }
        cfg.los_only |= self.los_only;
        if let Some(n) = self.particles {
            cfg.filter.n_particles = n;
        }
        if let Some(n) = self.steps_count {
            cfg.n_steps = n;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn out_dir(&self) -> Result<&Path> {
        std::fs::create_dir_all(&self.out)?;
        Ok(&self.out)
    }
}

fn seeds(cfg: &ScenarioConfig, run: usize) -> RunSeeds {
    RunSeeds::for_run(cfg.seeds.tracking, cfg.seeds.evaluation, run)
}

fn save_config(dir: &Path, cfg: &ScenarioConfig) -> Result<()> {
    std::fs::write(dir.join("config.toml"), cfg.to_toml_string())?;
    Ok(())
}

fn finish(dir: &Path, cfg: &ScenarioConfig, rows: &[geocsi::harness::StepRow]) -> Result<()> {
    write_steps(&dir.join("steps.csv"), rows)?;
    let summary = summarize(rows, cfg.metrics.convergence_fraction, cfg.metrics.cdf_resolution_m)?;
    write_summary(&dir.join("summary.json"), &summary)?;
    println!(
        "runs={} steps={} horizontal_rmse_m={} vertical_rmse_m={}",
        summary.runs, summary.steps_per_run, summary.horizontal_rmse_m, summary.vertical_rmse_m
    );
    Ok(())
}

fn simulate(c: &Common) -> Result<()> {
    let cfg = c.config()?;
    let dir = c.out_dir()?;
    let scenario = Scenario::new(&cfg)?;
    save_config(dir, &cfg)?;
    write_truth(&dir.join("truth.csv"), &scenario.trajectory)?;
    let mut all = Vec::new();
    for run in 0..c.runs {
        let s = seeds(&cfg, run);
        for n in 0..cfg.n_steps {
            all.extend(scenario.observe(n, s.tracking)?.into_iter().map(|o| (run, o)));
        }
    }
    write_observations(&dir.join("observations.csv"), all.iter().map(|(r, o)| (*r, o)))?;
    println!("wrote {} observations to {}", all.len(), dir.display());
    Ok(())
}

fn run_track(c: &Common) -> Result<()> {
    let cfg = c.config()?;
    let dir = c.out_dir()?;
    let scenario = Scenario::new(&cfg)?;
    save_config(dir, &cfg)?;
    let tracked: Vec<(usize, Vec<_>)> = (0..c.runs)
        .into_par_iter()
        .map(|run| Ok((run, track(&scenario, seeds(&cfg, run).tracking)?)))
        .collect::<Result<_>>()?;
    write_estimates(&dir.join("estimates.csv"), &tracked)?;
    let records = tracked
        .into_par_iter()
        .map(|(run, steps)| evaluate_run(&scenario, run, steps, seeds(&cfg, run).evaluation))
        .collect::<Result<Vec<_>>>()?;
    finish(dir, &cfg, &step_rows(&records))
}

fn evaluate(c: &Common, estimates: Option<&Path>) -> Result<()> {
    let cfg = c.config()?;
    let dir = c.out_dir()?;
    let scenario = Scenario::new(&cfg)?;
    let path = estimates.map_or_else(|| dir.join("estimates.csv"), Path::to_path_buf);
    let tracked = read_estimates(&path)?;
    let records = tracked
        .into_par_iter()
        .map(|(run, steps)| evaluate_run(&scenario, run, steps, seeds(&cfg, run).evaluation))
        .collect::<Result<Vec<_>>>()?;
    finish(dir, &cfg, &step_rows(&records))
}

fn run_summarize(c: &Common, steps: Option<&Path>) -> Result<()> {
    let cfg = c.config()?;
    let dir = c.out_dir()?;
    let path = steps.map_or_else(|| dir.join("steps.csv"), Path::to_path_buf);
    let rows = read_steps(&path)?;
    let summary = summarize(&rows, cfg.metrics.convergence_fraction, cfg.metrics.cdf_resolution_m)?;
    write_summary(&dir.join("summary.json"), &summary)?;
    println!(
        "runs={} steps={} horizontal_rmse_m={} vertical_rmse_m={}",
        summary.runs, summary.steps_per_run, summary.horizontal_rmse_m, summary.vertical_rmse_m
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Simulate(c) => simulate(c),
        Command::Track(c) => run_track(c),
        Command::Evaluate { common, estimates } => evaluate(common, estimates.as_deref()),
        Command::Summarize { common, steps } => run_summarize(common, steps.as_deref()),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
