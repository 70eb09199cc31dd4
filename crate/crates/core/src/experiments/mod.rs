//! Multi-run evaluation: per-run metrics, aggregate statistics, artifact
//! files and max-delay cap sweeps.

mod metrics;
mod stats;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::learners::{
    brute_force_oracle, train, CurvePoint, LearnerConfig, LearnerError, Method, Objective, OracleOutcome,
    DEFAULT_ORACLE_BUDGET,
};
use crate::reward::RewardModel;
use crate::scenario::{apply_local_max_delay, DelayAssignment, FlightPlan, Minute, Scenario, ScenarioError};
use crate::traffic::TrafficError;

pub use metrics::{
    degree_of_difficulty, delay_histogram, histogram_bins, regulated_average_delay, run_metrics, HistogramBin,
    RunMetrics, NO_DELAY_THRESHOLD,
};
pub use stats::{aggregate, ks_cdf, AggregateStats};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("difficulty is undefined when no flight is in a hotspot")]
    UndefinedDifficulty,
    #[error("aggregate needs at least 2 runs, got {0}")]
    InsufficientRuns(usize),
    #[error("invalid experiment setup: {0}")]
    Invalid(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Traffic(#[from] TrafficError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// One training run of an experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub seed: u64,
    pub metrics: RunMetrics,
    pub solution: DelayAssignment,
    pub curve: Vec<CurvePoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    #[serde(flatten)]
    pub metrics: RunMetrics,
}

/// Aggregate bundle written to `metrics.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub method: Method,
    pub n_runs: usize,
    pub base_seed: u64,
    pub episodes: u32,
    pub solved_runs: usize,
    pub avg_delay: AggregateStats,
    pub regulated_flights: AggregateStats,
    pub total_delay: AggregateStats,
    pub remaining_hotspots: AggregateStats,
    pub runs: Vec<RunSummary>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub summary: ExperimentSummary,
    pub runs: Vec<RunRecord>,
}

fn stats_of(values: Vec<f64>) -> Result<AggregateStats, ExperimentError> {
    if values.len() == 1 {
        Ok(AggregateStats::single(values[0]))
    } else {
        aggregate(&values)
    }
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, ExperimentError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| ExperimentError::Invalid(e.to_string()))
}

/// Trains `n_runs` times with seeds `cfg.seed + i` on up to `jobs` threads.
/// Results do not depend on `jobs`.
pub fn experiment(
    s: &Scenario,
    method: Method,
    cfg: &LearnerConfig,
    reward: &RewardModel,
    n_runs: usize,
    jobs: usize,
) -> Result<ExperimentReport, ExperimentError> {
    if n_runs == 0 {
        return Err(ExperimentError::Invalid("n_runs must be at least 1".into()));
    }
    let seeds: Vec<u64> = (0..n_runs as u64).map(|i| cfg.seed + i).collect();
    let runs: Vec<RunRecord> = pool(jobs)?.install(|| {
        seeds
            .par_iter()
            .map(|&seed| {
                let run_cfg = LearnerConfig { seed, ..cfg.clone() };
                let out = train(s, method, &run_cfg, reward)?;
                Ok(RunRecord {
                    seed,
                    metrics: run_metrics(s, &out.solution)?,
                    solution: out.solution,
                    curve: out.curve,
                })
            })
            .collect::<Result<_, ExperimentError>>()
    })?;
    let pick = |f: fn(&RunMetrics) -> f64| stats_of(runs.iter().map(|r| f(&r.metrics)).collect());
    let summary = ExperimentSummary {
        method,
        n_runs,
        base_seed: cfg.seed,
        episodes: cfg.episodes,
        solved_runs: runs.iter().filter(|r| r.metrics.remaining_hotspots == 0).count(),
        avg_delay: pick(|m| m.avg_delay)?,
        regulated_flights: pick(|m| m.regulated_flights as f64)?,
        total_delay: pick(|m| m.total_delay as f64)?,
        remaining_hotspots: pick(|m| m.remaining_hotspots as f64)?,
        runs: runs
            .iter()
            .map(|r| RunSummary {
                seed: r.seed,
                metrics: r.metrics.clone(),
            })
            .collect(),
    };
    Ok(ExperimentReport { summary, runs })
}

pub fn write_curve_csv<W: Write>(curve: &[CurvePoint], out: W) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    for p in curve {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_histogram_csv<W: Write>(bins: &[HistogramBin], out: W) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["bin_lo", "bin_hi", "count"])?;
    for b in bins {
        w.write_record([b.lo.to_string(), b.hi.to_string(), b.count.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>, ExperimentError> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Writes `metrics.json` plus per-run curve, solution and histogram CSVs.
pub fn write_experiment(report: &ExperimentReport, s: &Scenario, dir: &Path) -> Result<(), ExperimentError> {
    fs::create_dir_all(dir)?;
    let json = serde_json::to_string_pretty(&report.summary).expect("summary serialises");
    fs::write(dir.join("metrics.json"), json + "\n")?;
    for run in &report.runs {
        write_curve_csv(&run.curve, create(&dir.join(format!("curve_{}.csv", run.seed)))?)?;
        run.solution
            .write_csv(s, create(&dir.join(format!("solution_{}.csv", run.seed)))?)?;
        write_histogram_csv(
            &run.metrics.histogram,
            create(&dir.join(format!("histogram_{}.csv", run.seed)))?,
        )?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub cap: Minute,
    pub mean_remaining_hotspots: f64,
    pub mean_avg_delay: f64,
    pub mean_regulated_flights: f64,
    pub solved_runs: usize,
    pub n_runs: usize,
    /// Whether any hotspot-free assignment exists under the cap, when the
    /// scenario is small enough to enumerate.
    pub oracle_feasible: Option<bool>,
}

impl SweepRow {
    pub fn resolved(&self) -> bool {
        self.solved_runs == self.n_runs
    }
}

/// Applies each cap to the selected flights and runs an experiment.
#[allow(clippy::too_many_arguments)]
pub fn cap_sweep<F>(
    s: &Scenario,
    selector: F,
    caps: &[Minute],
    method: Method,
    cfg: &LearnerConfig,
    reward: &RewardModel,
    n_runs: usize,
    jobs: usize,
) -> Result<Vec<SweepRow>, ExperimentError>
where
    F: Fn(&FlightPlan) -> bool,
{
    if caps.is_empty() {
        return Err(ExperimentError::Invalid("no caps given".into()));
    }
    caps.iter()
        .map(|&cap| {
            let capped = apply_local_max_delay(s, &selector, cap);
            let report = experiment(&capped, method, cfg, reward, n_runs, jobs)?;
            let oracle_feasible = match brute_force_oracle(&capped, &Objective::TotalDelay, DEFAULT_ORACLE_BUDGET) {
                Ok(OracleOutcome::Optimal { .. }) => Some(true),
                Ok(OracleOutcome::Infeasible { .. }) => Some(false),
                Err(LearnerError::OracleTooLarge { .. }) => None,
                Err(e) => return Err(e.into()),
            };
            let sum = &report.summary;
            Ok(SweepRow {
                cap,
                mean_remaining_hotspots: sum.remaining_hotspots.mean,
                mean_avg_delay: sum.avg_delay.mean,
                mean_regulated_flights: sum.regulated_flights.mean,
                solved_runs: sum.solved_runs,
                n_runs,
                oracle_feasible,
            })
        })
        .collect()
}

/// `cap,mean_remaining_hotspots,mean_avg_delay,mean_regulated_flights`, one row per cap.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["cap", "mean_remaining_hotspots", "mean_avg_delay", "mean_regulated_flights"])?;
    for r in rows {
        w.write_record([
            r.cap.to_string(),
            r.mean_remaining_hotspots.to_string(),
            r.mean_avg_delay.to_string(),
            r.mean_regulated_flights.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::tiny3;

    fn cfg(episodes: u32) -> LearnerConfig {
        LearnerConfig {
            episodes,
            ..Default::default()
        }
    }

    #[test]
    fn single_run_degenerates() {
        let r = experiment(&tiny3(), Method::Irl, &cfg(100), &RewardModel::default(), 1, 1).unwrap();
        let m = &r.runs[0].metrics;
        assert_eq!(r.summary.avg_delay, AggregateStats::single(m.avg_delay));
        assert_eq!(r.summary.runs.len(), 1);
    }

    #[test]
    fn jobs_do_not_change_results() {
        let s = tiny3();
        let a = experiment(&s, Method::EdMarl, &cfg(200), &RewardModel::default(), 3, 1).unwrap();
        let b = experiment(&s, Method::EdMarl, &cfg(200), &RewardModel::default(), 3, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.runs.iter().map(|r| r.seed).collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    #[test]
    fn artifacts_are_written() {
        let dir = tempfile::tempdir().unwrap();
        let s = tiny3();
        let r = experiment(&s, Method::Irl, &cfg(50), &RewardModel::default(), 2, 1).unwrap();
        write_experiment(&r, &s, dir.path()).unwrap();
        for name in ["metrics.json", "curve_0.csv", "solution_1.csv", "histogram_0.csv"] {
            assert!(dir.path().join(name).exists(), "{name}");
        }
        let curve = fs::read_to_string(dir.path().join("curve_0.csv")).unwrap();
        assert!(curve.starts_with("episode,epsilon,hotspot_count,avg_delay,global_reward\n"));
        assert_eq!(curve.lines().count(), 51);
    }
}
