//! Experiment sweeps: build scenarios, evaluate a controller on each, and
//! write the results table, trend fits and charts.

mod analysis;
mod config;
mod plot;
mod runner;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{self, AgentError, Checkpoint, DqnPolicy, FixedTimePolicy, QNetwork, RandomPolicy, TrainConfig};
use crate::metrics::{self, EventLog, MetricsError, MetricsReport};
use crate::scenario::{
    build_experiment_grid, generate_scenario, grid_label, shuffle_departures, HourlyCounts, PerturbMode, Scenario,
    ScenarioError, DEFAULT_DURATION_S,
};
use crate::seeding::derive_seed;
use crate::shift::{normalize, phase_ks_distance, PhaseCounts, ShiftError, TrafficDistribution};
use crate::sim::{run_episode, Controller, SimConfig, SimError};

pub use analysis::{
    average_ranks, fit_trend, ks_nonlinearity_report, pearson, shift_alarm, spearman, write_nonlinearity_csv,
    AlarmStatus, NonlinearityRow, TrendFit,
};
pub use config::{parse_ks_levels, parse_volumes, FileConfig};
pub use plot::{LinePlot, Series};
pub use runner::{
    evaluate_grid, experiment_one, experiment_three, experiment_two, load_settings, run_numbered, Settings,
    DEFAULT_SEED_COUNT, DEFAULT_TRAIN_COUNTS, SAMPLE_TURN_COUNTS,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Shift(#[from] ShiftError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ExperimentError {
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            ExperimentError::Config(_) | ExperimentError::Agent(AgentError::Config(_))
        )
    }
}

/// Results table header.
pub const RESULTS_HEADER: [&str; 9] = [
    "scenario_label",
    "ks_distance",
    "total_volume",
    "seed",
    "normalized_throughput",
    "mean_ett_s",
    "mean_tt_s",
    "mean_delay_s",
    "timed_out",
];

/// Default KS levels of the fixed-volume sweep.
pub const DEFAULT_SHIFT_LEVELS: [f64; 5] = [0.0, 0.02, 0.04, 0.08, 0.16];
/// Default volumes of the fixed-distribution sweep; the training volume is
/// added when it is not already present.
pub const DEFAULT_SWEEP_VOLUMES: [u64; 6] = [2000, 3000, 4000, 5000, 6000, 7000];
/// Scenarios made by reshuffling the training scenario's departures.
pub const TRAINING_SHUFFLES: usize = 10;

pub fn default_grid_levels() -> Vec<f64> {
    (0..7).map(|k| k as f64 / 10.0).collect()
}

pub fn default_grid_volumes() -> Vec<u64> {
    (0..13).map(|k| 4000 + 250 * k).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Hourly buckets from a turn-count file, compared with the training hour.
    RealScenarios,
    /// KS levels at the training volume.
    FixedVolumeSweep,
    /// Volumes at the training distribution.
    FixedDistributionSweep,
    /// Every KS level at every volume.
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Dqn,
    FixedTime,
    Random,
}

impl std::str::FromStr for PolicyKind {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "dqn" => Ok(Self::Dqn),
            "fixed_time" | "fixed" => Ok(Self::FixedTime),
            "random" => Ok(Self::Random),
            other => Err(ExperimentError::Config(format!("unknown policy {other:?}"))),
        }
    }
}

/// Where the evaluated Q-network comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum AgentSource {
    Checkpoint(PathBuf),
    Train(TrainConfig),
    Network(QNetwork),
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub ks_levels: Vec<f64>,
    pub volumes: Vec<u64>,
    pub seeds: Vec<u64>,
    pub mode: PerturbMode,
    pub duration_s: f64,
    /// Training scenario volumes; their pmf is the reference distribution.
    pub train_counts: PhaseCounts,
    /// Hourly buckets evaluated by [`ExperimentKind::RealScenarios`].
    pub real_buckets: Vec<HourlyCounts>,
    pub policy: PolicyKind,
    pub agent: AgentSource,
    pub sim: SimConfig,
    /// Evaluation threads; 0 uses every core.
    pub workers: usize,
    /// Per-run event logs are written here when set.
    pub event_log_dir: Option<PathBuf>,
}

impl ExperimentSpec {
    /// A spec trained on `train_counts` with default agent, simulator and
    /// one evaluation seed.
    pub fn new(kind: ExperimentKind, train_counts: PhaseCounts) -> Self {
        Self {
            kind,
            ks_levels: Vec::new(),
            volumes: Vec::new(),
            seeds: vec![0],
            mode: PerturbMode::default(),
            duration_s: DEFAULT_DURATION_S,
            train_counts,
            real_buckets: Vec::new(),
            policy: PolicyKind::Dqn,
            agent: AgentSource::Train(TrainConfig::default()),
            sim: SimConfig::default(),
            workers: 0,
            event_log_dir: None,
        }
    }

    pub fn train_distribution(&self) -> Result<TrafficDistribution, ExperimentError> {
        Ok(normalize(&self.train_counts)?)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::Config(m.to_string()));
        if self.seeds.is_empty() {
            return bad("seed list is empty");
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return bad("duration must be positive");
        }
        if self.train_counts.total() == 0 {
            return bad("training scenario has no vehicles");
        }
        if self.ks_levels.iter().any(|l| !(0.0..=1.0).contains(l)) {
            return bad("KS levels must lie in [0, 1]");
        }
        match self.kind {
            ExperimentKind::RealScenarios if self.real_buckets.is_empty() => bad("no turn-count buckets to evaluate"),
            ExperimentKind::FixedVolumeSweep if self.ks_levels.is_empty() => bad("KS level list is empty"),
            ExperimentKind::FixedDistributionSweep if self.volumes.is_empty() => bad("volume list is empty"),
            ExperimentKind::Grid if self.ks_levels.is_empty() => bad("KS level list is empty"),
            ExperimentKind::Grid if self.volumes.is_empty() => bad("volume list is empty"),
            _ => Ok(()),
        }
    }

    /// Scenarios evaluated under `seed`.
    pub fn scenarios(&self, seed: u64) -> Result<Vec<(f64, Scenario)>, ExperimentError> {
        let p_train = self.train_distribution()?;
        let grid = |levels: &[f64], volumes: &[u64]| -> Result<Vec<(f64, Scenario)>, ExperimentError> {
            Ok(
                build_experiment_grid(&p_train, levels, volumes, self.mode, self.duration_s, seed)?
                    .into_iter()
                    .map(|g| (g.ks_level, g.scenario))
                    .collect(),
            )
        };
        match self.kind {
            ExperimentKind::RealScenarios => self
                .real_buckets
                .iter()
                .enumerate()
                .map(|(k, b)| {
                    let s = generate_scenario(
                        &b.counts,
                        self.duration_s,
                        derive_seed(seed, &[k as u64]),
                        b.label.clone(),
                    )?;
                    let d = match normalize(&b.counts) {
                        Ok(p) => phase_ks_distance(&p_train, &p),
                        Err(_) => f64::NAN,
                    };
                    Ok((d, s))
                })
                .collect(),
            ExperimentKind::FixedVolumeSweep => grid(&self.ks_levels, &[self.train_counts.total()]),
            ExperimentKind::FixedDistributionSweep => grid(&[0.0], &self.volumes),
            ExperimentKind::Grid => grid(&self.ks_levels, &self.volumes),
        }
    }
}

/// The training scenario and its departure-time reshuffles.
pub fn training_scenarios(
    counts: &PhaseCounts,
    duration_s: f64,
    seed: u64,
    shuffles: usize,
) -> Result<Vec<Scenario>, ExperimentError> {
    let base = generate_scenario(counts, duration_s, seed, "train")?;
    Ok((0..shuffles.max(1))
        .map(|k| {
            let mut s = shuffle_departures(&base, derive_seed(seed, &[k as u64]));
            s.label = format!("train_{k}");
            s
        })
        .collect())
}

/// Trains an agent on the reshuffled training scenario.
pub fn train_agent(
    counts: &PhaseCounts,
    duration_s: f64,
    sim: &SimConfig,
    cfg: &TrainConfig,
) -> Result<agent::TrainOutcome, ExperimentError> {
    let scenarios = training_scenarios(counts, duration_s, cfg.seed, TRAINING_SHUFFLES)?;
    Ok(agent::train(&scenarios, sim, cfg)?)
}

/// A controller ready to be cloned into worker threads.
#[derive(Debug, Clone)]
pub enum PreparedPolicy {
    Dqn(QNetwork),
    FixedTime(FixedTimePolicy),
    Random,
}

impl PreparedPolicy {
    pub fn prepare(spec: &ExperimentSpec) -> Result<Self, ExperimentError> {
        Ok(match spec.policy {
            PolicyKind::FixedTime => Self::FixedTime(FixedTimePolicy::default()),
            PolicyKind::Random => Self::Random,
            PolicyKind::Dqn => Self::Dqn(match &spec.agent {
                AgentSource::Network(n) => n.clone(),
                AgentSource::Checkpoint(path) => Checkpoint::load(path)?.q_network(),
                AgentSource::Train(cfg) => {
                    log::info!("training agent for {} steps", cfg.total_steps);
                    train_agent(&spec.train_counts, spec.duration_s, &spec.sim, cfg)?.network
                }
            }),
        })
    }

    /// Fresh controller for one run; the random policy is seeded per run.
    pub fn controller(&self, run_seed: u64) -> Box<dyn Controller + Send> {
        match self {
            Self::Dqn(net) => Box::new(DqnPolicy::greedy(net.clone())),
            Self::FixedTime(p) => Box::new(p.clone()),
            Self::Random => Box::new(RandomPolicy::new(run_seed)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario_label: String,
    /// Requested level; for real scenarios the measured distance.
    pub ks_level: f64,
    /// Distance between the scenario's realized counts and the training pmf.
    pub ks_distance: f64,
    pub total_volume: u64,
    pub seed: u64,
    pub report: MetricsReport,
}

/// Evaluates one scenario.
pub fn evaluate_scenario(
    policy: &PreparedPolicy,
    sim: &SimConfig,
    scenario: &Scenario,
    p_train: &TrafficDistribution,
    seed: u64,
) -> Result<(ResultRow, EventLog), ExperimentError> {
    let mut controller = policy.controller(derive_seed(seed, &[scenario.seed]));
    let (log, _) = run_episode(sim, scenario, controller.as_mut(), seed)?;
    let report = metrics::aggregate(&log)?;
    let ks_distance = phase_ks_distance(p_train, &scenario.distribution()?);
    Ok((
        ResultRow {
            scenario_label: scenario.label.clone(),
            ks_level: f64::NAN,
            ks_distance,
            total_volume: scenario.total_vehicles() as u64,
            seed,
            report,
        },
        log,
    ))
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub rows: Vec<ResultRow>,
    pub policy: PreparedPolicy,
}

/// Builds every (scenario, seed) run, evaluates them on a bounded worker
/// pool and returns the rows sorted by KS level, volume, label and seed.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutcome, ExperimentError> {
    spec.validate()?;
    let policy = PreparedPolicy::prepare(spec)?;
    let rows = evaluate_with(spec, &policy)?;
    Ok(ExperimentOutcome { rows, policy })
}

/// [`run_experiment`] with an already prepared controller.
pub fn evaluate_with(spec: &ExperimentSpec, policy: &PreparedPolicy) -> Result<Vec<ResultRow>, ExperimentError> {
    spec.validate()?;
    let p_train = spec.train_distribution()?;
    let mut jobs = Vec::new();
    for &seed in &spec.seeds {
        for (level, scenario) in spec.scenarios(seed)? {
            jobs.push((level, seed, scenario));
        }
    }
    if let Some(dir) = &spec.event_log_dir {
        fs::create_dir_all(dir)?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| ExperimentError::Config(format!("worker pool: {e}")))?;
    let results: Vec<Result<ResultRow, ExperimentError>> = pool.install(|| {
        jobs.par_iter()
            .map(|(level, seed, scenario)| {
                let (mut row, log) = evaluate_scenario(policy, &spec.sim, scenario, &p_train, *seed)?;
                row.ks_level = if spec.kind == ExperimentKind::RealScenarios {
                    row.ks_distance
                } else {
                    *level
                };
                if let Some(dir) = &spec.event_log_dir {
                    let file = fs::File::create(dir.join(format!("{}_seed{}_events.csv", row.scenario_label, seed)))?;
                    log.write_csv(file)?;
                }
                Ok(row)
            })
            .collect()
    });
    let mut rows = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    sort_rows(&mut rows);
    Ok(rows)
}

pub fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by(|a, b| {
        a.ks_level
            .total_cmp(&b.ks_level)
            .then(a.total_volume.cmp(&b.total_volume))
            .then_with(|| a.scenario_label.cmp(&b.scenario_label))
            .then(a.seed.cmp(&b.seed))
    });
}

fn fmt_f(v: f64, digits: usize) -> String {
    if v.is_finite() {
        format!("{v:.digits$}")
    } else {
        "NaN".to_string()
    }
}

pub fn write_results_csv<W: std::io::Write>(rows: &[ResultRow], out: W) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULTS_HEADER)?;
    for r in rows {
        w.write_record([
            r.scenario_label.clone(),
            fmt_f(r.ks_distance, 6),
            r.total_volume.to_string(),
            r.seed.to_string(),
            fmt_f(r.report.normalized_throughput, 6),
            fmt_f(r.report.mean_extended_travel_time_s, 3),
            fmt_f(r.report.mean_travel_time_s, 3),
            fmt_f(r.report.mean_delay_s, 3),
            r.report.timed_out.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Seed-averaged metrics of one (KS level, volume) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub ks_level: f64,
    pub volume: u64,
    pub runs: usize,
    pub mean_ks_distance: f64,
    pub mean_throughput: f64,
    pub mean_ett_s: f64,
    pub mean_tt_s: f64,
    pub mean_delay_s: f64,
}

/// Groups rows by requested KS level and scenario label; cells come out in
/// level, then volume order.
pub fn summarize(rows: &[ResultRow]) -> Vec<CellSummary> {
    let mut groups: BTreeMap<(u64, u64, &str), Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        // a level's bit pattern orders like the level for non-negative values
        groups
            .entry((r.ks_level.max(0.0).to_bits(), r.total_volume, r.scenario_label.as_str()))
            .or_default()
            .push(r);
    }
    groups
        .into_values()
        .map(|g| {
            let n = g.len() as f64;
            let m = |f: &dyn Fn(&ResultRow) -> f64| g.iter().map(|r| f(r)).sum::<f64>() / n;
            CellSummary {
                ks_level: g[0].ks_level,
                volume: g[0].total_volume,
                runs: g.len(),
                mean_ks_distance: m(&|r| r.ks_distance),
                mean_throughput: m(&|r| r.report.normalized_throughput),
                mean_ett_s: m(&|r| r.report.mean_extended_travel_time_s),
                mean_tt_s: m(&|r| r.report.mean_travel_time_s),
                mean_delay_s: m(&|r| r.report.mean_delay_s),
            }
        })
        .collect()
}

/// Per KS level, linear fits of throughput and ETT against volume. Levels with
/// fewer than two volumes are skipped.
pub fn volume_trends(cells: &[CellSummary]) -> Vec<(f64, &'static str, TrendFit)> {
    let mut by_level: BTreeMap<u64, Vec<&CellSummary>> = BTreeMap::new();
    for c in cells {
        by_level.entry(c.ks_level.max(0.0).to_bits()).or_default().push(c);
    }
    let mut out = Vec::new();
    for group in by_level.values() {
        let level = group[0].ks_level;
        for (name, f) in [
            (
                "normalized_throughput",
                (|c: &CellSummary| c.mean_throughput) as fn(&CellSummary) -> f64,
            ),
            ("mean_ett_s", |c: &CellSummary| c.mean_ett_s),
        ] {
            let pts: Vec<(f64, f64)> = group.iter().map(|c| (c.volume as f64, f(c))).collect();
            if let Ok(fit) = fit_trend(&pts) {
                out.push((level, name, fit));
            }
        }
    }
    out
}

/// Files written by [`write_outputs`].
#[derive(Debug, Clone, Default)]
pub struct OutputFiles {
    pub results_csv: PathBuf,
    pub trends_csv: Option<PathBuf>,
    pub plots: Vec<PathBuf>,
}

/// Writes `<stem>.csv`, `<stem>_trends.csv` and the charts into `dir`.
pub fn write_outputs(dir: &Path, stem: &str, rows: &[ResultRow]) -> Result<OutputFiles, ExperimentError> {
    fs::create_dir_all(dir)?;
    let mut files = OutputFiles {
        results_csv: dir.join(format!("{stem}.csv")),
        ..OutputFiles::default()
    };
    write_results_csv(rows, fs::File::create(&files.results_csv)?)?;

    let cells = summarize(rows);
    let trends = volume_trends(&cells);
    if !trends.is_empty() {
        let path = dir.join(format!("{stem}_trends.csv"));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record([
            "ks_level",
            "metric",
            "slope",
            "intercept",
            "pearson",
            "spearman",
            "points",
        ])?;
        for (level, metric, fit) in &trends {
            w.write_record([
                fmt_f(*level, 3),
                metric.to_string(),
                format!("{:.9e}", fit.slope),
                fmt_f(fit.intercept, 6),
                fmt_f(fit.pearson, 6),
                fmt_f(fit.spearman, 6),
                fit.n.to_string(),
            ])?;
        }
        w.flush()?;
        files.trends_csv = Some(path);
    }

    let mut plots: Vec<(String, LinePlot)> = Vec::new();
    let mut levels: Vec<f64> = cells.iter().map(|c| c.ks_level).collect();
    levels.dedup();
    let mut volumes: Vec<u64> = cells.iter().map(|c| c.volume).collect();
    volumes.sort_unstable();
    volumes.dedup();

    if volumes.len() > 1 && levels.len() < cells.len() {
        for (name, title, y, f) in [
            (
                "throughput_vs_volume",
                "Normalized throughput by volume",
                "normalized throughput",
                (|c: &CellSummary| c.mean_throughput) as fn(&CellSummary) -> f64,
            ),
            (
                "ett_vs_volume",
                "Extended travel time by volume",
                "mean extended travel time (s)",
                |c: &CellSummary| c.mean_ett_s,
            ),
        ] {
            let mut p = LinePlot::new(title, "total vehicle volume", y);
            for &level in &levels {
                let pts = cells
                    .iter()
                    .filter(|c| c.ks_level == level)
                    .map(|c| (c.volume as f64, f(c)))
                    .collect();
                p.add_series(format!("KS {level:.3}"), pts);
            }
            plots.push((name.to_string(), p));
        }
    }
    if levels.len() > 1 {
        for (name, title, y, f) in [
            (
                "throughput_vs_ks",
                "Normalized throughput by phase KS distance",
                "normalized throughput",
                (|c: &CellSummary| c.mean_throughput) as fn(&CellSummary) -> f64,
            ),
            (
                "ett_vs_ks",
                "Extended travel time by phase KS distance",
                "mean extended travel time (s)",
                |c: &CellSummary| c.mean_ett_s,
            ),
            (
                "delay_vs_ks",
                "Intersection delay by phase KS distance",
                "mean delay (s)",
                |c: &CellSummary| c.mean_delay_s,
            ),
        ] {
            let mut p = LinePlot::new(title, "phase KS distance", y);
            let multi = spec_volumes_group(&cells, &volumes);
            for (label, group) in multi {
                let pts = group.iter().map(|c| (c.mean_ks_distance, f(c))).collect();
                p.add_series(label, pts);
            }
            plots.push((name.to_string(), p));
        }
    }
    for (name, p) in plots {
        let path = dir.join(format!("{stem}_{name}.svg"));
        fs::write(&path, p.to_svg())?;
        files.plots.push(path);
    }
    Ok(files)
}

/// One series per volume when several levels share it, otherwise a single
/// series over all cells (real scenarios have one volume per level).
fn spec_volumes_group<'a>(cells: &'a [CellSummary], volumes: &[u64]) -> Vec<(String, Vec<&'a CellSummary>)> {
    let shared: Vec<(String, Vec<&CellSummary>)> = volumes
        .iter()
        .map(|&v| {
            (
                format!("{v} vehicles"),
                cells.iter().filter(|c| c.volume == v).collect::<Vec<_>>(),
            )
        })
        .filter(|(_, g)| g.len() > 1)
        .collect();
    if shared.is_empty() {
        let mut all: Vec<&CellSummary> = cells.iter().collect();
        all.sort_by(|a, b| a.mean_ks_distance.total_cmp(&b.mean_ks_distance));
        vec![("all scenarios".to_string(), all)]
    } else {
        shared
    }
}

/// Every row's distance must match its scenario's realized counts; returns
/// the labels that do not.
pub fn audit_ks_distances(spec: &ExperimentSpec, rows: &[ResultRow]) -> Result<Vec<String>, ExperimentError> {
    let p_train = spec.train_distribution()?;
    let mut bad = Vec::new();
    for &seed in &spec.seeds {
        for (_, s) in spec.scenarios(seed)? {
            let d = phase_ks_distance(&p_train, &s.distribution()?);
            let matched = rows
                .iter()
                .find(|r| r.seed == seed && r.scenario_label == s.label)
                .is_some_and(|r| (r.ks_distance - d).abs() < 1e-12);
            if !matched {
                bad.push(format!("{} seed {seed}", s.label));
            }
        }
    }
    Ok(bad)
}

/// Label of a sweep cell; re-exported for callers that match rows by name.
pub fn cell_label(ks_level: f64, volume: u64) -> String {
    grid_label(ks_level, volume)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(kind: ExperimentKind) -> ExperimentSpec {
        let mut s = ExperimentSpec::new(kind, PhaseCounts([25; 8]));
        s.duration_s = 300.0;
        s.policy = PolicyKind::FixedTime;
        s.workers = 2;
        s
    }

    #[test]
    fn grid_row_count() {
        let mut s = quick(ExperimentKind::Grid);
        s.ks_levels = default_grid_levels();
        s.volumes = default_grid_volumes().iter().map(|v| v / 40).collect();
        let out = run_experiment(&s).unwrap();
        assert_eq!(out.rows.len(), 91);
        assert!(audit_ks_distances(&s, &out.rows).unwrap().is_empty());
    }

    #[test]
    fn empty_sweeps_are_config_errors() {
        let mut s = quick(ExperimentKind::Grid);
        s.ks_levels = vec![0.0];
        assert!(run_experiment(&s).unwrap_err().is_config());
        let s = quick(ExperimentKind::FixedDistributionSweep);
        assert!(run_experiment(&s).unwrap_err().is_config());
        let mut s = quick(ExperimentKind::FixedVolumeSweep);
        s.ks_levels = vec![0.0];
        s.seeds.clear();
        assert!(run_experiment(&s).unwrap_err().is_config());
    }

    #[test]
    fn rerun_gives_identical_csv_regardless_of_workers() {
        let mut s = quick(ExperimentKind::FixedVolumeSweep);
        s.ks_levels = vec![0.0, 0.04, 0.16];
        s.seeds = vec![1, 2];
        s.policy = PolicyKind::Random;
        let csv = |spec: &ExperimentSpec| {
            let mut buf = Vec::new();
            write_results_csv(&run_experiment(spec).unwrap().rows, &mut buf).unwrap();
            buf
        };
        let a = csv(&s);
        s.workers = 1;
        assert_eq!(a, csv(&s));
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with(&RESULTS_HEADER.join(",")));
        assert_eq!(text.lines().count(), 7);
    }

    #[test]
    fn outputs_are_written() {
        let mut s = quick(ExperimentKind::Grid);
        s.ks_levels = vec![0.0, 0.2];
        s.volumes = vec![150, 200, 250];
        let rows = run_experiment(&s).unwrap().rows;
        let dir = tempfile::tempdir().unwrap();
        let files = write_outputs(dir.path(), "grid", &rows).unwrap();
        assert!(files.results_csv.exists());
        assert!(files.trends_csv.is_some());
        assert_eq!(files.plots.len(), 5);
        let cells = summarize(&rows);
        assert_eq!(cells.len(), 6);
        assert!(cells
            .windows(2)
            .all(|w| (w[0].ks_level, w[0].volume) < (w[1].ks_level, w[1].volume)));
    }
}
