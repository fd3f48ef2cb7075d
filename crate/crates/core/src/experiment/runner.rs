//! Resolved run settings and the three numbered experiments.

use std::fs;
use std::path::{Path, PathBuf};

use super::{
    default_grid_levels, default_grid_volumes, evaluate_with, train_agent, write_outputs, AgentSource, ExperimentError,
    ExperimentKind, ExperimentSpec, FileConfig, OutputFiles, PolicyKind, PreparedPolicy, DEFAULT_SHIFT_LEVELS,
    DEFAULT_SWEEP_VOLUMES,
};
use crate::agent::{Checkpoint, TrainConfig};
use crate::scenario::{ingest_turn_counts, HourlyCounts, PerturbMode, DEFAULT_DURATION_S};
use crate::shift::PhaseCounts;
use crate::sim::SimConfig;

/// Synthetic turn counts bundled with the crate: four hours on one day whose
/// pairwise distances resemble a morning-to-evening drift.
pub const SAMPLE_TURN_COUNTS: &str = include_str!("../../data/sample_turn_counts.csv");

/// Uniform training scenario of 3600 vehicles.
pub const DEFAULT_TRAIN_COUNTS: [u64; 8] = [450; 8];

/// Evaluation seeds used when none are configured.
pub const DEFAULT_SEED_COUNT: u64 = 3;

/// Everything a command needs after merging the config file and flags.
#[derive(Debug, Clone)]
pub struct Settings {
    pub seed: u64,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    pub ks_levels: Option<Vec<f64>>,
    pub volumes: Option<Vec<u64>>,
    pub mode: PerturbMode,
    pub workers: usize,
    pub duration_s: f64,
    pub train_counts: PhaseCounts,
    pub turn_counts: Option<PathBuf>,
    pub train_hour: Option<String>,
    pub checkpoint: Option<PathBuf>,
    pub policy: PolicyKind,
    pub event_log_dir: Option<PathBuf>,
    pub alarm_threshold: f64,
    pub agent: TrainConfig,
    pub sim: SimConfig,
}

impl Default for Settings {
    fn default() -> Self {
        Self::from_file(FileConfig::default()).expect("defaults are valid")
    }
}

impl Settings {
    pub fn from_file(f: FileConfig) -> Result<Self, ExperimentError> {
        let seed = f.seed.unwrap_or(0);
        let mut agent = f.agent.unwrap_or_default();
        if f.seed.is_some() {
            agent.seed = seed;
        }
        Ok(Self {
            seed,
            seeds: f.seeds.unwrap_or_else(|| (seed..seed + DEFAULT_SEED_COUNT).collect()),
            out_dir: f.out_dir.unwrap_or_else(|| PathBuf::from("out")),
            ks_levels: f.ks_levels,
            volumes: f.volumes,
            mode: f.mode.unwrap_or_default(),
            workers: f.workers.unwrap_or(0),
            duration_s: f.duration_s.unwrap_or(DEFAULT_DURATION_S),
            train_counts: PhaseCounts(f.train_counts.unwrap_or(DEFAULT_TRAIN_COUNTS)),
            turn_counts: f.turn_counts,
            train_hour: f.train_hour,
            checkpoint: f.checkpoint,
            policy: match f.policy {
                Some(p) => p.parse()?,
                None => PolicyKind::Dqn,
            },
            event_log_dir: f.event_log_dir,
            alarm_threshold: f.alarm_threshold.unwrap_or(0.04),
            agent,
            sim: SimConfig::default(),
        })
    }

    /// Sets the base seed, the agent seed and the default evaluation seeds.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.agent.seed = seed;
        self.seeds = (seed..seed + DEFAULT_SEED_COUNT).collect();
    }

    /// Hourly buckets of the configured turn-count file, or the bundled sample.
    pub fn hourly_counts(&self) -> Result<Vec<HourlyCounts>, ExperimentError> {
        Ok(match &self.turn_counts {
            Some(path) => HourlyCounts::from_path(path)?,
            None => ingest_turn_counts(SAMPLE_TURN_COUNTS.as_bytes())?,
        })
    }

    fn spec(&self, kind: ExperimentKind, train_counts: PhaseCounts) -> ExperimentSpec {
        let mut spec = ExperimentSpec::new(kind, train_counts);
        spec.seeds = self.seeds.clone();
        spec.mode = self.mode;
        spec.duration_s = self.duration_s;
        spec.policy = self.policy;
        spec.sim = self.sim.clone();
        spec.workers = self.workers;
        spec.event_log_dir = self.event_log_dir.clone();
        spec.agent = match &self.checkpoint {
            Some(p) => AgentSource::Checkpoint(p.clone()),
            None => AgentSource::Train(self.agent.clone()),
        };
        spec
    }

    /// Loads the checkpoint, or trains an agent on `train_counts` and saves
    /// it as `agent.json` in the output directory.
    pub fn prepare_policy(&self, spec: &ExperimentSpec) -> Result<PreparedPolicy, ExperimentError> {
        if let (PolicyKind::Dqn, AgentSource::Train(cfg)) = (spec.policy, &spec.agent) {
            log::info!("training agent for {} steps", cfg.total_steps);
            let outcome = train_agent(&spec.train_counts, spec.duration_s, &spec.sim, cfg)?;
            fs::create_dir_all(&self.out_dir)?;
            Checkpoint::new(&outcome.network, cfg).save(&self.out_dir.join("agent.json"))?;
            return Ok(PreparedPolicy::Dqn(outcome.network));
        }
        PreparedPolicy::prepare(spec)
    }
}

fn run(
    settings: &Settings,
    spec: &ExperimentSpec,
    policy: &PreparedPolicy,
    stem: &str,
) -> Result<OutputFiles, ExperimentError> {
    let rows = evaluate_with(spec, policy)?;
    write_outputs(&settings.out_dir, stem, &rows)
}

/// Experiment 1: train on one hour of turn counts and evaluate every hour.
pub fn experiment_one(settings: &Settings) -> Result<Vec<OutputFiles>, ExperimentError> {
    let hours = settings.hourly_counts()?;
    let train = match &settings.train_hour {
        Some(h) => hours
            .iter()
            .find(|b| &b.label == h)
            .ok_or_else(|| ExperimentError::Config(format!("hour {h} is not in the turn-count file")))?,
        None => hours
            .first()
            .ok_or_else(|| ExperimentError::Config("turn-count file is empty".into()))?,
    };
    let mut spec = settings.spec(ExperimentKind::RealScenarios, train.counts);
    spec.real_buckets = hours.clone();
    spec.validate()?;
    let policy = settings.prepare_policy(&spec)?;
    Ok(vec![run(settings, &spec, &policy, "exp1_real_scenarios")?])
}

/// Experiment 2: a KS sweep at the training volume and a volume sweep at the
/// training distribution, sharing one agent.
pub fn experiment_two(settings: &Settings) -> Result<Vec<OutputFiles>, ExperimentError> {
    let mut shift = settings.spec(ExperimentKind::FixedVolumeSweep, settings.train_counts);
    shift.ks_levels = settings
        .ks_levels
        .clone()
        .unwrap_or_else(|| DEFAULT_SHIFT_LEVELS.to_vec());
    let mut volume = settings.spec(ExperimentKind::FixedDistributionSweep, settings.train_counts);
    volume.volumes = match &settings.volumes {
        Some(v) => v.clone(),
        None => {
            let mut v = DEFAULT_SWEEP_VOLUMES.to_vec();
            v.push(settings.train_counts.total());
            v.sort_unstable();
            v.dedup();
            v
        }
    };
    shift.validate()?;
    volume.validate()?;
    let policy = settings.prepare_policy(&shift)?;
    Ok(vec![
        run(settings, &shift, &policy, "exp2_fixed_volume")?,
        run(settings, &volume, &policy, "exp2_fixed_distribution")?,
    ])
}

/// Experiment 3: every KS level at every volume.
pub fn experiment_three(settings: &Settings) -> Result<Vec<OutputFiles>, ExperimentError> {
    let mut spec = settings.spec(ExperimentKind::Grid, settings.train_counts);
    spec.ks_levels = settings.ks_levels.clone().unwrap_or_else(default_grid_levels);
    spec.volumes = settings.volumes.clone().unwrap_or_else(default_grid_volumes);
    spec.validate()?;
    let policy = settings.prepare_policy(&spec)?;
    Ok(vec![run(settings, &spec, &policy, "exp3_grid")?])
}

/// Every configured KS level at every configured volume; defaults to the
/// training scenario alone.
pub fn evaluate_grid(settings: &Settings) -> Result<OutputFiles, ExperimentError> {
    let mut spec = settings.spec(ExperimentKind::Grid, settings.train_counts);
    spec.ks_levels = settings.ks_levels.clone().unwrap_or_else(|| vec![0.0]);
    spec.volumes = settings
        .volumes
        .clone()
        .unwrap_or_else(|| vec![settings.train_counts.total()]);
    spec.validate()?;
    let policy = settings.prepare_policy(&spec)?;
    run(settings, &spec, &policy, "evaluate")
}

pub fn run_numbered(n: u8, settings: &Settings) -> Result<Vec<OutputFiles>, ExperimentError> {
    match n {
        1 => experiment_one(settings),
        2 => experiment_two(settings),
        3 => experiment_three(settings),
        other => Err(ExperimentError::Config(format!(
            "no experiment {other}; expected 1, 2 or 3"
        ))),
    }
}

/// Settings from an optional config file.
pub fn load_settings(path: Option<&Path>) -> Result<Settings, ExperimentError> {
    match path {
        Some(p) => Settings::from_file(FileConfig::load(p)?),
        None => Settings::from_file(FileConfig::default()),
    }
}
