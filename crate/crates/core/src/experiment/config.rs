//! Key-value config file. Every key is optional; command-line flags override
//! whatever the file sets. Agent hyperparameters live in an `[agent]` table.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::ExperimentError;
use crate::agent::TrainConfig;
use crate::scenario::PerturbMode;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    /// Evaluation seeds; defaults to `[seed]`.
    pub seeds: Option<Vec<u64>>,
    pub out_dir: Option<PathBuf>,
    pub ks_levels: Option<Vec<f64>>,
    pub volumes: Option<Vec<u64>>,
    pub mode: Option<PerturbMode>,
    pub workers: Option<usize>,
    pub duration_s: Option<f64>,
    /// Training scenario volumes for phases 1..8.
    pub train_counts: Option<[u64; 8]>,
    /// Turn-count CSV used by experiment 1.
    pub turn_counts: Option<PathBuf>,
    /// Hour of `turn_counts` the agent is trained on, e.g. `2023-03-07T07:00`.
    pub train_hour: Option<String>,
    pub checkpoint: Option<PathBuf>,
    /// `dqn`, `fixed_time` or `random`.
    pub policy: Option<String>,
    pub event_log_dir: Option<PathBuf>,
    pub alarm_threshold: Option<f64>,
    pub agent: Option<TrainConfig>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ExperimentError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

fn split_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, ExperimentError> {
    let items: Vec<&str> = text.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(ExperimentError::Config(format!("{what} list is empty")));
    }
    items
        .iter()
        .map(|s| {
            s.parse()
                .map_err(|_| ExperimentError::Config(format!("bad {what} value `{s}`")))
        })
        .collect()
}

/// Comma-separated KS levels, e.g. `0,0.02,0.04`.
pub fn parse_ks_levels(text: &str) -> Result<Vec<f64>, ExperimentError> {
    let v: Vec<f64> = split_list(text, "KS level")?;
    if let Some(bad) = v.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        return Err(ExperimentError::Config(format!("KS level {bad} is outside [0, 1]")));
    }
    Ok(v)
}

/// Comma-separated volumes; `a:b:step` expands to an inclusive range.
pub fn parse_volumes(text: &str) -> Result<Vec<u64>, ExperimentError> {
    if let [a, b, step] = text.split(':').map(str::trim).collect::<Vec<_>>()[..] {
        let p = |s: &str| {
            s.parse::<u64>()
                .map_err(|_| ExperimentError::Config(format!("bad volume range `{text}`")))
        };
        let (a, b, step) = (p(a)?, p(b)?, p(step)?);
        if step == 0 || b < a {
            return Err(ExperimentError::Config(format!("bad volume range `{text}`")));
        }
        return Ok((a..=b).step_by(step as usize).collect());
    }
    split_list(text, "volume")
}
