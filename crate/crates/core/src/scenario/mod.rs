//! Vehicle-level scenarios built from phase volumes.
//!
//! Departure times are drawn i.i.d. uniform over the scenario horizon. All
//! generators are pure functions of their inputs and seed.

mod perturb;
mod turn_counts;

use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seeding::{derive_seed, rng_from_seed};
use crate::shift::{self, PhaseCounts, PhaseId, ShiftError, TrafficDistribution, NUM_PHASES};

pub use perturb::{perturb_to_ks, PerturbMode, SPREAD_EXTRA_CAP, SPREAD_EXTRA_PHASES};
pub use turn_counts::{ingest_turn_counts, read_turn_counts, HourlyCounts, TurnCountRecord};

/// Default scenario horizon in seconds.
pub const DEFAULT_DURATION_S: f64 = 3600.0;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("turn-count parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("target KS distance {target} is infeasible: {reason}")]
    Infeasible { target: f64, reason: String },
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Shift(#[from] ShiftError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vehicle {
    pub id: u64,
    pub phase: PhaseId,
    #[serde(rename = "depart_s")]
    pub scheduled_depart_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub label: String,
    pub duration_s: f64,
    pub seed: u64,
    pub vehicles: Vec<Vehicle>,
}

impl Scenario {
    pub fn phase_counts(&self) -> PhaseCounts {
        let mut counts = PhaseCounts::default();
        for v in &self.vehicles {
            counts.add(v.phase, 1);
        }
        counts
    }

    pub fn distribution(&self) -> Result<TrafficDistribution, ShiftError> {
        shift::normalize(&self.phase_counts())
    }

    pub fn total_vehicles(&self) -> usize {
        self.vehicles.len()
    }

    /// Checks horizon bounds and departure ordering.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(ScenarioError::Invalid(format!(
                "duration {} must be positive",
                self.duration_s
            )));
        }
        let mut prev = 0.0;
        for v in &self.vehicles {
            let t = v.scheduled_depart_s;
            if !(0.0..self.duration_s).contains(&t) {
                return Err(ScenarioError::Invalid(format!(
                    "vehicle {} departs at {t}, outside [0, {})",
                    v.id, self.duration_s
                )));
            }
            if t < prev {
                return Err(ScenarioError::Invalid(format!(
                    "vehicle {} is out of departure order",
                    v.id
                )));
            }
            prev = t;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String, ScenarioError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn save(&self, path: &Path) -> Result<(), ScenarioError> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

fn sorted_vehicles(mut vehicles: Vec<Vehicle>) -> Vec<Vehicle> {
    vehicles.sort_by(|a, b| {
        a.scheduled_depart_s
            .total_cmp(&b.scheduled_depart_s)
            .then(a.id.cmp(&b.id))
    });
    vehicles
}

/// Places `counts(i)` vehicles on each phase with uniform departure times on
/// `[0, duration_s)`. Vehicle ids follow departure order.
pub fn generate_scenario(
    counts: &PhaseCounts,
    duration_s: f64,
    seed: u64,
    label: impl Into<String>,
) -> Result<Scenario, ScenarioError> {
    if !(duration_s > 0.0 && duration_s.is_finite()) {
        return Err(ScenarioError::Invalid(format!(
            "duration {duration_s} must be positive"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mut vehicles = Vec::with_capacity(counts.total() as usize);
    for phase in PhaseId::all() {
        for _ in 0..counts.get(phase) {
            vehicles.push(Vehicle {
                id: 0,
                phase,
                scheduled_depart_s: rng.gen_range(0.0..duration_s),
            });
        }
    }
    let mut vehicles = sorted_vehicles(vehicles);
    for (i, v) in vehicles.iter_mut().enumerate() {
        v.id = i as u64;
    }
    Ok(Scenario {
        label: label.into(),
        duration_s,
        seed,
        vehicles,
    })
}

/// Redraws every departure time, keeping each vehicle's id and phase.
pub fn shuffle_departures(scenario: &Scenario, seed: u64) -> Scenario {
    let mut rng = rng_from_seed(seed);
    let vehicles = scenario
        .vehicles
        .iter()
        .map(|v| Vehicle {
            scheduled_depart_s: rng.gen_range(0.0..scenario.duration_s),
            ..v.clone()
        })
        .collect();
    Scenario {
        label: scenario.label.clone(),
        duration_s: scenario.duration_s,
        seed,
        vehicles: sorted_vehicles(vehicles),
    }
}

/// Integer counts summing to exactly `total`, apportioned by the
/// largest-remainder method. Remainder ties go to the lower phase number.
pub fn scale_volume(p: &TrafficDistribution, total: u64) -> PhaseCounts {
    let mut counts = [0u64; NUM_PHASES];
    let mut remainders = [(0.0f64, 0usize); NUM_PHASES];
    let mut assigned = 0u64;
    for (i, &pi) in p.probabilities().iter().enumerate() {
        let quota = pi * total as f64;
        let floor = quota.floor();
        counts[i] = floor as u64;
        assigned += counts[i];
        remainders[i] = (quota - floor, i);
    }
    // Float error can push the floors' sum past the total by at most one unit.
    while assigned > total {
        let i = (0..NUM_PHASES)
            .filter(|&i| counts[i] > 0)
            .min_by(|&a, &b| remainders[a].0.total_cmp(&remainders[b].0))
            .expect("some phase is non-zero");
        counts[i] -= 1;
        assigned -= 1;
    }
    remainders.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let missing = (total - assigned) as usize;
    for &(_, i) in remainders.iter().cycle().take(missing) {
        counts[i] += 1;
    }
    PhaseCounts(counts)
}

/// One cell of a KS-level by volume sweep.
#[derive(Debug, Clone)]
pub struct GridScenario {
    pub ks_level: f64,
    pub volume: u64,
    /// Target pmf before integer rounding.
    pub target: TrafficDistribution,
    pub scenario: Scenario,
}

/// Scenario label used for a grid cell.
pub fn grid_label(ks_level: f64, volume: u64) -> String {
    format!("ks{ks_level:.3}_vol{volume}")
}

/// Builds `|ks_levels| * |volumes|` scenarios, levels outermost. Each level's
/// pmf is perturbed from `p_train` with the same `seed`, so the levels form a
/// nested family; departure times use a seed derived from `seed` and the cell.
pub fn build_experiment_grid(
    p_train: &TrafficDistribution,
    ks_levels: &[f64],
    volumes: &[u64],
    mode: PerturbMode,
    duration_s: f64,
    seed: u64,
) -> Result<Vec<GridScenario>, ScenarioError> {
    if ks_levels.is_empty() || volumes.is_empty() {
        return Err(ScenarioError::Invalid(
            "grid needs at least one KS level and one volume".into(),
        ));
    }
    let mut out = Vec::with_capacity(ks_levels.len() * volumes.len());
    for &level in ks_levels {
        let target = perturb_to_ks(p_train, level, mode, seed)?;
        for &volume in volumes {
            let counts = scale_volume(&target, volume);
            let cell_seed = derive_seed(seed, &[level.to_bits(), volume]);
            let scenario = generate_scenario(&counts, duration_s, cell_seed, grid_label(level, volume))?;
            out.push(GridScenario {
                ks_level: level,
                volume,
                target,
                scenario,
            });
        }
    }
    Ok(out)
}
