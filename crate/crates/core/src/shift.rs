//! Traffic distributions over the eight NEMA phases and the distances used to
//! compare them.
//!
//! A traffic distribution is the categorical pmf of hourly vehicle counts over
//! phases 1..8. The phase KS distance is the largest pointwise gap between two
//! pmfs; the CDF variant takes the largest gap between their cumulative sums in
//! NEMA order. Both live in `[0, 1]`. The cumulative difference is the L1 gap
//! and lives in `[0, 2]`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of NEMA phases at a standard four-leg intersection.
pub const NUM_PHASES: usize = 8;

/// Absolute tolerance for pmf validity checks.
pub const PMF_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShiftError {
    #[error("phase counts sum to zero")]
    ZeroTotal,
    #[error("significance level {0} is outside (0, 1)")]
    InvalidAlpha(f64),
    #[error("sample size must be at least 1")]
    InvalidSampleSize,
    #[error("phase index {0} is outside 1..=8")]
    InvalidPhase(i64),
    #[error("invalid traffic distribution: {0}")]
    InvalidDistribution(String),
}

/// A NEMA phase number in `1..=8`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct PhaseId(u8);

impl PhaseId {
    pub fn new(number: u8) -> Result<Self, ShiftError> {
        if (1..=NUM_PHASES as u8).contains(&number) {
            Ok(Self(number))
        } else {
            Err(ShiftError::InvalidPhase(number as i64))
        }
    }

    /// Phase from a zero-based slot index. Panics if `index >= 8`.
    pub fn from_index(index: usize) -> Self {
        assert!(index < NUM_PHASES, "phase slot {index} out of range");
        Self(index as u8 + 1)
    }

    pub fn number(self) -> u8 {
        self.0
    }

    /// Zero-based slot used for array indexing.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn all() -> impl Iterator<Item = PhaseId> {
        (0..NUM_PHASES).map(PhaseId::from_index)
    }
}

impl TryFrom<u8> for PhaseId {
    type Error = ShiftError;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        PhaseId::new(value)
    }
}

impl From<PhaseId> for u8 {
    fn from(p: PhaseId) -> u8 {
        p.0
    }
}

impl fmt::Display for PhaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Vehicles per phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PhaseCounts(pub [u64; NUM_PHASES]);

impl PhaseCounts {
    pub fn new(counts: [u64; NUM_PHASES]) -> Self {
        Self(counts)
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn get(&self, phase: PhaseId) -> u64 {
        self.0[phase.index()]
    }

    pub fn add(&mut self, phase: PhaseId, n: u64) {
        self.0[phase.index()] += n;
    }

    pub fn as_array(&self) -> &[u64; NUM_PHASES] {
        &self.0
    }
}

/// Categorical pmf over the eight phases, in NEMA order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrafficDistribution([f64; NUM_PHASES]);

impl TrafficDistribution {
    /// Validates entries in `[0, 1]` that sum to 1 within [`PMF_TOLERANCE`].
    pub fn new(p: [f64; NUM_PHASES]) -> Result<Self, ShiftError> {
        for (i, &v) in p.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(ShiftError::InvalidDistribution(format!(
                    "p({}) = {v} is not a probability",
                    i + 1
                )));
            }
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > PMF_TOLERANCE {
            return Err(ShiftError::InvalidDistribution(format!("probabilities sum to {sum}")));
        }
        Ok(Self(p))
    }

    pub fn uniform() -> Self {
        Self([1.0 / NUM_PHASES as f64; NUM_PHASES])
    }

    pub fn probabilities(&self) -> &[f64; NUM_PHASES] {
        &self.0
    }

    pub fn get(&self, phase: PhaseId) -> f64 {
        self.0[phase.index()]
    }

    /// Running sums in NEMA order; the last entry is 1 up to rounding.
    pub fn cdf(&self) -> [f64; NUM_PHASES] {
        let mut out = [0.0; NUM_PHASES];
        let mut acc = 0.0;
        for (o, p) in out.iter_mut().zip(self.0.iter()) {
            acc += p;
            *o = acc;
        }
        out
    }
}

/// `p(i) = N_i / n`.
pub fn normalize(counts: &PhaseCounts) -> Result<TrafficDistribution, ShiftError> {
    let n = counts.total();
    if n == 0 {
        return Err(ShiftError::ZeroTotal);
    }
    let n = n as f64;
    let mut p = [0.0; NUM_PHASES];
    for (pi, &c) in p.iter_mut().zip(counts.0.iter()) {
        *pi = c as f64 / n;
    }
    TrafficDistribution::new(p)
}

/// Largest absolute pointwise pmf difference. This is the shift measure used
/// by the experiment plumbing.
pub fn phase_ks_distance(a: &TrafficDistribution, b: &TrafficDistribution) -> f64 {
    a.0.iter()
        .zip(b.0.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Largest absolute difference between the two cumulative sums, phases in
/// NEMA order.
pub fn cdf_ks_distance(a: &TrafficDistribution, b: &TrafficDistribution) -> f64 {
    let (ca, cb) = (a.cdf(), b.cdf());
    ca.iter()
        .zip(cb.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
        .min(1.0)
}

/// L1 distance between two pmfs.
pub fn cumulative_difference(train: &TrafficDistribution, test: &TrafficDistribution) -> f64 {
    train.0.iter().zip(test.0.iter()).map(|(x, y)| (x - y).abs()).sum()
}

/// Asymptotic critical value `sqrt(-ln(alpha / 2) / (2 n))`.
pub fn ks_critical_value(alpha: f64, n: u64) -> Result<f64, ShiftError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ShiftError::InvalidAlpha(alpha));
    }
    if n == 0 {
        return Err(ShiftError::InvalidSampleSize);
    }
    Ok((-(alpha / 2.0).ln() / (2.0 * n as f64)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsReport {
    pub distance: f64,
    pub critical_value: f64,
    pub reject_null: bool,
    pub alpha: f64,
    pub n_effective: u64,
}

/// Tests the null hypothesis that both distributions are identical. The
/// comparison is strict: a distance equal to the critical value does not
/// reject.
pub fn ks_test(a: &TrafficDistribution, b: &TrafficDistribution, alpha: f64, n: u64) -> Result<KsReport, ShiftError> {
    let critical_value = ks_critical_value(alpha, n)?;
    let distance = phase_ks_distance(a, b);
    Ok(KsReport {
        distance,
        critical_value,
        reject_null: distance > critical_value,
        alpha,
        n_effective: n,
    })
}
