//! Trend fits, the shift alarm and the KS-to-cumulative-difference table.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::scenario::{perturb_to_ks, PerturbMode};
use crate::shift::{cumulative_difference, phase_ks_distance, TrafficDistribution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendFit {
    pub slope: f64,
    pub intercept: f64,
    /// Pearson correlation; NaN when either coordinate is constant.
    pub pearson: f64,
    /// Spearman rank correlation with average ranks for ties; NaN when
    /// either coordinate is constant.
    pub spearman: f64,
    pub n: usize,
}

/// Ordinary least squares `y = slope * x + intercept` with rank correlation.
pub fn fit_trend(points: &[(f64, f64)]) -> Result<TrendFit, ExperimentError> {
    let n = points.len();
    let first = points.first().map(|p| p.0);
    if n < 2 || points.iter().all(|p| Some(p.0) == first) {
        return Err(ExperimentError::DegenerateFit(format!(
            "need at least two distinct x values, got {n} points"
        )));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let (mx, my) = (mean(&xs), mean(&ys));
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    Ok(TrendFit {
        slope,
        intercept: my - slope * mx,
        pearson: pearson(&xs, &ys),
        spearman: spearman(&xs, &ys),
        n,
    })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return f64::NAN;
    }
    sxy / (sxx * syy).sqrt()
}

/// 1-based ranks; tied values share the average of their positions.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    pearson(&average_ranks(xs), &average_ranks(ys))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlarmStatus {
    Ok,
    Alarm,
}

/// Raises an alarm when the observed distribution has moved strictly more
/// than `threshold` away from the reference.
pub fn shift_alarm(
    p_ref: &TrafficDistribution,
    p_obs: &TrafficDistribution,
    threshold: f64,
) -> Result<AlarmStatus, ExperimentError> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(ExperimentError::Config(format!(
            "alarm threshold {threshold} must lie in (0, 1]"
        )));
    }
    Ok(if phase_ks_distance(p_ref, p_obs) > threshold {
        AlarmStatus::Alarm
    } else {
        AlarmStatus::Ok
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonlinearityRow {
    pub ks_level: f64,
    /// Phase KS distance actually reached by the perturbed pmf.
    pub achieved_ks: f64,
    pub cumulative_difference: f64,
}

/// Cumulative difference of the perturbed pmf at each KS level.
pub fn ks_nonlinearity_report(
    p_train: &TrafficDistribution,
    ks_levels: &[f64],
    mode: PerturbMode,
    seed: u64,
) -> Result<Vec<NonlinearityRow>, ExperimentError> {
    ks_levels
        .iter()
        .map(|&level| {
            let p = perturb_to_ks(p_train, level, mode, seed)?;
            Ok(NonlinearityRow {
                ks_level: level,
                achieved_ks: phase_ks_distance(p_train, &p),
                cumulative_difference: cumulative_difference(p_train, &p),
            })
        })
        .collect()
}

pub fn write_nonlinearity_csv<W: Write>(rows: &[NonlinearityRow], out: W) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["ks_level", "achieved_ks", "cumulative_difference"])?;
    for r in rows {
        w.write_record([
            format!("{:.6}", r.ks_level),
            format!("{:.9}", r.achieved_ks),
            format!("{:.9}", r.cumulative_difference),
        ])?;
    }
    w.flush()?;
    Ok(())
}
