use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::ScenarioError;
use crate::seeding::rng_from_seed;
use crate::shift::{TrafficDistribution, NUM_PHASES};

/// How a target KS distance is realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerturbMode {
    /// Move exactly `D` of mass from the largest phase to the smallest one.
    Concentrated,
    /// One phase gains `D`; a few more gain small amounts; the rest donate.
    #[default]
    Spread,
}

impl std::str::FromStr for PerturbMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "concentrated" => Ok(Self::Concentrated),
            "spread" => Ok(Self::Spread),
            other => Err(format!("unknown perturbation mode `{other}`")),
        }
    }
}

/// Extra receiving phases in spread mode, besides the one at `+D`.
pub const SPREAD_EXTRA_PHASES: usize = 2;

/// Spread-mode extra receivers gain `min(D, SPREAD_EXTRA_CAP)` each.
pub const SPREAD_EXTRA_CAP: f64 = 0.02;

const FEAS_EPS: f64 = 1e-12;

/// Returns `q` with `phase_ks_distance(p_train, q) == target` (up to float
/// rounding). Spread mode is deterministic given `seed`; concentrated mode
/// ignores it.
pub fn perturb_to_ks(
    p_train: &TrafficDistribution,
    target: f64,
    mode: PerturbMode,
    seed: u64,
) -> Result<TrafficDistribution, ScenarioError> {
    if !(0.0..=1.0).contains(&target) {
        return Err(ScenarioError::Infeasible {
            target,
            reason: "target must lie in [0, 1]".into(),
        });
    }
    if target == 0.0 {
        return Ok(*p_train);
    }
    let p = p_train.probabilities();
    let deviation = match mode {
        PerturbMode::Concentrated => concentrated(p, target)?,
        PerturbMode::Spread => spread(p, target, seed)?,
    };
    let mut q = [0.0; NUM_PHASES];
    for i in 0..NUM_PHASES {
        q[i] = (p[i] + deviation[i]).clamp(0.0, 1.0);
    }
    Ok(TrafficDistribution::new(q)?)
}

fn concentrated(p: &[f64; NUM_PHASES], d: f64) -> Result<[f64; NUM_PHASES], ScenarioError> {
    // min_by / max_by return the last of equal elements, so fold by hand to
    // keep the lowest phase on ties.
    let recv = (1..NUM_PHASES).fold(0, |best, i| if p[i] < p[best] { i } else { best });
    let donor = (0..NUM_PHASES)
        .filter(|&i| i != recv)
        .fold(None, |best: Option<usize>, i| match best {
            Some(b) if p[i] <= p[b] => Some(b),
            _ => Some(i),
        })
        .expect("eight phases");
    if p[donor] + FEAS_EPS < d {
        return Err(ScenarioError::Infeasible {
            target: d,
            reason: format!("largest phase holds only {:.6}", p[donor]),
        });
    }
    if p[recv] + d > 1.0 + FEAS_EPS {
        return Err(ScenarioError::Infeasible {
            target: d,
            reason: "receiving phase would exceed 1".into(),
        });
    }
    let mut dev = [0.0; NUM_PHASES];
    dev[recv] = d;
    dev[donor] = -d.min(p[donor]);
    Ok(dev)
}

fn spread(p: &[f64; NUM_PHASES], d: f64, seed: u64) -> Result<[f64; NUM_PHASES], ScenarioError> {
    let mut order: Vec<usize> = (0..NUM_PHASES).collect();
    order.shuffle(&mut rng_from_seed(seed));

    let capacity = |set: &[usize]| set.iter().map(|&i| d.min(p[i])).sum::<f64>();

    for (k, &recv) in order.iter().enumerate() {
        if p[recv] + d > 1.0 + FEAS_EPS {
            continue;
        }
        let others: Vec<usize> = order
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != k)
            .map(|(_, &i)| i)
            .collect();
        let (mut extras, mut donors) = others.split_at(SPREAD_EXTRA_PHASES.min(others.len()));
        if capacity(donors) + FEAS_EPS < d {
            extras = &[];
            donors = &others;
            if capacity(donors) + FEAS_EPS < d {
                continue;
            }
        }

        let mut dev = [0.0; NUM_PHASES];
        dev[recv] = d;
        let mut gains: Vec<f64> = extras
            .iter()
            .map(|&i| d.min(SPREAD_EXTRA_CAP).min(1.0 - p[i]).max(0.0))
            .collect();
        let room = (capacity(donors) - d).max(0.0);
        let wanted: f64 = gains.iter().sum();
        if wanted > room {
            let scale = room / wanted;
            gains.iter_mut().for_each(|g| *g *= scale);
        }
        for (&i, &g) in extras.iter().zip(&gains) {
            dev[i] = g;
        }

        let caps: Vec<f64> = donors.iter().map(|&i| d.min(p[i])).collect();
        let takes = water_fill(&caps, d + gains.iter().sum::<f64>());
        for (&i, &t) in donors.iter().zip(&takes) {
            dev[i] = -t;
        }
        return Ok(dev);
    }
    Err(ScenarioError::Infeasible {
        target: d,
        reason: "no phase can receive the target mass with enough donors".into(),
    })
}

/// Splits `total` across slots as evenly as the per-slot caps allow.
fn water_fill(caps: &[f64], total: f64) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..caps.len()).collect();
    idx.sort_by(|&a, &b| caps[a].total_cmp(&caps[b]).then(a.cmp(&b)));
    let mut out = vec![0.0; caps.len()];
    let mut remaining = total;
    for (n, &i) in idx.iter().enumerate() {
        let share = remaining / (idx.len() - n) as f64;
        let take = share.min(caps[i]);
        out[i] = take;
        remaining -= take;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shift::{cumulative_difference, phase_ks_distance};

    #[test]
    fn zero_target_is_identity() {
        let p = TrafficDistribution::new([0.1, 0.2, 0.05, 0.15, 0.1, 0.2, 0.05, 0.15]).unwrap();
        for mode in [PerturbMode::Concentrated, PerturbMode::Spread] {
            assert_eq!(perturb_to_ks(&p, 0.0, mode, 3).unwrap(), p);
        }
    }

    #[test]
    fn concentrated_on_uniform() {
        let q = perturb_to_ks(&TrafficDistribution::uniform(), 0.1, PerturbMode::Concentrated, 0).unwrap();
        let q = q.probabilities();
        assert!((q[0] - 0.225).abs() < 1e-15);
        assert!((q[1] - 0.025).abs() < 1e-15);
        assert!(q[2..].iter().all(|&x| x == 0.125));
    }

    #[test]
    fn concentrated_cumulative_is_twice_target() {
        let p = TrafficDistribution::new([0.1, 0.3, 0.05, 0.15, 0.1, 0.2, 0.05, 0.05]).unwrap();
        for d in [0.01, 0.05, 0.2, 0.3] {
            let q = perturb_to_ks(&p, d, PerturbMode::Concentrated, 0).unwrap();
            assert!((phase_ks_distance(&p, &q) - d).abs() <= 1e-12);
            assert!((cumulative_difference(&p, &q) - 2.0 * d).abs() <= 1e-12);
        }
        assert!(perturb_to_ks(&p, 0.31, PerturbMode::Concentrated, 0).is_err());
    }

    #[test]
    fn spread_on_uniform_small_target() {
        let p = TrafficDistribution::uniform();
        let q = perturb_to_ks(&p, 0.02, PerturbMode::Spread, 11).unwrap();
        assert!((phase_ks_distance(&p, &q) - 0.02).abs() <= 1e-12);
        // +D, two extras at +D, five donors sharing 3D
        assert!((cumulative_difference(&p, &q) - 0.12).abs() <= 1e-12);
        let deviating = q.probabilities().iter().filter(|&&x| (x - 0.125).abs() > 1e-12).count();
        assert_eq!(deviating, 8);
    }

    #[test]
    fn spread_is_seeded() {
        let p = TrafficDistribution::uniform();
        let a = perturb_to_ks(&p, 0.1, PerturbMode::Spread, 1).unwrap();
        let b = perturb_to_ks(&p, 0.1, PerturbMode::Spread, 1).unwrap();
        assert_eq!(a, b);
        let differs = (2..40).any(|s| perturb_to_ks(&p, 0.1, PerturbMode::Spread, s).unwrap() != a);
        assert!(differs);
    }

    #[test]
    fn spread_large_target_on_uniform() {
        let p = TrafficDistribution::uniform();
        let q = perturb_to_ks(&p, 0.6, PerturbMode::Spread, 4).unwrap();
        assert!((phase_ks_distance(&p, &q) - 0.6).abs() <= 1e-12);
    }

    #[test]
    fn infeasible_targets() {
        let single = TrafficDistribution::new([1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        // all mass sits on one phase; at most that phase can donate
        assert!(perturb_to_ks(&single, 1.0, PerturbMode::Spread, 0).is_ok());
        let p = TrafficDistribution::uniform();
        assert!(perturb_to_ks(&p, 0.9, PerturbMode::Spread, 0).is_err());
        assert!(perturb_to_ks(&p, 1.5, PerturbMode::Spread, 0).is_err());
        assert!(perturb_to_ks(&p, 0.2, PerturbMode::Concentrated, 0).is_err());
    }

    #[test]
    fn water_fill_respects_caps() {
        let takes = water_fill(&[0.01, 0.5, 0.5], 0.31);
        assert!((takes[0] - 0.01).abs() < 1e-15);
        assert!((takes[1] - 0.15).abs() < 1e-15);
        assert!((takes[2] - 0.15).abs() < 1e-15);
    }
}
