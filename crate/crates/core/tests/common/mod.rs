#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ksshift::shift::TrafficDistribution;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random pmf; roughly a quarter of draws zero out some phases.
pub fn random_pmf(rng: &mut ChaCha8Rng) -> TrafficDistribution {
    let sparse = rng.gen_bool(0.25);
    let mut w = [0.0f64; 8];
    for x in w.iter_mut() {
        *x = if sparse && rng.gen_bool(0.4) {
            0.0
        } else {
            -rng.gen::<f64>().max(1e-300).ln()
        };
    }
    if w.iter().all(|&x| x == 0.0) {
        w[rng.gen_range(0..8)] = 1.0;
    }
    let s: f64 = w.iter().sum();
    let mut p = w.map(|x| x / s);
    // push the rounding residue onto the largest entry so the sum is 1 to the ulp
    let resid = 1.0 - p.iter().sum::<f64>();
    let big = (0..8).fold(0, |b, i| if p[i] > p[b] { i } else { b });
    p[big] += resid;
    TrafficDistribution::new(p).expect("valid pmf")
}

/// Sup over phase indicator functions of the gap in expectations.
pub fn oracle_phase_distance(a: &TrafficDistribution, b: &TrafficDistribution) -> f64 {
    let mut best = 0.0f64;
    for i in 0..8 {
        let f = |p: &TrafficDistribution| {
            (0..8)
                .map(|j| if j == i { p.probabilities()[j] } else { 0.0 })
                .sum::<f64>()
        };
        best = best.max((f(a) - f(b)).abs());
    }
    best
}

/// Sup over prefix sets {1..k} of the probability gap, each prefix summed afresh.
pub fn oracle_cdf_distance(a: &TrafficDistribution, b: &TrafficDistribution) -> f64 {
    (1..=8)
        .map(|k| {
            let sa: f64 = a.probabilities()[..k].iter().sum();
            let sb: f64 = b.probabilities()[..k].iter().sum();
            (sa - sb).abs()
        })
        .fold(0.0, f64::max)
}

/// Twice the total variation distance, found by enumerating all 256 phase subsets.
pub fn oracle_cumulative_difference(a: &TrafficDistribution, b: &TrafficDistribution) -> f64 {
    let mut best = 0.0f64;
    for mask in 0u32..256 {
        let gap: f64 = (0..8)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| a.probabilities()[i] - b.probabilities()[i])
            .sum();
        best = best.max(gap);
    }
    2.0 * best
}
