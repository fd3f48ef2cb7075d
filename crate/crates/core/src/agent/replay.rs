use rand::seq::index;
use rand::Rng;

use crate::sim::{Action, ActionMask};

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Action,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub done: bool,
    /// Actions valid in `next_state`; the bootstrap max runs over these only.
    pub next_valid: ActionMask,
}

/// Fixed-capacity ring of transitions; the oldest entry is overwritten first.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    entries: Vec<Transition>,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            entries: Vec::with_capacity(capacity.min(1 << 16)),
            next: 0,
        }
    }

    pub fn push(&mut self, t: Transition) {
        if self.entries.len() < self.capacity {
            self.entries.push(t);
        } else {
            self.entries[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Uniform sample without replacement; returns fewer than `batch` entries
    /// only when the buffer holds fewer.
    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Vec<&Transition> {
        let n = batch.min(self.entries.len());
        index::sample(rng, self.entries.len(), n)
            .into_iter()
            .map(|i| &self.entries[i])
            .collect()
    }

    /// Sampled slot indices; exposed for uniformity tests.
    pub fn sample_indices<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Vec<usize> {
        let n = batch.min(self.entries.len());
        index::sample(rng, self.entries.len(), n).into_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng_from_seed;

    fn t(r: f64) -> Transition {
        Transition {
            state: vec![r],
            action: Action::new(0).unwrap(),
            reward: r,
            next_state: vec![r],
            done: false,
            next_valid: ActionMask::all(),
        }
    }

    #[test]
    fn ring_overwrites_oldest() {
        let mut b = ReplayBuffer::new(3);
        for i in 0..5 {
            b.push(t(i as f64));
        }
        assert_eq!(b.len(), 3);
        let mut rewards: Vec<f64> = b.sample(3, &mut rng_from_seed(0)).iter().map(|x| x.reward).collect();
        rewards.sort_by(f64::total_cmp);
        assert_eq!(rewards, vec![2.0, 3.0, 4.0]);
    }

    #[test]
    fn batch_has_no_repeats() {
        let mut b = ReplayBuffer::new(100);
        for i in 0..100 {
            b.push(t(i as f64));
        }
        let mut rng = rng_from_seed(1);
        for _ in 0..50 {
            let mut idx = b.sample_indices(64, &mut rng);
            idx.sort_unstable();
            idx.dedup();
            assert_eq!(idx.len(), 64);
        }
        assert_eq!(b.sample(500, &mut rng).len(), 100);
    }

    #[test]
    fn long_run_sampling_is_uniform() {
        let n = 200;
        let mut b = ReplayBuffer::new(n);
        for i in 0..n {
            b.push(t(i as f64));
        }
        let mut rng = rng_from_seed(2);
        let mut hits = vec![0u32; n];
        let draws = 4000;
        let batch = 32;
        for _ in 0..draws {
            for i in b.sample_indices(batch, &mut rng) {
                hits[i] += 1;
            }
        }
        let p = batch as f64 / n as f64;
        let mean = draws as f64 * p;
        let sd = (draws as f64 * p * (1.0 - p)).sqrt();
        // 3 sigma per slot; allow the handful of exceedances 200 slots produce by chance
        let outside = hits.iter().filter(|&&h| (h as f64 - mean).abs() > 3.0 * sd).count();
        assert!(outside <= 3, "{outside} slots outside 3 sigma");
        let total: u32 = hits.iter().sum();
        assert_eq!(total as usize, draws * batch);
    }
}
