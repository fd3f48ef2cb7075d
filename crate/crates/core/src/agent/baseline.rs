use rand::Rng;
use serde::{Deserialize, Serialize};

use super::AgentError;
use crate::seeding::{rng_from_seed, SimRng};
use crate::shift::NUM_PHASES;
use crate::sim::{Action, ActionMask, Controller, Intersection, Observation};

/// One stage of a fixed-time cycle: a phase pair and its green time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stage {
    pub action: Action,
    pub green_s: u32,
}

/// Cyclic signal plan that ignores observations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixedTimePolicy {
    stages: Vec<Stage>,
    current: usize,
}

impl FixedTimePolicy {
    /// Rejects plans with a zero split or a phase that is never green.
    pub fn new(stages: Vec<Stage>) -> Result<Self, AgentError> {
        if stages.is_empty() {
            return Err(AgentError::Config("fixed-time plan has no stages".into()));
        }
        if let Some(s) = stages.iter().find(|s| s.green_s == 0) {
            return Err(AgentError::Config(format!("stage {} has a zero split", s.action)));
        }
        let mut covered = [false; NUM_PHASES];
        for s in &stages {
            for p in s.action.phases() {
                covered[p.index()] = true;
            }
        }
        if let Some(missing) = covered.iter().position(|c| !c) {
            return Err(AgentError::Config(format!("phase {} never gets green", missing + 1)));
        }
        Ok(Self { stages, current: 0 })
    }

    /// Equal splits over (1,5), (2,6), (3,7), (4,8).
    pub fn equal_splits(green_s: u32) -> Result<Self, AgentError> {
        let stages = [(1, 5), (2, 6), (3, 7), (4, 8)]
            .into_iter()
            .map(|(a, b)| Stage {
                action: Action::from_pair(a, b).expect("compatible pair"),
                green_s,
            })
            .collect();
        Self::new(stages)
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    /// Cycle length given the switching time between stages.
    pub fn period_s(&self, switch_s: u32) -> u32 {
        let switches = self
            .stages
            .iter()
            .zip(self.stages.iter().cycle().skip(1))
            .filter(|(a, b)| a.action != b.action)
            .count() as u32;
        self.stages.iter().map(|s| s.green_s).sum::<u32>() + switches * switch_s
    }
}

impl Default for FixedTimePolicy {
    fn default() -> Self {
        Self::equal_splits(15).expect("default plan is valid")
    }
}

impl Controller for FixedTimePolicy {
    fn choose(&mut self, sim: &Intersection, _observation: &Observation, valid: &ActionMask) -> Action {
        let signal = sim.signal();
        let active = signal.active;
        if signal.in_transition() {
            return active;
        }
        if self.stages[self.current].action != active {
            // picks up the cycle at the pair already showing, e.g. after start-up
            match self.stages.iter().position(|s| s.action == active) {
                Some(i) => self.current = i,
                None => {
                    let want = self.stages[self.current].action;
                    return if valid.contains(want) { want } else { active };
                }
            }
        }
        if signal.active_green_s() >= self.stages[self.current].green_s {
            let next = (self.current + 1) % self.stages.len();
            let want = self.stages[next].action;
            if valid.contains(want) {
                self.current = next;
                return want;
            }
        }
        active
    }

    fn reset(&mut self) {
        self.current = 0;
    }
}

/// Uniformly random valid action every second.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    seed: u64,
    rng: SimRng,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: rng_from_seed(seed),
        }
    }
}

impl Controller for RandomPolicy {
    fn choose(&mut self, sim: &Intersection, _observation: &Observation, valid: &ActionMask) -> Action {
        let n = valid.count();
        if n == 0 {
            return sim.signal().active;
        }
        valid.iter().nth(self.rng.gen_range(0..n)).expect("index below count")
    }

    fn reset(&mut self) {
        self.rng = rng_from_seed(self.seed);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::aggregate;
    use crate::scenario::{generate_scenario, Scenario};
    use crate::shift::PhaseCounts;
    use crate::sim::{run_episode, SignalColor, SimConfig};

    fn act(a: u8, b: u8) -> Action {
        Action::from_pair(a, b).unwrap()
    }

    #[test]
    fn plan_validation() {
        let s = |a, b, g| Stage {
            action: act(a, b),
            green_s: g,
        };
        assert!(FixedTimePolicy::new(vec![]).is_err());
        assert!(FixedTimePolicy::new(vec![s(1, 5, 10), s(2, 6, 10), s(3, 7, 10)]).is_err());
        assert!(FixedTimePolicy::new(vec![s(1, 5, 10), s(2, 6, 0), s(3, 7, 10), s(4, 8, 10)]).is_err());
        assert!(FixedTimePolicy::new(vec![s(1, 6, 10), s(2, 5, 10), s(3, 8, 10), s(4, 7, 10)]).is_ok());
    }

    #[test]
    fn equal_fifteen_second_plan_has_76_second_period() {
        let plan = FixedTimePolicy::default();
        let cfg = SimConfig::default();
        assert_eq!(plan.period_s(cfg.yellow_s + cfg.all_red_s), 60 + 4 * 4);

        // observe onsets of green for phase 1 on an empty intersection
        let empty = Scenario {
            label: "empty".into(),
            duration_s: 600.0,
            seed: 0,
            vehicles: vec![],
        };
        let mut sim = Intersection::new(cfg);
        let mut obs = sim.reset(&empty, 0);
        let mut policy = plan.clone();
        let mut onsets = Vec::new();
        let mut was_green = false;
        while !sim.is_done() {
            let valid = sim.valid_actions();
            let a = policy.choose(&sim, &obs, &valid);
            assert!(valid.contains(a));
            obs = sim.step(a).unwrap().observation;
            let green = obs.colors[0] == SignalColor::Green;
            if green && !was_green {
                onsets.push(sim.time_s());
            }
            was_green = green;
        }
        assert!(onsets.len() >= 5);
        for w in onsets.windows(2) {
            assert_eq!(w[1] - w[0], 76);
        }
    }

    #[test]
    fn fixed_time_rerun_is_identical() {
        let s = generate_scenario(&PhaseCounts([40; 8]), 600.0, 3, "s").unwrap();
        let cfg = SimConfig::default();
        let a = run_episode(&cfg, &s, &mut FixedTimePolicy::default(), 1).unwrap();
        let b = run_episode(&cfg, &s, &mut FixedTimePolicy::default(), 1).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(aggregate(&a.0).unwrap(), aggregate(&b.0).unwrap());
    }

    #[test]
    fn random_policy_is_seeded() {
        let s = generate_scenario(&PhaseCounts([40; 8]), 600.0, 3, "s").unwrap();
        let cfg = SimConfig::default();
        let a = run_episode(&cfg, &s, &mut RandomPolicy::new(4), 0).unwrap();
        let b = run_episode(&cfg, &s, &mut RandomPolicy::new(4), 0).unwrap();
        assert_eq!(a.0, b.0);
    }
}
