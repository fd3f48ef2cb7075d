//! One-second-step simulator of a single signalized four-leg intersection.
//!
//! Each NEMA phase is one lane. A vehicle becomes due at its scheduled
//! departure, waits in a departure backlog until its approach admits it,
//! drives the approach at free speed and then queues at the stop line. A green
//! phase discharges one queued vehicle per second once its start-up lost time
//! has passed. The reward for a step is the number of vehicles that crossed.
//!
//! The agent is asked for an action every step. Switching pairs starts a
//! yellow / all-red program owned by the simulator; during it, and before the
//! new pair has held green for the minimum time, only one action is valid.

mod signal;

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{EventLog, SimEvent};
use crate::scenario::Scenario;
use crate::shift::{PhaseId, NUM_PHASES};

pub use signal::{
    compatible, green_for, switch_transition, Action, ActionMask, Colors, SignalColor, TransitionProgram, NUM_ACTIONS,
    PHASE_PAIRS,
};

/// Width of [`Observation::encode`]: per phase a scaled count, a four-way
/// color one-hot and a scaled elapsed time, then a one-hot of the served or
/// pending pair.
pub const OBS_WIDTH: usize = NUM_PHASES * 6 + NUM_ACTIONS;

/// Elapsed-in-color values are clipped here before scaling to `[0, 1]`.
pub const ELAPSED_CLIP_S: f64 = 120.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("action {action} is not valid in the current signal state")]
    InvalidAction { action: Action },
    #[error("step called on a finished episode")]
    Finished,
    #[error("step called before reset")]
    NotReset,
}

/// Geometry and timing constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Vehicles discharged per second by each green phase.
    pub saturation_per_s: u32,
    pub startup_lost_s: u32,
    pub yellow_s: u32,
    pub all_red_s: u32,
    pub min_green_s: u32,
    pub initial_action: Action,
    /// Stopped vehicles visible to the detector (30 m at 6 m per vehicle).
    pub detection_capacity: u32,
    /// Vehicles an approach holds before refusing entry.
    pub approach_capacity: usize,
    /// Vehicles admitted per approach per second.
    pub entry_per_s: u32,
    pub approach_length_m: f64,
    pub free_speed_mps: f64,
    /// Extra seconds after the horizon before unserved vehicles time out.
    pub timeout_extra_s: u32,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            saturation_per_s: 1,
            startup_lost_s: 2,
            yellow_s: 3,
            all_red_s: 1,
            min_green_s: 5,
            initial_action: Action::from_pair(2, 6).unwrap(),
            detection_capacity: 5,
            approach_capacity: 50,
            entry_per_s: 1,
            approach_length_m: 200.0,
            free_speed_mps: 50.0 / 3.6,
            timeout_extra_s: 1800,
        }
    }
}

impl SimConfig {
    pub fn free_flow_s(&self) -> f64 {
        self.approach_length_m / self.free_speed_mps
    }
}

/// Current colors, per-phase time in color, and the pair being served.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalState {
    pub colors: Colors,
    pub elapsed_in_color_s: [u32; NUM_PHASES],
    /// Pair that is green, or the pair being switched to while `transition`
    /// is set.
    pub active: Action,
    pub transition: Option<TransitionProgram>,
    transition_pos: usize,
}

impl SignalState {
    fn starting(cfg: &SimConfig) -> Self {
        let mut s = Self {
            colors: [SignalColor::AllRedClearance; NUM_PHASES],
            elapsed_in_color_s: [0; NUM_PHASES],
            active: cfg.initial_action,
            transition: None,
            transition_pos: 0,
        };
        s.begin(switch_transition(None, cfg.initial_action, cfg.yellow_s, cfg.all_red_s));
        s
    }

    fn show(&mut self, colors: Colors) {
        for i in 0..NUM_PHASES {
            if self.colors[i] != colors[i] {
                self.colors[i] = colors[i];
                self.elapsed_in_color_s[i] = 0;
            }
        }
    }

    fn begin(&mut self, program: TransitionProgram) {
        self.active = program.to;
        self.transition_pos = 0;
        match program.steps.first() {
            Some(&first) => {
                self.show(first);
                self.transition = Some(program);
            }
            None => {
                self.show(program.settled);
                self.transition = None;
            }
        }
    }

    /// Moves the color program on by one second.
    fn tick(&mut self) {
        for e in &mut self.elapsed_in_color_s {
            *e += 1;
        }
        let Some(program) = &self.transition else { return };
        self.transition_pos += 1;
        let next = program.steps.get(self.transition_pos).copied();
        let settled = program.settled;
        match next {
            Some(colors) => self.show(colors),
            None => {
                self.show(settled);
                self.transition = None;
            }
        }
    }

    /// Seconds the active pair has been fully green; zero while switching.
    pub fn active_green_s(&self) -> u32 {
        if self.transition.is_some() {
            return 0;
        }
        self.active
            .phases()
            .iter()
            .map(|p| self.elapsed_in_color_s[p.index()])
            .min()
            .unwrap_or(0)
    }

    pub fn in_transition(&self) -> bool {
        self.transition.is_some()
    }
}

/// Agent-side view of the intersection.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub detected_vehicles: [u32; NUM_PHASES],
    pub colors: Colors,
    pub elapsed_in_color_s: [u32; NUM_PHASES],
    /// Pair being served, or being switched to. Colors alone cannot tell the
    /// switch targets apart while the joining phases are still red.
    pub active: Action,
    pub detection_capacity: u32,
}

impl Observation {
    /// Network input: per phase `[count / capacity, one-hot color (4),
    /// min(elapsed, 120) / 120]`, then the active pair one-hot (8).
    pub fn encode(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(OBS_WIDTH);
        for i in 0..NUM_PHASES {
            out.push(self.detected_vehicles[i] as f64 / self.detection_capacity.max(1) as f64);
            let mut onehot = [0.0; 4];
            onehot[self.colors[i].code()] = 1.0;
            out.extend_from_slice(&onehot);
            out.push((self.elapsed_in_color_s[i] as f64).min(ELAPSED_CLIP_S) / ELAPSED_CLIP_S);
        }
        out.extend((0..NUM_ACTIONS).map(|k| if k == self.active.index() { 1.0 } else { 0.0 }));
        out
    }
}

/// Running counters returned with every step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MetricsSnapshot {
    pub time_s: u32,
    pub due: u64,
    pub entered: u64,
    pub crossed: u64,
    pub on_approach: u64,
    pub backlog: u64,
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub info: MetricsSnapshot,
}

#[derive(Debug, Clone)]
struct VehicleState {
    id: u64,
    phase: PhaseId,
    scheduled: f64,
    depart: Option<f64>,
    at_stop_line: f64,
    arrival: Option<f64>,
    timed_out: bool,
}

/// A single intersection instance. Not shared between threads while running;
/// run one instance per scenario.
#[derive(Debug, Clone)]
pub struct Intersection {
    cfg: SimConfig,
    label: String,
    duration_s: f64,
    vehicles: Vec<VehicleState>,
    next_due: usize,
    backlog: [VecDeque<usize>; NUM_PHASES],
    approach: [VecDeque<usize>; NUM_PHASES],
    signal: SignalState,
    time_s: u32,
    entered: u64,
    crossed: u64,
    done: bool,
    ready: bool,
}

impl Intersection {
    pub fn new(cfg: SimConfig) -> Self {
        let signal = SignalState::starting(&cfg);
        Self {
            cfg,
            label: String::new(),
            duration_s: 0.0,
            vehicles: Vec::new(),
            next_due: 0,
            backlog: Default::default(),
            approach: Default::default(),
            signal,
            time_s: 0,
            entered: 0,
            crossed: 0,
            done: false,
            ready: false,
        }
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    /// Loads a scenario with empty queues and the start-up all-red program.
    /// The dynamics are deterministic; `seed` is accepted for interface
    /// parity with stochastic environments and does not affect the run.
    pub fn reset(&mut self, scenario: &Scenario, _seed: u64) -> Observation {
        self.label = scenario.label.clone();
        self.duration_s = scenario.duration_s;
        self.vehicles = scenario
            .vehicles
            .iter()
            .map(|v| VehicleState {
                id: v.id,
                phase: v.phase,
                scheduled: v.scheduled_depart_s,
                depart: None,
                at_stop_line: f64::INFINITY,
                arrival: None,
                timed_out: false,
            })
            .collect();
        // order by schedule so the due pointer is monotone even for hand-made scenarios
        self.vehicles
            .sort_by(|a, b| a.scheduled.total_cmp(&b.scheduled).then(a.id.cmp(&b.id)));
        self.next_due = 0;
        self.backlog = Default::default();
        self.approach = Default::default();
        self.signal = SignalState::starting(&self.cfg);
        self.time_s = 0;
        self.entered = 0;
        self.crossed = 0;
        self.done = false;
        self.ready = true;
        self.observe()
    }

    pub fn signal(&self) -> &SignalState {
        &self.signal
    }

    pub fn time_s(&self) -> u32 {
        self.time_s
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn valid_actions(&self) -> ActionMask {
        if self.signal.in_transition() || self.signal.active_green_s() < self.cfg.min_green_s {
            ActionMask::only(self.signal.active)
        } else {
            ActionMask::all()
        }
    }

    /// Stop-line queue length per phase.
    pub fn queue_lengths(&self) -> [u32; NUM_PHASES] {
        let now = self.time_s as f64;
        let mut q = [0; NUM_PHASES];
        for (i, lane) in self.approach.iter().enumerate() {
            q[i] = lane
                .iter()
                .take_while(|&&v| self.vehicles[v].at_stop_line <= now)
                .count() as u32;
        }
        q
    }

    pub fn observe(&self) -> Observation {
        let cap = self.cfg.detection_capacity;
        Observation {
            detected_vehicles: self.queue_lengths().map(|q| q.min(cap)),
            colors: self.signal.colors,
            elapsed_in_color_s: self.signal.elapsed_in_color_s,
            active: self.signal.active,
            detection_capacity: cap,
        }
    }

    pub fn snapshot(&self) -> MetricsSnapshot {
        let on_approach = self.approach.iter().map(|l| l.len() as u64).sum();
        let backlog = self.backlog.iter().map(|l| l.len() as u64).sum();
        MetricsSnapshot {
            time_s: self.time_s,
            due: self.next_due as u64,
            entered: self.entered,
            crossed: self.crossed,
            on_approach,
            backlog,
        }
    }

    /// Advances one second under `action`.
    pub fn step(&mut self, action: Action) -> Result<StepOutcome, SimError> {
        if !self.ready {
            return Err(SimError::NotReset);
        }
        if self.done {
            return Err(SimError::Finished);
        }
        if !self.valid_actions().contains(action) {
            return Err(SimError::InvalidAction { action });
        }
        if !self.signal.in_transition() && action != self.signal.active {
            let cfg = &self.cfg;
            self.signal.begin(switch_transition(
                Some(self.signal.active),
                action,
                cfg.yellow_s,
                cfg.all_red_s,
            ));
        }

        let now = self.time_s as f64;
        let next = now + 1.0;
        let ff = self.cfg.free_flow_s();

        while let Some(v) = self.vehicles.get(self.next_due) {
            if v.scheduled >= next {
                break;
            }
            self.backlog[v.phase.index()].push_back(self.next_due);
            self.next_due += 1;
        }

        for i in 0..NUM_PHASES {
            for _ in 0..self.cfg.entry_per_s {
                if self.approach[i].len() >= self.cfg.approach_capacity {
                    break;
                }
                let Some(v) = self.backlog[i].pop_front() else { break };
                let veh = &mut self.vehicles[v];
                let depart = veh.scheduled.max(now);
                veh.depart = Some(depart);
                veh.at_stop_line = depart + ff;
                self.approach[i].push_back(v);
                self.entered += 1;
            }
        }

        let mut crossed_now = 0u32;
        for i in 0..NUM_PHASES {
            if self.signal.colors[i] != SignalColor::Green
                || self.signal.elapsed_in_color_s[i] < self.cfg.startup_lost_s
            {
                continue;
            }
            for _ in 0..self.cfg.saturation_per_s {
                let Some(&v) = self.approach[i].front() else { break };
                let veh = &mut self.vehicles[v];
                if veh.at_stop_line >= next {
                    break;
                }
                veh.arrival = Some(veh.at_stop_line.max(now));
                self.approach[i].pop_front();
                crossed_now += 1;
            }
        }
        self.crossed += crossed_now as u64;

        self.signal.tick();
        self.time_s += 1;

        let horizon_passed = self.time_s as f64 >= self.duration_s;
        if horizon_passed && self.crossed == self.vehicles.len() as u64 {
            self.done = true;
        } else if self.time_s as f64 >= self.duration_s + self.cfg.timeout_extra_s as f64 {
            let t = self.time_s as f64;
            for veh in self.vehicles.iter_mut().filter(|v| v.arrival.is_none()) {
                veh.depart.get_or_insert(t);
                veh.arrival = Some(t);
                veh.timed_out = true;
            }
            self.done = true;
        }

        Ok(StepOutcome {
            observation: self.observe(),
            reward: crossed_now as f64,
            done: self.done,
            info: self.snapshot(),
        })
    }

    /// Per-vehicle timestamps, in scenario id order.
    pub fn event_log(&self) -> EventLog {
        let mut events: Vec<SimEvent> = self
            .vehicles
            .iter()
            .map(|v| SimEvent {
                vehicle_id: v.id,
                phase: v.phase,
                scheduled_depart_s: v.scheduled,
                actual_depart_s: v.depart,
                arrival_s: v.arrival,
                timed_out: v.timed_out,
            })
            .collect();
        events.sort_by_key(|e| e.vehicle_id);
        EventLog {
            label: self.label.clone(),
            duration_s: self.duration_s,
            free_flow_s: self.cfg.free_flow_s(),
            events,
        }
    }

    /// Checks conservation, green compatibility and timestamp order. Returns a
    /// description of every violation found.
    pub fn audit(&self) -> Vec<String> {
        let mut issues = Vec::new();
        let s = self.snapshot();
        if s.entered != s.crossed + s.on_approach {
            issues.push(format!(
                "t={}: entered {} != crossed {} + on approach {}",
                s.time_s, s.entered, s.crossed, s.on_approach
            ));
        }
        if s.due != s.entered + s.backlog {
            issues.push(format!(
                "t={}: due {} != entered {} + backlog {}",
                s.time_s, s.due, s.entered, s.backlog
            ));
        }
        let greens: Vec<PhaseId> = PhaseId::all()
            .filter(|p| self.signal.colors[p.index()] == SignalColor::Green)
            .collect();
        for (k, &a) in greens.iter().enumerate() {
            for &b in &greens[k + 1..] {
                if !compatible(a, b) {
                    issues.push(format!("t={}: phases {a} and {b} green together", s.time_s));
                }
            }
        }
        for v in &self.vehicles {
            if let Some(d) = v.depart {
                if d < v.scheduled {
                    issues.push(format!("vehicle {} departed before schedule", v.id));
                }
                if let Some(a) = v.arrival {
                    if a < d {
                        issues.push(format!("vehicle {} arrived before departing", v.id));
                    }
                }
            } else if v.arrival.is_some() {
                issues.push(format!("vehicle {} arrived without departing", v.id));
            }
        }
        issues
    }
}

/// Anything that picks a signal action each second.
pub trait Controller {
    fn choose(&mut self, sim: &Intersection, observation: &Observation, valid: &ActionMask) -> Action;

    /// Called before each episode.
    fn reset(&mut self) {}
}

/// Runs `controller` on `scenario` to completion and returns the event log
/// and total reward.
pub fn run_episode<C: Controller + ?Sized>(
    cfg: &SimConfig,
    scenario: &Scenario,
    controller: &mut C,
    seed: u64,
) -> Result<(EventLog, f64), SimError> {
    let mut sim = Intersection::new(cfg.clone());
    let mut obs = sim.reset(scenario, seed);
    controller.reset();
    let mut total = 0.0;
    while !sim.is_done() {
        let valid = sim.valid_actions();
        let action = controller.choose(&sim, &obs, &valid);
        let out = sim.step(action)?;
        total += out.reward;
        obs = out.observation;
    }
    Ok((sim.event_log(), total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{generate_scenario, Vehicle};
    use crate::shift::PhaseCounts;

    fn act(a: u8, b: u8) -> Action {
        Action::from_pair(a, b).unwrap()
    }

    fn scenario(vehicles: &[(u8, f64)], duration: f64) -> Scenario {
        Scenario {
            label: "hand".into(),
            duration_s: duration,
            seed: 0,
            vehicles: vehicles
                .iter()
                .enumerate()
                .map(|(i, &(p, t))| Vehicle {
                    id: i as u64,
                    phase: PhaseId::new(p).unwrap(),
                    scheduled_depart_s: t,
                })
                .collect(),
        }
    }

    /// Steps with the only valid action until `n` seconds have passed.
    fn hold(sim: &mut Intersection, n: u32) -> f64 {
        let mut r = 0.0;
        for _ in 0..n {
            let a = sim.signal().active;
            r += sim.step(a).unwrap().reward;
        }
        r
    }

    #[test]
    fn reset_is_repeatable_and_clean() {
        let s = generate_scenario(&PhaseCounts([10; 8]), 300.0, 1, "s").unwrap();
        let mut sim = Intersection::new(SimConfig::default());
        let a = sim.reset(&s, 3);
        hold(&mut sim, 100);
        let b = sim.reset(&s, 3);
        assert_eq!(a, b);
        assert_eq!(sim.time_s(), 0);
        assert_eq!(sim.snapshot(), MetricsSnapshot::default());
        let empty = scenario(&[], 60.0);
        let o = sim.reset(&empty, 0);
        assert_eq!(o.detected_vehicles, [0; 8]);
    }

    #[test]
    fn startup_only_allows_default_then_all() {
        let mut sim = Intersection::new(SimConfig::default());
        sim.reset(&scenario(&[], 60.0), 0);
        assert_eq!(sim.signal().colors, [SignalColor::AllRedClearance; 8]);
        assert_eq!(sim.valid_actions(), ActionMask::only(act(2, 6)));
        assert!(matches!(sim.step(act(1, 5)), Err(SimError::InvalidAction { .. })));
        hold(&mut sim, 1);
        assert_eq!(sim.signal().colors, green_for(act(2, 6)));
        // green < min-green: only the current action
        hold(&mut sim, 4);
        assert_eq!(sim.valid_actions().count(), 1);
        hold(&mut sim, 1);
        assert_eq!(sim.valid_actions(), ActionMask::all());
    }

    #[test]
    fn mid_yellow_allows_only_pending() {
        let mut sim = Intersection::new(SimConfig::default());
        sim.reset(&scenario(&[], 60.0), 0);
        hold(&mut sim, 6);
        sim.step(act(4, 8)).unwrap();
        assert!(sim.signal().in_transition());
        assert_eq!(sim.signal().colors[1], SignalColor::Yellow);
        assert_eq!(sim.valid_actions(), ActionMask::only(act(4, 8)));
        assert!(sim.step(act(2, 6)).is_err());
        // 3 s yellow + 1 s all-red, the first yellow second already ran
        hold(&mut sim, 3);
        assert_eq!(sim.signal().colors, green_for(act(4, 8)));
    }

    #[test]
    fn empty_intersection_gives_no_reward() {
        let mut sim = Intersection::new(SimConfig::default());
        sim.reset(&scenario(&[], 30.0), 0);
        let mut total = 0.0;
        while !sim.is_done() {
            let a = sim.valid_actions().iter().last().unwrap();
            total += sim.step(a).unwrap().reward;
        }
        assert_eq!(total, 0.0);
        assert_eq!(sim.time_s(), 30);
    }

    #[test]
    fn queued_vehicle_crosses_after_startup() {
        let cfg = SimConfig::default();
        let ff = cfg.free_flow_s();
        // phase 4 vehicle reaches the stop line long before its phase gets green
        let mut sim = Intersection::new(cfg);
        sim.reset(&scenario(&[(4, 0.0)], 120.0), 0);
        hold(&mut sim, 30);
        assert_eq!(sim.observe().detected_vehicles[3], 1);
        sim.step(act(4, 8)).unwrap();
        // rest of yellow + all-red: 3 s; then two start-up seconds without discharge
        assert_eq!(hold(&mut sim, 3), 0.0);
        assert_eq!(hold(&mut sim, 2), 0.0);
        assert_eq!(sim.step(act(4, 8)).unwrap().reward, 1.0);
        let log = sim.event_log();
        let e = &log.events[0];
        assert_eq!(e.actual_depart_s, Some(0.0));
        assert!(e.arrival_s.unwrap() > ff);
    }

    #[test]
    fn free_flow_vehicle_has_no_delay() {
        let cfg = SimConfig::default();
        let ff = cfg.free_flow_s();
        let mut sim = Intersection::new(cfg);
        sim.reset(&scenario(&[(2, 10.25)], 60.0), 0);
        hold(&mut sim, 60);
        let e = &sim.event_log().events[0];
        assert_eq!(e.actual_depart_s, Some(10.25));
        assert!((e.arrival_s.unwrap() - (10.25 + ff)).abs() < 1e-9);
    }

    #[test]
    fn detection_is_capped() {
        let cfg = SimConfig::default();
        let v: Vec<(u8, f64)> = (0..12).map(|k| (3u8, k as f64)).collect();
        let mut sim = Intersection::new(cfg);
        sim.reset(&scenario(&v, 200.0), 0);
        hold(&mut sim, 60);
        assert_eq!(sim.queue_lengths()[2], 12);
        let obs = sim.observe();
        assert_eq!(obs.detected_vehicles[2], 5);
        assert_eq!(obs.detected_vehicles[0], 0);
        let enc = obs.encode();
        assert_eq!(enc.len(), OBS_WIDTH);
        // phase 3 block: count 1.0, red one-hot, elapsed
        assert_eq!(&enc[12..17], &[1.0, 0.0, 0.0, 0.0, 1.0]);
        // phase 2 is green
        assert_eq!(&enc[7..11], &[1.0, 0.0, 0.0, 0.0]);
        // (2,6) is action 3
        assert_eq!(&enc[48..], &[0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn entry_refused_when_approach_full() {
        let mut cfg = SimConfig::default();
        cfg.approach_capacity = 3;
        let v: Vec<(u8, f64)> = (0..6).map(|_| (4u8, 0.0)).collect();
        let mut sim = Intersection::new(cfg);
        sim.reset(&scenario(&v, 100.0), 0);
        hold(&mut sim, 20);
        let snap = sim.snapshot();
        assert_eq!(snap.on_approach, 3);
        assert_eq!(snap.backlog, 3);
        assert!(sim.audit().is_empty());
    }

    #[test]
    fn unserved_vehicles_time_out() {
        let mut cfg = SimConfig::default();
        cfg.timeout_extra_s = 50;
        let mut sim = Intersection::new(cfg);
        sim.reset(&scenario(&[(4, 1.0), (2, 1.0)], 20.0), 0);
        let steps = {
            let mut n = 0;
            while !sim.is_done() {
                sim.step(act(2, 6)).unwrap();
                n += 1;
            }
            n
        };
        assert_eq!(steps, 70);
        let log = sim.event_log();
        let stuck = log.events.iter().find(|e| e.phase.number() == 4).unwrap();
        assert!(stuck.timed_out);
        assert_eq!(stuck.arrival_s, Some(70.0));
        assert!(matches!(sim.step(act(2, 6)), Err(SimError::Finished)));
    }

    #[test]
    fn rewards_sum_to_crossed() {
        let s = generate_scenario(&PhaseCounts([20; 8]), 400.0, 5, "s").unwrap();
        let mut sim = Intersection::new(SimConfig::default());
        sim.reset(&s, 0);
        let mut total = 0.0;
        let mut k = 0usize;
        while !sim.is_done() {
            let valid = sim.valid_actions();
            // rotate through the four lead pairs every ~20 s
            let wanted = Action::new([0, 3, 4, 7][(k / 20) % 4]).unwrap();
            let a = if valid.contains(wanted) {
                wanted
            } else {
                sim.signal().active
            };
            total += sim.step(a).unwrap().reward;
            assert!(sim.audit().is_empty(), "{:?}", sim.audit());
            k += 1;
        }
        let log = sim.event_log();
        let crossed = log.events.iter().filter(|e| e.completed()).count();
        assert_eq!(total as usize, crossed);
        assert_eq!(crossed, 160);
    }

    #[test]
    fn step_before_reset_fails() {
        let mut sim = Intersection::new(SimConfig::default());
        assert_eq!(sim.step(act(2, 6)).unwrap_err(), SimError::NotReset);
    }
}
