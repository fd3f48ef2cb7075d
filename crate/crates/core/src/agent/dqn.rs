//! Deep Q-learning: Q-network, masked epsilon-greedy selection, the squared
//! TD loss and the training loop.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mlp::{Mlp, Sgd, Trace};
use super::replay::{ReplayBuffer, Transition};
use super::AgentError;
use crate::metrics;
use crate::scenario::Scenario;
use crate::seeding::{derive_seed, rng_from_seed, SimRng};
use crate::sim::{
    run_episode, Action, ActionMask, Controller, Intersection, Observation, SimConfig, NUM_ACTIONS, OBS_WIDTH,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QNetwork {
    pub mlp: Mlp,
}

impl QNetwork {
    /// `OBS_WIDTH -> hidden... -> NUM_ACTIONS` with seeded fan-in init.
    pub fn new(hidden: &[usize], seed: u64) -> Self {
        Self {
            mlp: Mlp::new(&Self::layer_sizes(hidden), seed),
        }
    }

    pub fn layer_sizes(hidden: &[usize]) -> Vec<usize> {
        let mut sizes = vec![OBS_WIDTH];
        sizes.extend_from_slice(hidden);
        sizes.push(NUM_ACTIONS);
        sizes
    }

    pub fn q_values_encoded(&self, state: &[f64]) -> Result<[f64; NUM_ACTIONS], AgentError> {
        let out = self.mlp.forward(state);
        let mut q = [0.0; NUM_ACTIONS];
        q.copy_from_slice(&out);
        if q.iter().any(|v| !v.is_finite()) {
            return Err(AgentError::NonFiniteOutput);
        }
        Ok(q)
    }

    pub fn q_values(&self, obs: &Observation) -> Result<[f64; NUM_ACTIONS], AgentError> {
        self.q_values_encoded(&obs.encode())
    }
}

/// Highest-valued valid action; ties go to the lowest action index.
pub fn masked_argmax(q: &[f64; NUM_ACTIONS], valid: &ActionMask) -> Option<Action> {
    valid.iter().fold(None, |best: Option<Action>, a| match best {
        Some(b) if q[a.index()] <= q[b.index()] => Some(b),
        _ => Some(a),
    })
}

fn uniform_valid<R: Rng + ?Sized>(valid: &ActionMask, rng: &mut R) -> Action {
    let n = valid.count();
    valid.iter().nth(rng.gen_range(0..n)).expect("index below count")
}

/// Epsilon-greedy over the valid actions only.
pub fn select_action<R: Rng + ?Sized>(
    net: &QNetwork,
    state: &[f64],
    valid: &ActionMask,
    epsilon: f64,
    rng: &mut R,
) -> Result<Action, AgentError> {
    if valid.count() == 0 {
        return Err(AgentError::NoValidAction);
    }
    if rng.gen::<f64>() < epsilon {
        return Ok(uniform_valid(valid, rng));
    }
    if valid.count() == 1 {
        return Ok(valid.iter().next().unwrap());
    }
    let q = net.q_values_encoded(state)?;
    Ok(masked_argmax(&q, valid).expect("mask is non-empty"))
}

/// Bootstrapped target `r + gamma * max_{a' valid} Q_target(s', a')`, or `r`
/// on terminal transitions.
pub fn td_target(t: &Transition, target: &QNetwork, gamma: f64) -> f64 {
    if t.done || t.next_valid.count() == 0 {
        return t.reward;
    }
    let q = target.mlp.forward(&t.next_state);
    let best = t
        .next_valid
        .iter()
        .map(|a| q[a.index()])
        .fold(f64::NEG_INFINITY, f64::max);
    t.reward + gamma * best
}

/// Mean over the batch of `(Q(s, a) - y)^2`.
pub fn td_loss(batch: &[&Transition], net: &QNetwork, target: &QNetwork, gamma: f64) -> f64 {
    assert!(!batch.is_empty(), "empty batch");
    let sum: f64 = batch
        .iter()
        .map(|t| {
            let q = net.mlp.forward(&t.state)[t.action.index()];
            let y = td_target(t, target, gamma);
            (q - y).powi(2)
        })
        .sum();
    sum / batch.len() as f64
}

/// [`td_loss`] together with its gradient with respect to `net`'s
/// parameters. The target network is held fixed.
pub fn td_loss_with_grad(batch: &[&Transition], net: &QNetwork, target: &QNetwork, gamma: f64) -> (f64, Mlp) {
    assert!(!batch.is_empty(), "empty batch");
    let n = batch.len() as f64;
    let mut grads = net.mlp.zeros_like();
    let mut trace = Trace::default();
    let mut loss = 0.0;
    let mut d_out = vec![0.0; NUM_ACTIONS];
    for t in batch {
        let out = net.mlp.forward_traced(&t.state, &mut trace);
        let y = td_target(t, target, gamma);
        let err = out[t.action.index()] - y;
        loss += err * err;
        d_out.iter_mut().for_each(|d| *d = 0.0);
        d_out[t.action.index()] = 2.0 * err / n;
        net.mlp.backward(&trace, &d_out, &mut grads);
    }
    (loss / n, grads)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub gamma: f64,
    pub learning_rate: f64,
    pub momentum: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay_steps: u64,
    /// An exploratory action is repeated for a uniform 1..=this many steps
    /// while it stays valid; 1 is plain epsilon-greedy.
    pub explore_repeat_max: u64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub target_sync_steps: u64,
    /// Environment steps to run.
    pub total_steps: u64,
    /// Transitions collected before the first update.
    pub warmup_steps: u64,
    /// Gradient updates run every `train_every` environment steps.
    pub train_every: u64,
    pub updates_per_train: u32,
    /// Global gradient-norm cap; `None` disables clipping.
    pub grad_clip: Option<f64>,
    pub hidden: Vec<usize>,
    pub seed: u64,
    /// Run the greedy policy on the first training scenario after every this
    /// many episodes and keep the weights with the lowest mean journey time;
    /// 0 keeps the final weights instead.
    pub eval_every_episodes: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            gamma: 0.95,
            learning_rate: 3e-4,
            momentum: 0.9,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_steps: 30_000,
            explore_repeat_max: 1,
            batch_size: 128,
            buffer_capacity: 100_000,
            target_sync_steps: 1000,
            total_steps: 50_000,
            warmup_steps: 1000,
            train_every: 1,
            updates_per_train: 1,
            grad_clip: Some(10.0),
            hidden: vec![64, 64],
            seed: 0,
            eval_every_episodes: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        let bad = |msg: &str| Err(AgentError::Config(msg.to_string()));
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1)");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning rate must be positive");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must lie in [0, 1)");
        }
        if !(0.0..=1.0).contains(&self.epsilon_start) || !(0.0..=1.0).contains(&self.epsilon_end) {
            return bad("epsilon bounds must lie in [0, 1]");
        }
        if self.batch_size == 0
            || self.buffer_capacity == 0
            || self.target_sync_steps == 0
            || self.train_every == 0
            || self.updates_per_train == 0
        {
            return bad("batch size, buffer capacity, target sync and update counts must be positive");
        }
        if self.explore_repeat_max == 0 {
            return bad("exploration repeat must be at least 1");
        }
        if self.hidden.contains(&0) {
            return bad("hidden layers must be non-empty");
        }
        if self.grad_clip.is_some_and(|c| !(c > 0.0)) {
            return bad("gradient clip must be positive");
        }
        Ok(())
    }

    /// Linear decay from `epsilon_start` to `epsilon_end`.
    pub fn epsilon_at(&self, step: u64) -> f64 {
        if self.epsilon_decay_steps == 0 || step >= self.epsilon_decay_steps {
            return self.epsilon_end;
        }
        let frac = step as f64 / self.epsilon_decay_steps as f64;
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStats {
    pub episode: usize,
    pub scenario: String,
    pub steps: u64,
    pub total_reward: f64,
    pub normalized_throughput: f64,
    pub mean_loss: f64,
    /// Greedy evaluation run after this episode, if one was scheduled.
    pub greedy_reward: Option<f64>,
    pub greedy_throughput: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Best greedy-evaluated weights, or the final ones without evaluation.
    pub network: QNetwork,
    pub final_network: QNetwork,
    /// One entry per completed episode.
    pub curve: Vec<EpisodeStats>,
    pub steps: u64,
}

fn grad_norm(g: &Mlp) -> f64 {
    g.params().map(|x| x * x).sum::<f64>().sqrt()
}

/// Trains a fresh network, cycling through `scenarios` one episode at a time.
pub fn train(scenarios: &[Scenario], sim_cfg: &SimConfig, cfg: &TrainConfig) -> Result<TrainOutcome, AgentError> {
    cfg.validate()?;
    if scenarios.is_empty() {
        return Err(AgentError::Config("training needs at least one scenario".into()));
    }
    let mut net = QNetwork::new(&cfg.hidden, derive_seed(cfg.seed, &[0]));
    let mut target = net.clone();
    let mut opt = Sgd::new(&net.mlp, cfg.learning_rate, cfg.momentum);
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity);
    let mut rng = rng_from_seed(derive_seed(cfg.seed, &[1]));
    let mut curve = Vec::new();

    if cfg.total_steps == 0 {
        return Ok(TrainOutcome {
            final_network: net.clone(),
            network: net,
            curve,
            steps: 0,
        });
    }

    let mut sim = Intersection::new(sim_cfg.clone());
    let mut episode = 0usize;
    let mut state = sim.reset(&scenarios[0], cfg.seed).encode();
    let (mut ep_reward, mut ep_steps, mut ep_loss, mut ep_updates) = (0.0, 0u64, 0.0, 0u64);
    let min_fill = cfg.warmup_steps.max(cfg.batch_size as u64) as usize;
    let mut best: Option<(f64, QNetwork)> = None;
    let mut repeat: Option<(Action, u64)> = None;

    for step in 0..cfg.total_steps {
        let valid = sim.valid_actions();
        let action = match repeat {
            Some((a, left)) if left > 0 && valid.contains(a) => {
                repeat = Some((a, left - 1));
                a
            }
            _ => {
                repeat = None;
                let eps = cfg.epsilon_at(step);
                if valid.count() > 1 && rng.gen::<f64>() < eps {
                    let a = uniform_valid(&valid, &mut rng);
                    if cfg.explore_repeat_max > 1 {
                        repeat = Some((a, rng.gen_range(0..cfg.explore_repeat_max)));
                    }
                    a
                } else {
                    select_action(&net, &state, &valid, 0.0, &mut rng)?
                }
            }
        };
        let out = sim.step(action)?;
        let next_state = out.observation.encode();
        buffer.push(Transition {
            state: std::mem::take(&mut state),
            action,
            reward: out.reward,
            next_state: next_state.clone(),
            done: out.done,
            next_valid: sim.valid_actions(),
        });
        state = next_state;
        ep_reward += out.reward;
        ep_steps += 1;

        let updates = if buffer.len() >= min_fill && step % cfg.train_every == 0 {
            cfg.updates_per_train
        } else {
            0
        };
        for _ in 0..updates {
            let batch = buffer.sample(cfg.batch_size, &mut rng);
            let (loss, mut grads) = td_loss_with_grad(&batch, &net, &target, cfg.gamma);
            if !loss.is_finite() {
                return Err(AgentError::Divergence { step });
            }
            if let Some(clip) = cfg.grad_clip {
                let norm = grad_norm(&grads);
                if norm > clip {
                    grads.scale(clip / norm);
                }
            }
            opt.step(&mut net.mlp, &grads);
            if !net.mlp.is_finite() {
                return Err(AgentError::Divergence { step });
            }
            ep_loss += loss;
            ep_updates += 1;
        }
        if (step + 1) % cfg.target_sync_steps == 0 {
            target = net.clone();
        }

        if out.done {
            let scenario = &scenarios[episode % scenarios.len()];
            let log = sim.event_log();
            let throughput = if log.events.is_empty() {
                1.0
            } else {
                metrics::normalized_throughput(&log, log.events.len() as u64)?
            };
            let greedy = if cfg.eval_every_episodes > 0 && (episode as u64 + 1) % cfg.eval_every_episodes == 0 {
                let g = greedy_score(&net, &scenarios[0], sim_cfg, cfg.seed)?;
                if best.as_ref().is_none_or(|(b, _)| g.mean_journey_s <= *b) {
                    best = Some((g.mean_journey_s, net.clone()));
                }
                Some((g.reward, g.throughput))
            } else {
                None
            };
            curve.push(EpisodeStats {
                episode,
                scenario: scenario.label.clone(),
                steps: ep_steps,
                total_reward: ep_reward,
                normalized_throughput: throughput,
                mean_loss: if ep_updates > 0 {
                    ep_loss / ep_updates as f64
                } else {
                    f64::NAN
                },
                greedy_reward: greedy.map(|g| g.0),
                greedy_throughput: greedy.map(|g| g.1),
            });
            log::info!(
                "episode {episode} ({}): reward {ep_reward}, throughput {throughput:.4}, eps {:.3}",
                scenario.label,
                cfg.epsilon_at(step)
            );
            episode += 1;
            let next = &scenarios[episode % scenarios.len()];
            state = sim.reset(next, cfg.seed).encode();
            repeat = None;
            (ep_reward, ep_steps, ep_loss, ep_updates) = (0.0, 0, 0.0, 0);
        }
    }
    let network = match best {
        Some((_, b)) => b,
        None => net.clone(),
    };
    Ok(TrainOutcome {
        network,
        final_network: net,
        curve,
        steps: cfg.total_steps,
    })
}

/// Outcome of one greedy evaluation episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreedyScore {
    pub reward: f64,
    pub throughput: f64,
    /// Mean arrival minus scheduled departure over every vehicle, with
    /// timed-out vehicles counted at the timeout. Lower is better.
    pub mean_journey_s: f64,
}

/// Runs the greedy policy once on `scenario`.
pub fn greedy_score(
    net: &QNetwork,
    scenario: &Scenario,
    sim_cfg: &SimConfig,
    seed: u64,
) -> Result<GreedyScore, AgentError> {
    let mut policy = DqnPolicy::greedy(net.clone());
    let (log, reward) = run_episode(sim_cfg, scenario, &mut policy, seed)?;
    if log.events.is_empty() {
        return Ok(GreedyScore {
            reward,
            throughput: 1.0,
            mean_journey_s: 0.0,
        });
    }
    let throughput = metrics::normalized_throughput(&log, log.events.len() as u64)?;
    let journeys: f64 = log
        .events
        .iter()
        .map(|e| e.arrival_s.unwrap_or(f64::INFINITY) - e.scheduled_depart_s)
        .sum();
    Ok(GreedyScore {
        reward,
        throughput,
        mean_journey_s: journeys / log.events.len() as f64,
    })
}

/// Controller wrapper around a trained network.
#[derive(Debug, Clone)]
pub struct DqnPolicy {
    pub network: QNetwork,
    pub epsilon: f64,
    rng: SimRng,
}

impl DqnPolicy {
    pub fn greedy(network: QNetwork) -> Self {
        Self::with_epsilon(network, 0.0, 0)
    }

    pub fn with_epsilon(network: QNetwork, epsilon: f64, seed: u64) -> Self {
        Self {
            network,
            epsilon,
            rng: rng_from_seed(seed),
        }
    }
}

impl Controller for DqnPolicy {
    fn choose(&mut self, sim: &Intersection, observation: &Observation, valid: &ActionMask) -> Action {
        match select_action(&self.network, &observation.encode(), valid, self.epsilon, &mut self.rng) {
            Ok(a) => a,
            Err(e) => {
                // a diverged network cannot choose; keep the current pair
                log::error!("greedy selection failed: {e}");
                sim.signal().active
            }
        }
    }
}
