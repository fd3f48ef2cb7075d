use proptest::prelude::*;

use ksshift::agent::{greedy_score, masked_argmax, train, QNetwork, TrainConfig};
use ksshift::scenario::{generate_scenario, shuffle_departures, Scenario};
use ksshift::seeding::derive_seed;
use ksshift::shift::PhaseCounts;
use ksshift::sim::{Action, ActionMask, SimConfig};

fn mask() -> impl Strategy<Value = ActionMask> {
    proptest::array::uniform8(any::<bool>())
        .prop_filter("non-empty", |m| m.iter().any(|&b| b))
        .prop_map(ActionMask)
}

proptest! {
    #[test]
    fn masked_argmax_ignores_constant_shift(q in proptest::array::uniform8(-1e3f64..1e3), c in -1e3f64..1e3, m in mask()) {
        let shifted = q.map(|v| v + c);
        let a = masked_argmax(&q, &m).unwrap();
        prop_assert!(m.contains(a));
        // a shift can round two nearly equal values together; compare values, not indices
        let b = masked_argmax(&shifted, &m).unwrap();
        prop_assert!((q[a.index()] - q[b.index()]).abs() <= 1e-9 * (1.0 + c.abs()));
    }

    #[test]
    fn masked_argmax_never_picks_invalid(q in proptest::array::uniform8(-1e3f64..1e3), m in mask()) {
        let a = masked_argmax(&q, &m).unwrap();
        prop_assert!(m.iter().all(|b| q[b.index()] <= q[a.index()]));
    }
}

#[test]
fn empty_mask_has_no_argmax() {
    assert_eq!(masked_argmax(&[0.0; 8], &ActionMask([false; 8])), None);
    assert_eq!(
        masked_argmax(&[0.0; 8], &ActionMask::only(Action::new(5).unwrap())),
        Action::new(5)
    );
}

fn dominant_scenarios() -> Vec<Scenario> {
    // phase 4 runs close to saturation; the rest trickle
    let base = generate_scenario(&PhaseCounts([5, 5, 5, 340, 5, 5, 5, 5]), 400.0, 21, "dominant").unwrap();
    (0..4).map(|k| shuffle_departures(&base, 40 + k)).collect()
}

#[test]
fn greedy_reward_improves_with_training() {
    // episodes stop at the horizon, so the reward counts vehicles served in time
    let sim = SimConfig {
        timeout_extra_s: 0,
        ..SimConfig::default()
    };
    let cfg = TrainConfig {
        total_steps: 16_000,
        epsilon_decay_steps: 8_000,
        warmup_steps: 500,
        seed: 2,
        ..TrainConfig::default()
    };
    let initial = QNetwork::new(&cfg.hidden, derive_seed(cfg.seed, &[0]));
    let scenarios = dominant_scenarios();
    let initial_reward = greedy_score(&initial, &scenarios[0], &sim, 0).unwrap().reward;
    let out = train(&scenarios, &sim, &cfg).unwrap();
    let rewards: Vec<f64> = std::iter::once(initial_reward)
        .chain(out.curve.iter().filter_map(|e| e.greedy_reward))
        .collect();
    assert!(rewards.len() >= 20, "only {} evaluations", rewards.len());

    let smoothed: Vec<f64> = rewards.windows(10).map(|w| w.iter().sum::<f64>() / 10.0).collect();
    let dips: Vec<(usize, f64, f64)> = smoothed
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] < w[0])
        .map(|(i, w)| (i, w[0], w[1]))
        .collect();
    assert!(
        dips.is_empty(),
        "smoothed greedy reward fell: {dips:?}\nraw {rewards:?}"
    );
    let best = greedy_score(&out.network, &scenarios[0], &sim, 0).unwrap().reward;
    assert!(best >= 1.5 * initial_reward, "initial {initial_reward}, trained {best}");
}
