//! Trains a DQN controller on short 900 s scenarios, saves a checkpoint and
//! scores it greedily. The step count is the first argument, e.g.
//! `cargo run --release --example train_dqn -- 50000`.

use ksshift::agent::{greedy_score, train, Checkpoint, TrainConfig};
use ksshift::experiment::training_scenarios;
use ksshift::shift::PhaseCounts;
use ksshift::sim::SimConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let steps: u64 = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(30_000);
    let cfg = TrainConfig {
        total_steps: steps,
        epsilon_decay_steps: steps * 3 / 5,
        warmup_steps: 500,
        ..TrainConfig::default()
    };
    let sim = SimConfig::default();
    let scenarios = training_scenarios(&PhaseCounts([110; 8]), 900.0, 0, 4)?;
    let out = train(&scenarios, &sim, &cfg)?;
    for e in &out.curve {
        println!(
            "episode {:>2}  reward {:>6}  loss {:.3}  greedy throughput {}",
            e.episode,
            e.total_reward,
            e.mean_loss,
            e.greedy_throughput.map_or("-".into(), |t| format!("{t:.4}"))
        );
    }
    let path = std::env::temp_dir().join("ksshift_example_agent.json");
    Checkpoint::new(&out.network, &cfg).save(&path)?;
    let score = greedy_score(&Checkpoint::load(&path)?.q_network(), &scenarios[0], &sim, 0)?;
    println!(
        "checkpoint {} scores throughput {:.4}",
        path.display(),
        score.throughput
    );
    Ok(())
}
