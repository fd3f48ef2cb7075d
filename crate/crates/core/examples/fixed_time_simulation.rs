//! Runs the fixed-time and random controllers on one generated scenario and
//! prints the aggregated metrics.

use ksshift::agent::{FixedTimePolicy, RandomPolicy};
use ksshift::metrics::aggregate;
use ksshift::scenario::generate_scenario;
use ksshift::shift::PhaseCounts;
use ksshift::sim::{run_episode, Controller, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SimConfig::default();
    let scenario = generate_scenario(&PhaseCounts([500; 8]), 3600.0, 1, "uniform4000")?;
    let controllers: Vec<(&str, Box<dyn Controller>)> = vec![
        ("fixed-time", Box::new(FixedTimePolicy::default())),
        ("random", Box::new(RandomPolicy::new(1))),
    ];
    for (name, mut c) in controllers {
        let (log, reward) = run_episode(&cfg, &scenario, c.as_mut(), 1)?;
        let r = aggregate(&log)?;
        println!(
            "{name:<10} reward {reward:>6}  throughput {:.4}  ETT {:.1}s  delay {:.1}s  timed out {}",
            r.normalized_throughput, r.mean_extended_travel_time_s, r.mean_delay_s, r.timed_out
        );
    }
    Ok(())
}
