//! A reduced KS by volume grid evaluated with the fixed-time controller,
//! written to CSV and SVG under a temporary directory.

use ksshift::experiment::{run_experiment, summarize, write_outputs, ExperimentKind, ExperimentSpec, PolicyKind};
use ksshift::shift::PhaseCounts;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut spec = ExperimentSpec::new(ExperimentKind::Grid, PhaseCounts([450; 8]));
    spec.ks_levels = vec![0.0, 0.1, 0.2];
    spec.volumes = vec![3000, 4000, 5000];
    spec.seeds = vec![0, 1];
    spec.policy = PolicyKind::FixedTime;

    let out = run_experiment(&spec)?;
    for c in summarize(&out.rows) {
        println!(
            "KS {:.2}  volume {}  throughput {:.4}  ETT {:.1}s",
            c.ks_level, c.volume, c.mean_throughput, c.mean_ett_s
        );
    }
    let dir = std::env::temp_dir().join("ksshift_grid_example");
    let files = write_outputs(&dir, "grid", &out.rows)?;
    println!("wrote {}", files.results_csv.display());
    Ok(())
}
