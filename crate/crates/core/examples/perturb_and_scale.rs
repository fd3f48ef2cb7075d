//! Builds test distributions at fixed KS distances from a training pmf and
//! turns them into integer phase counts at several volumes.

use ksshift::scenario::{perturb_to_ks, scale_volume, PerturbMode};
use ksshift::shift::{cumulative_difference, normalize, phase_ks_distance, PhaseCounts};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let train = normalize(&PhaseCounts([300, 520, 410, 600, 280, 500, 390, 600]))?;
    for mode in [PerturbMode::Concentrated, PerturbMode::Spread] {
        println!("{mode:?}");
        for level in [0.02, 0.05, 0.1] {
            let q = perturb_to_ks(&train, level, mode, 7)?;
            println!(
                "  D = {level:<5} achieved {:.6}  cumulative difference {:.4}",
                phase_ks_distance(&train, &q),
                cumulative_difference(&train, &q)
            );
            for total in [2000, 5000] {
                let counts = scale_volume(&q, total);
                let realized = normalize(&counts)?;
                println!(
                    "    {total} vehicles {:?}  realized D {:.6}",
                    counts.0,
                    phase_ks_distance(&train, &realized)
                );
            }
        }
    }
    Ok(())
}
