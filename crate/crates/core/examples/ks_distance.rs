//! Phase KS distance, CDF distance, cumulative difference and the KS test
//! between a training pmf and an observed hour of counts.

use ksshift::shift::{cdf_ks_distance, cumulative_difference, ks_test, normalize, phase_ks_distance, PhaseCounts};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let train = normalize(&PhaseCounts([450; 8]))?;
    let observed = PhaseCounts([380, 520, 410, 600, 300, 470, 450, 470]);
    let test = normalize(&observed)?;

    println!("phase KS distance     {:.4}", phase_ks_distance(&train, &test));
    println!("CDF KS distance       {:.4}", cdf_ks_distance(&train, &test));
    println!("cumulative difference {:.4}", cumulative_difference(&train, &test));

    for alpha in [0.05, 0.01] {
        let r = ks_test(&train, &test, alpha, observed.total())?;
        println!(
            "alpha {alpha}: D = {:.4}, critical {:.4}, reject = {}",
            r.distance, r.critical_value, r.reject_null
        );
    }
    Ok(())
}
