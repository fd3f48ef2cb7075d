//! Tabulates how the cumulative difference grows with phase KS distance in
//! both perturbation modes.

use ksshift::experiment::{ks_nonlinearity_report, write_nonlinearity_csv};
use ksshift::scenario::PerturbMode;
use ksshift::shift::TrafficDistribution;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let levels = [0.0, 0.01, 0.02, 0.04, 0.06, 0.08, 0.1, 0.12];
    let p = TrafficDistribution::uniform();
    for mode in [PerturbMode::Concentrated, PerturbMode::Spread] {
        println!("# {mode:?}");
        let rows = ks_nonlinearity_report(&p, &levels, mode, 0)?;
        write_nonlinearity_csv(&rows, std::io::stdout())?;
    }
    Ok(())
}
