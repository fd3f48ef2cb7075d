//! Ingests the bundled synthetic turn-count CSV into hourly phase counts and
//! compares each hour with the first one.

use ksshift::experiment::SAMPLE_TURN_COUNTS;
use ksshift::scenario::ingest_turn_counts;
use ksshift::shift::{normalize, phase_ks_distance};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let hours = ingest_turn_counts(SAMPLE_TURN_COUNTS.as_bytes())?;
    let first = normalize(&hours[0].counts)?;
    for h in &hours {
        let d = phase_ks_distance(&first, &normalize(&h.counts)?);
        println!(
            "{}  total {:>5}  {:?}  D vs first {:.4}",
            h.label,
            h.counts.total(),
            h.counts.0,
            d
        );
        if !h.missing.is_empty() {
            println!("  zero-filled phases {:?}", h.missing);
        }
    }
    Ok(())
}
