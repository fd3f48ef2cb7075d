//! Monitors a stream of hourly counts against the training distribution and
//! raises an alarm when the phase KS distance passes a threshold.

use ksshift::experiment::{shift_alarm, AlarmStatus};
use ksshift::shift::{normalize, phase_ks_distance, PhaseCounts};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let reference = normalize(&PhaseCounts([450; 8]))?;
    let hours = [
        ("06:00", PhaseCounts([440, 455, 470, 430, 450, 445, 460, 450])),
        ("07:00", PhaseCounts([420, 480, 500, 410, 440, 470, 430, 450])),
        ("08:00", PhaseCounts([300, 620, 560, 330, 380, 560, 400, 450])),
        ("09:00", PhaseCounts([350, 540, 520, 380, 420, 500, 430, 460])),
    ];
    for (label, counts) in hours {
        let observed = normalize(&counts)?;
        let status = shift_alarm(&reference, &observed, 0.04)?;
        let flag = if status == AlarmStatus::Alarm { "ALARM" } else { "ok" };
        println!("{label}  D = {:.4}  {flag}", phase_ks_distance(&reference, &observed));
    }
    Ok(())
}
