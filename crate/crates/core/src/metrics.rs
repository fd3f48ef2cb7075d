//! Performance measures computed from per-vehicle event logs.
//!
//! Per vehicle, with `s` scheduled departure, `d` actual departure, `a`
//! arrival and `f` free-flow time:
//!
//! * extended travel time `a - s`
//! * travel time `a - d`
//! * intersection delay `max(0, a - d - f)`
//!
//! so `ETT = (d - s) + TT` and `TT >= delay`. Throughput counts vehicles that
//! crossed within the scenario horizon; vehicles still unserved at the hard
//! timeout are flagged `timed_out` and left out of the time averages.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::shift::PhaseId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("vehicle {0} has no recorded arrival")]
    NotArrived(u64),
    #[error("throughput needs at least one generated vehicle")]
    ZeroGenerated,
    #[error("event log is empty")]
    EmptyLog,
}

/// Timestamps of one vehicle's trip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEvent {
    pub vehicle_id: u64,
    pub phase: PhaseId,
    pub scheduled_depart_s: f64,
    pub actual_depart_s: Option<f64>,
    pub arrival_s: Option<f64>,
    pub timed_out: bool,
}

impl SimEvent {
    fn arrived(&self) -> Result<(f64, f64), MetricsError> {
        match (self.actual_depart_s, self.arrival_s) {
            (Some(d), Some(a)) => Ok((d, a)),
            _ => Err(MetricsError::NotArrived(self.vehicle_id)),
        }
    }

    /// Arrived before the hard timeout.
    pub fn completed(&self) -> bool {
        self.arrival_s.is_some() && !self.timed_out
    }
}

/// Everything the simulator recorded for one scenario run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventLog {
    pub label: String,
    pub duration_s: f64,
    pub free_flow_s: f64,
    pub events: Vec<SimEvent>,
}

impl EventLog {
    /// Writes `vehicle_id,phase,scheduled_s,actual_depart_s,arrival_s`. Missing
    /// timestamps are written as empty fields.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["vehicle_id", "phase", "scheduled_s", "actual_depart_s", "arrival_s"])?;
        let opt = |x: Option<f64>| x.map(|v| format!("{v:.3}")).unwrap_or_default();
        for e in &self.events {
            w.write_record([
                e.vehicle_id.to_string(),
                e.phase.to_string(),
                format!("{:.3}", e.scheduled_depart_s),
                opt(e.actual_depart_s),
                opt(e.arrival_s),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn extended_travel_time(v: &SimEvent) -> Result<f64, MetricsError> {
    let (_, arrival) = v.arrived()?;
    Ok(arrival - v.scheduled_depart_s)
}

pub fn travel_time(v: &SimEvent) -> Result<f64, MetricsError> {
    let (depart, arrival) = v.arrived()?;
    Ok(arrival - depart)
}

/// Approach-to-crossing time minus free-flow time, floored at zero. With a
/// single approach segment per movement, approach entry is the actual
/// departure.
pub fn intersection_delay(v: &SimEvent, free_flow_s: f64) -> Result<f64, MetricsError> {
    Ok((travel_time(v)? - free_flow_s).max(0.0))
}

/// Vehicles that crossed within the horizon divided by `generated`.
pub fn normalized_throughput(log: &EventLog, generated: u64) -> Result<f64, MetricsError> {
    if generated == 0 {
        return Err(MetricsError::ZeroGenerated);
    }
    Ok(crossed_within_horizon(log) as f64 / generated as f64)
}

fn crossed_within_horizon(log: &EventLog) -> u64 {
    log.events
        .iter()
        .filter(|e| e.completed() && e.arrival_s.is_some_and(|a| a <= log.duration_s))
        .count() as u64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub normalized_throughput: f64,
    pub mean_extended_travel_time_s: f64,
    pub mean_travel_time_s: f64,
    pub mean_delay_s: f64,
    pub vehicles_generated: u64,
    /// Crossed within the scenario horizon.
    pub vehicles_crossed: u64,
    /// Crossed before the hard timeout; the population behind the time means.
    pub vehicles_arrived: u64,
    pub timed_out: u64,
}

/// Summarizes one run. Time means are NaN when no vehicle arrived.
pub fn aggregate(log: &EventLog) -> Result<MetricsReport, MetricsError> {
    if log.events.is_empty() {
        return Err(MetricsError::EmptyLog);
    }
    let generated = log.events.len() as u64;
    let (mut ett, mut tt, mut delay, mut arrived) = (0.0, 0.0, 0.0, 0u64);
    for e in log.events.iter().filter(|e| e.completed()) {
        ett += extended_travel_time(e)?;
        tt += travel_time(e)?;
        delay += intersection_delay(e, log.free_flow_s)?;
        arrived += 1;
    }
    let n = arrived as f64;
    Ok(MetricsReport {
        normalized_throughput: normalized_throughput(log, generated)?,
        mean_extended_travel_time_s: ett / n,
        mean_travel_time_s: tt / n,
        mean_delay_s: delay / n,
        vehicles_generated: generated,
        vehicles_crossed: crossed_within_horizon(log),
        vehicles_arrived: arrived,
        timed_out: log.events.iter().filter(|e| e.timed_out).count() as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(id: u64, s: f64, d: f64, a: f64) -> SimEvent {
        SimEvent {
            vehicle_id: id,
            phase: PhaseId::new(2).unwrap(),
            scheduled_depart_s: s,
            actual_depart_s: Some(d),
            arrival_s: Some(a),
            timed_out: false,
        }
    }

    fn log(events: Vec<SimEvent>) -> EventLog {
        EventLog {
            label: "t".into(),
            duration_s: 3600.0,
            free_flow_s: 14.0,
            events,
        }
    }

    #[test]
    fn time_metric_examples() {
        let v = ev(0, 0.0, 5.0, 60.0);
        assert_eq!(extended_travel_time(&v).unwrap(), 60.0);
        assert_eq!(travel_time(&v).unwrap(), 55.0);
        assert_eq!(intersection_delay(&v, 14.0).unwrap(), 41.0);
        let w = ev(1, 3.0, 3.0, 17.0);
        assert_eq!(extended_travel_time(&w).unwrap(), travel_time(&w).unwrap());
        assert_eq!(intersection_delay(&w, 14.0).unwrap(), 0.0);
    }

    #[test]
    fn not_arrived() {
        let mut v = ev(7, 0.0, 1.0, 2.0);
        v.arrival_s = None;
        assert_eq!(extended_travel_time(&v), Err(MetricsError::NotArrived(7)));
        assert_eq!(travel_time(&v), Err(MetricsError::NotArrived(7)));
    }

    #[test]
    fn throughput_examples() {
        let all = log(vec![ev(0, 0.0, 0.0, 20.0), ev(1, 1.0, 1.0, 30.0)]);
        assert_eq!(normalized_throughput(&all, 2).unwrap(), 1.0);
        let mut half = all.clone();
        half.events[1].arrival_s = Some(3700.0);
        assert_eq!(normalized_throughput(&half, 2).unwrap(), 0.5);
        assert_eq!(normalized_throughput(&all, 0), Err(MetricsError::ZeroGenerated));
    }

    #[test]
    fn aggregate_examples() {
        let one = aggregate(&log(vec![ev(0, 0.0, 5.0, 60.0)])).unwrap();
        assert_eq!(one.mean_extended_travel_time_s, 60.0);
        assert_eq!(one.mean_travel_time_s, 55.0);
        assert_eq!(one.mean_delay_s, 41.0);
        let two = aggregate(&log(vec![ev(0, 0.0, 0.0, 60.0), ev(1, 0.0, 0.0, 120.0)])).unwrap();
        assert_eq!(two.mean_extended_travel_time_s, 90.0);
        assert_eq!(aggregate(&log(vec![])), Err(MetricsError::EmptyLog));
    }

    #[test]
    fn timed_out_vehicles_count_only_in_denominator() {
        let mut stuck = ev(1, 10.0, 5400.0, 5400.0);
        stuck.timed_out = true;
        let r = aggregate(&log(vec![ev(0, 0.0, 0.0, 20.0), stuck])).unwrap();
        assert_eq!(r.timed_out, 1);
        assert_eq!(r.vehicles_generated, 2);
        assert_eq!(r.vehicles_crossed, 1);
        assert_eq!(r.normalized_throughput, 0.5);
        assert_eq!(r.mean_extended_travel_time_s, 20.0);
    }

    #[test]
    fn event_log_csv_header() {
        let mut buf = Vec::new();
        log(vec![ev(0, 0.5, 1.0, 20.25)]).write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "vehicle_id,phase,scheduled_s,actual_depart_s,arrival_s\n0,2,0.500,1.000,20.250\n"
        );
    }

    proptest! {
        #[test]
        fn report_invariants_hold(
            trips in prop::collection::vec((0.0..3600.0f64, 0.0..600.0f64, 14.0..900.0f64, any::<bool>()), 1..60)
        ) {
            let events: Vec<SimEvent> = trips
                .iter()
                .enumerate()
                .map(|(i, &(s, wait, travel, timeout))| {
                    let mut e = ev(i as u64, s, s + wait, s + wait + travel);
                    e.timed_out = timeout && i > 0;
                    e
                })
                .collect();
            let l = log(events);
            let r = aggregate(&l).unwrap();
            prop_assert!((0.0..=1.0).contains(&r.normalized_throughput));
            prop_assert_eq!(r.normalized_throughput, r.vehicles_crossed as f64 / r.vehicles_generated as f64);
            if r.vehicles_arrived > 0 {
                prop_assert!(r.mean_extended_travel_time_s >= r.mean_travel_time_s);
                prop_assert!(r.mean_travel_time_s >= r.mean_delay_s);
                prop_assert!(r.mean_delay_s >= 0.0);
            }
            for e in &l.events {
                let split = (e.actual_depart_s.unwrap() - e.scheduled_depart_s) + travel_time(e).unwrap();
                prop_assert!((extended_travel_time(e).unwrap() - split).abs() < 1e-9);
            }
        }
    }
}
