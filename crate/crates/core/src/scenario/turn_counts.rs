//! Turn-count CSV ingestion.
//!
//! Schema: `period_start,phase,volume,bucket_minutes` with ISO-8601 timestamps,
//! phases 1..8 and buckets of 5, 15 or 60 minutes. Rows are aggregated into
//! hourly [`PhaseCounts`], keyed by the hour their period starts in.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime, Timelike};
use serde::Deserialize;

use super::ScenarioError;
use crate::shift::{PhaseCounts, PhaseId};

#[derive(Debug, Clone, PartialEq)]
pub struct TurnCountRecord {
    pub period_start: NaiveDateTime,
    pub phase: PhaseId,
    pub volume: u64,
    pub bucket_minutes: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HourlyCounts {
    /// Hour start, formatted `YYYY-MM-DDTHH:00`.
    pub label: String,
    pub counts: PhaseCounts,
    /// Phases with no rows in this hour; their counts were zero-filled.
    pub missing: Vec<PhaseId>,
}

#[derive(Deserialize)]
struct RawRow {
    period_start: String,
    phase: i64,
    volume: i64,
    bucket_minutes: u32,
}

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.naive_local());
    }
    ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M:%S"]
        .iter()
        .find_map(|fmt| NaiveDateTime::parse_from_str(s, fmt).ok())
}

fn parse_row(raw: RawRow, line: usize) -> Result<TurnCountRecord, ScenarioError> {
    let err = |msg: String| ScenarioError::Parse { line, msg };
    let period_start =
        parse_timestamp(&raw.period_start).ok_or_else(|| err(format!("bad timestamp `{}`", raw.period_start)))?;
    let phase = u8::try_from(raw.phase)
        .ok()
        .and_then(|p| PhaseId::new(p).ok())
        .ok_or_else(|| err(format!("phase {} is outside 1..8", raw.phase)))?;
    let volume = u64::try_from(raw.volume).map_err(|_| err(format!("negative volume {}", raw.volume)))?;
    if ![5, 15, 60].contains(&raw.bucket_minutes) {
        return Err(err(format!(
            "bucket of {} minutes is not 5, 15 or 60",
            raw.bucket_minutes
        )));
    }
    if period_start.minute() % raw.bucket_minutes != 0 || period_start.second() != 0 {
        return Err(err(format!(
            "period {period_start} is not aligned to a {}-minute bucket",
            raw.bucket_minutes
        )));
    }
    Ok(TurnCountRecord {
        period_start,
        phase,
        volume,
        bucket_minutes: raw.bucket_minutes,
    })
}

/// Parses every row of a turn-count CSV.
pub fn read_turn_counts<R: Read>(reader: R) -> Result<Vec<TurnCountRecord>, ScenarioError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<RawRow>().enumerate() {
        // header is line 1
        let line = i + 2;
        let raw = row.map_err(|e| ScenarioError::Parse {
            line,
            msg: e.to_string(),
        })?;
        out.push(parse_row(raw, line)?);
    }
    Ok(out)
}

/// Aggregates a turn-count CSV into one [`HourlyCounts`] per clock hour, in
/// chronological order.
pub fn ingest_turn_counts<R: Read>(reader: R) -> Result<Vec<HourlyCounts>, ScenarioError> {
    let records = read_turn_counts(reader)?;
    let mut hours: BTreeMap<NaiveDateTime, (PhaseCounts, [bool; 8])> = BTreeMap::new();
    for r in records {
        let hour = r
            .period_start
            .with_minute(0)
            .and_then(|t| t.with_second(0))
            .expect("minute 0 is always valid");
        let entry = hours.entry(hour).or_default();
        entry.0.add(r.phase, r.volume);
        entry.1[r.phase.index()] = true;
    }
    Ok(hours
        .into_iter()
        .map(|(hour, (counts, seen))| {
            let missing: Vec<PhaseId> = PhaseId::all().filter(|p| !seen[p.index()]).collect();
            let label = hour.format("%Y-%m-%dT%H:00").to_string();
            if !missing.is_empty() {
                log::warn!("{label}: no rows for phases {missing:?}; zero-filled");
            }
            HourlyCounts { label, counts, missing }
        })
        .collect())
}

impl HourlyCounts {
    pub fn from_path(path: &Path) -> Result<Vec<HourlyCounts>, ScenarioError> {
        ingest_turn_counts(std::fs::File::open(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ingest(s: &str) -> Result<Vec<HourlyCounts>, ScenarioError> {
        ingest_turn_counts(s.as_bytes())
    }

    #[test]
    fn one_row_per_phase() {
        let mut csv = String::from("period_start,phase,volume,bucket_minutes\n");
        for p in 1..=8 {
            csv.push_str(&format!("2023-03-14T07:00:00,{p},100,60\n"));
        }
        let hours = ingest(&csv).unwrap();
        assert_eq!(hours.len(), 1);
        assert_eq!(hours[0].counts, PhaseCounts([100; 8]));
        assert!(hours[0].missing.is_empty());
        assert_eq!(hours[0].label, "2023-03-14T07:00");
    }

    #[test]
    fn five_minute_buckets_aggregate() {
        let mut csv = String::from("period_start,phase,volume,bucket_minutes\n");
        for k in 0..12 {
            csv.push_str(&format!("2023-03-14T07:{:02}:00,2,10,5\n", 5 * k));
        }
        let hours = ingest(&csv).unwrap();
        assert_eq!(hours[0].counts.get(PhaseId::new(2).unwrap()), 120);
        assert_eq!(hours[0].missing.len(), 7);
    }

    #[test]
    fn hours_are_separated_and_ordered() {
        let csv = "period_start,phase,volume,bucket_minutes\n\
                   2023-03-14T09:15:00,1,5,15\n\
                   2023-03-14T07:00:00,1,7,60\n\
                   2023-03-14T09:30:00,1,6,15\n";
        let hours = ingest(csv).unwrap();
        assert_eq!(hours.len(), 2);
        assert_eq!(hours[0].label, "2023-03-14T07:00");
        assert_eq!(hours[1].counts.get(PhaseId::new(1).unwrap()), 11);
    }

    #[test]
    fn rejects_bad_rows() {
        let bad_phase = "period_start,phase,volume,bucket_minutes\n2023-03-14T07:00:00,9,10,60\n";
        assert!(matches!(ingest(bad_phase), Err(ScenarioError::Parse { line: 2, .. })));
        let bad_bucket = "period_start,phase,volume,bucket_minutes\n2023-03-14T07:00:00,1,10,30\n";
        assert!(ingest(bad_bucket).is_err());
        let bad_time = "period_start,phase,volume,bucket_minutes\nyesterday,1,10,60\n";
        assert!(ingest(bad_time).is_err());
        let negative = "period_start,phase,volume,bucket_minutes\n2023-03-14T07:00:00,1,-3,60\n";
        assert!(ingest(negative).is_err());
        let short = "period_start,phase,volume,bucket_minutes\n2023-03-14T07:00:00,1\n";
        assert!(ingest(short).is_err());
    }

    #[test]
    fn accepts_offsets() {
        let csv = "period_start,phase,volume,bucket_minutes\n2023-03-14T07:00:00-06:00,3,4,60\n";
        let hours = ingest(csv).unwrap();
        assert_eq!(hours[0].label, "2023-03-14T07:00");
    }
}
