//! Ingestion of hourly consumption history.
//!
//! History arrives as (date, hour, kWh) readings, one per building-hour.
//! Only days with all 24 hours present enter the statistics; partial days
//! are reported back to the caller instead of silently skewing a mean.

use std::collections::BTreeMap;
use std::io::Read;

use chrono::NaiveDate;

use crate::error::Error;
use crate::Result;

use super::DemandStats;

const HOURS: usize = 24;

/// One metered hour.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryReading {
    pub date: NaiveDate,
    /// Hour of day, 0..=23.
    pub hour: u32,
    pub demand_kwh: f64,
}

/// A day left out of the statistics because hours were missing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RejectedDay {
    pub date: NaiveDate,
    pub present_hours: usize,
}

/// What the ingestion used and what it discarded.
#[derive(Debug, Clone, PartialEq)]
pub struct IngestReport {
    pub stats: DemandStats,
    pub complete_days: usize,
    pub rejected_days: Vec<RejectedDay>,
}

/// Reads `date,hour,demand_kwh` rows (with that header) from CSV.
///
/// Dates are ISO `YYYY-MM-DD`. Rows must have hour in 0..=23 and a finite,
/// non-negative demand; the first bad row fails the read with its line
/// number.
pub fn read_history_csv<R: Read>(reader: R) -> Result<Vec<HistoryReading>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |reason: String| Error::InvalidHistoryRow { line, reason };
        if record.len() != 3 {
            return Err(bad(format!("expected 3 fields, got {}", record.len())));
        }
        let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d")
            .map_err(|e| bad(format!("bad date {:?}: {e}", &record[0])))?;
        let hour: u32 = record[1]
            .parse()
            .map_err(|e| bad(format!("bad hour {:?}: {e}", &record[1])))?;
        if hour >= HOURS as u32 {
            return Err(bad(format!("hour {hour} out of range 0..=23")));
        }
        let demand_kwh: f64 = record[2]
            .parse()
            .map_err(|e| bad(format!("bad demand {:?}: {e}", &record[2])))?;
        if !demand_kwh.is_finite() || demand_kwh < 0.0 {
            return Err(bad(format!(
                "demand must be finite and non-negative, got {demand_kwh}"
            )));
        }
        rows.push(HistoryReading { date, hour, demand_kwh });
    }
    Ok(rows)
}

/// Turns readings into per-hour means and an unbiased covariance matrix.
///
/// Each complete day is one observation of a 24-vector. Duplicate
/// (date, hour) pairs are an error: they signal corrupted input rather
/// than a day to skip. At least two complete days are required, otherwise
/// the covariance is undefined.
pub fn ingest_history(readings: &[HistoryReading]) -> Result<IngestReport> {
    let mut days: BTreeMap<NaiveDate, [Option<f64>; HOURS]> = BTreeMap::new();
    for r in readings {
        let slots = days.entry(r.date).or_insert([None; HOURS]);
        let slot = &mut slots[r.hour as usize];
        if slot.is_some() {
            return Err(Error::DuplicateReading { date: r.date, hour: r.hour });
        }
        *slot = Some(r.demand_kwh);
    }

    let mut complete: Vec<[f64; HOURS]> = Vec::new();
    let mut rejected_days = Vec::new();
    for (date, slots) in &days {
        let present = slots.iter().flatten().count();
        if present == HOURS {
            complete.push(slots.map(|v| v.expect("all hours present")));
        } else {
            rejected_days.push(RejectedDay { date: *date, present_hours: present });
        }
    }

    let n = complete.len();
    if n < 2 {
        return Err(Error::HistoryTooShort { complete_days: n });
    }

    let mut mean = vec![0.0; HOURS];
    for day in &complete {
        for (m, v) in mean.iter_mut().zip(day) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }

    let mut cov = vec![vec![0.0; HOURS]; HOURS];
    for day in &complete {
        for i in 0..HOURS {
            let di = day[i] - mean[i];
            for j in i..HOURS {
                cov[i][j] += di * (day[j] - mean[j]);
            }
        }
    }
    for i in 0..HOURS {
        for j in i..HOURS {
            cov[i][j] /= (n - 1) as f64;
            cov[j][i] = cov[i][j];
        }
    }

    let stats = DemandStats { mean, cov };
    stats.validate()?;
    Ok(IngestReport { stats, complete_days: n, rejected_days })
}
