//! Heat-demand statistics and the correlated lognormal day generator.
//!
//! The pipeline is: ingest hourly consumption history into per-hour means
//! and an unbiased covariance matrix, fit a lognormal model whose linear
//! moments match those statistics, then sample as many plausible days as
//! needed. Sampling is keyed per day index, so a batch is reproducible
//! regardless of order or worker count.

mod history;
mod lognormal;

pub use history::{ingest_history, read_history_csv, HistoryReading, IngestReport, RejectedDay};
pub use lognormal::{
    fit_lognormal, model_moments, profile_from_normals, sample_profiles, LognormalModel,
};

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::model::MAX_HORIZON;
use crate::Result;

/// Per-hour demand statistics for one day: mean vector and covariance
/// matrix in kWh, both indexed by hour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandStats {
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

impl DemandStats {
    /// Number of hours the statistics cover.
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Checks shape and finiteness: square covariance matching the mean
    /// length, all entries finite, variances non-negative.
    pub fn validate(&self) -> Result<()> {
        let n = self.mean.len();
        if n == 0 || n > MAX_HORIZON {
            return Err(Error::HorizonOutOfRange { horizon: n });
        }
        if self.cov.len() != n {
            return Err(Error::LengthMismatch {
                what: "covariance rows",
                expected: n,
                got: self.cov.len(),
            });
        }
        for (i, row) in self.cov.iter().enumerate() {
            if row.len() != n {
                return Err(Error::LengthMismatch {
                    what: "covariance row",
                    expected: n,
                    got: row.len(),
                });
            }
            if !self.mean[i].is_finite() {
                return Err(Error::InvalidStats(format!(
                    "mean at hour {i} is {}",
                    self.mean[i]
                )));
            }
            if !row[i].is_finite() || row[i] < 0.0 {
                return Err(Error::InvalidStats(format!(
                    "variance at hour {i} is {}",
                    row[i]
                )));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::InvalidStats(format!(
                    "covariance row {i} has non-finite entry {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Bundled day-ahead statistics for a mid-size building's heating demand:
/// a morning peak, a softer evening shoulder, 30 percent relative spread
/// per hour, and correlation decaying with hour distance. These are
/// illustrative defaults for experiments, not measurements.
pub fn default_stats() -> DemandStats {
    let stats: DemandStats = serde_json::from_str(include_str!("../assets/default_stats_v1.json"))
        .expect("bundled statistics parse");
    stats.validate().expect("bundled statistics are valid");
    stats
}
