//! Structure of the set of optimal schedules across many sampled days.
//!
//! Solving a large batch of days yields one optimal schedule each; this
//! module asks how often those schedules repeat. The multiplicity
//! histogram is compared against the collision statistics of uniform
//! draws from all `2^horizon` codes (a Poisson baseline), and a
//! zero-truncated Poisson fit to the observed multiplicities estimates
//! how many schedules the generating process effectively uses.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::model::{Schedule, MAX_HORIZON};
use crate::Result;

/// How often each optimal schedule recurred in a batch.
///
/// `counts[m]` is the number of distinct schedules that occurred exactly
/// `m` times, so `sum(m * counts[m])` recovers the batch size and
/// `sum(counts[m])` the number of distinct schedules.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiplicityHistogram {
    horizon: usize,
    n: u64,
    distinct: u64,
    counts: BTreeMap<u64, u64>,
}

impl MultiplicityHistogram {
    /// Counts recurrences among schedules that must share one horizon.
    pub fn from_schedules(schedules: &[Schedule]) -> Result<Self> {
        if schedules.is_empty() {
            return Err(Error::EmptyInput { what: "schedules" });
        }
        let horizon = schedules[0].horizon();
        for s in schedules {
            if s.horizon() != horizon {
                return Err(Error::MixedHorizons {
                    expected: horizon,
                    got: s.horizon(),
                });
            }
        }
        let codes: Vec<u32> = schedules.iter().map(Schedule::encode).collect();
        Self::from_codes(&codes, horizon)
    }

    /// Counts recurrences among schedule codes at a given horizon.
    pub fn from_codes(codes: &[u32], horizon: usize) -> Result<Self> {
        if codes.is_empty() {
            return Err(Error::EmptyInput { what: "schedule codes" });
        }
        if horizon == 0 || horizon > MAX_HORIZON {
            return Err(Error::HorizonOutOfRange { horizon });
        }
        let mut per_code: HashMap<u32, u64> = HashMap::new();
        for &code in codes {
            if u64::from(code) >= 1u64 << horizon {
                return Err(Error::CodeOutOfRange {
                    code: u64::from(code),
                    horizon,
                });
            }
            *per_code.entry(code).or_insert(0) += 1;
        }
        let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
        for &m in per_code.values() {
            *counts.entry(m).or_insert(0) += 1;
        }
        Self::from_counts(horizon, counts)
    }

    /// Builds a histogram from pre-aggregated counts, checking that they
    /// are consistent with the horizon.
    pub fn from_counts(horizon: usize, counts: BTreeMap<u64, u64>) -> Result<Self> {
        if horizon == 0 || horizon > MAX_HORIZON {
            return Err(Error::HorizonOutOfRange { horizon });
        }
        let counts: BTreeMap<u64, u64> =
            counts.into_iter().filter(|&(_, c)| c > 0).collect();
        if counts.is_empty() {
            return Err(Error::EmptyInput { what: "multiplicity counts" });
        }
        if counts.contains_key(&0) {
            return Err(Error::InvalidStats(
                "multiplicity 0 cannot be observed".into(),
            ));
        }
        let distinct: u64 = counts.values().sum();
        let n: u64 = counts.iter().map(|(m, c)| m * c).sum();
        if horizon < 64 && distinct > 1u64 << horizon {
            return Err(Error::InvalidStats(format!(
                "{distinct} distinct schedules cannot exist at horizon {horizon}"
            )));
        }
        Ok(Self { horizon, n, distinct, counts })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Total schedules counted (batch size).
    pub fn n(&self) -> u64 {
        self.n
    }

    /// Number of distinct schedules observed.
    pub fn distinct(&self) -> u64 {
        self.distinct
    }

    pub fn counts(&self) -> &BTreeMap<u64, u64> {
        &self.counts
    }

    pub fn max_multiplicity(&self) -> u64 {
        *self.counts.keys().next_back().expect("histogram is never empty")
    }

    /// Fraction of the batch whose schedule occurred at most `k` times.
    pub fn fraction_at_most(&self, k: u64) -> f64 {
        let covered: u64 = self
            .counts
            .range(..=k)
            .map(|(m, c)| m * c)
            .sum();
        covered as f64 / self.n as f64
    }

    /// Fraction of distinct schedules that occurred at most `k` times.
    pub fn distinct_fraction_at_most(&self, k: u64) -> f64 {
        let covered: u64 = self.counts.range(..=k).map(|(_, c)| c).sum();
        covered as f64 / self.distinct as f64
    }
}

/// Collision rate of `n` uniform draws over all codes of a horizon: the
/// occupancy of any given code is approximately Poisson with this rate.
pub fn baseline_lambda(n: u64, horizon: usize) -> f64 {
    n as f64 / (1u64 << horizon) as f64
}

/// Poisson CDF at `k`: the baseline probability that a code is drawn at
/// most `k` times when draws are uniform over the whole code space.
pub fn baseline_fraction_at_most(k: u64, lambda: f64) -> f64 {
    let mut term = (-lambda).exp();
    let mut cum = term;
    for j in 1..=k {
        term *= lambda / j as f64;
        cum += term;
    }
    cum.min(1.0)
}

/// Effective-size estimate from observed multiplicities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PoissonFit {
    /// Collisions were observed: rate and effective pool size estimates.
    Fitted { lambda_hat: f64, m_hat: f64 },
    /// Every schedule was distinct, so the truncated-Poisson likelihood
    /// has no finite maximiser. Zero collisions among roughly `n^2 / 2`
    /// pairs still bounds the pool: a pool smaller than `n^2 / 2` would
    /// have been expected to produce a repeat.
    NoCollisions { m_hat_lower_bound: f64 },
}

/// Mean multiplicity of the occupied cells of a Poisson process.
fn truncated_mean(lambda: f64) -> f64 {
    // 1 - e^-lambda via expm1 keeps the ratio accurate near zero.
    lambda / -(-lambda).exp_m1()
}

/// Fits a zero-truncated Poisson to the multiplicity histogram.
///
/// Seeing each of `distinct` schedules at least once, with `n` draws in
/// total, the maximum-likelihood rate solves
/// `lambda / (1 - e^-lambda) = n / distinct`; the left side is strictly
/// increasing, so the equation is solved by bisection to 1e-12. The
/// effective pool size is `n / lambda_hat`, capped at the `2^horizon`
/// schedules that exist.
pub fn fit_truncated_poisson(hist: &MultiplicityHistogram) -> PoissonFit {
    let n = hist.n();
    if hist.distinct() == n {
        return PoissonFit::NoCollisions {
            m_hat_lower_bound: (n as f64) * (n as f64) / 2.0,
        };
    }
    let mean = n as f64 / hist.distinct() as f64;
    let mut lo = 1e-12;
    let mut hi = 50.0;
    while truncated_mean(hi) < mean {
        hi *= 2.0;
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if truncated_mean(mid) < mean {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda_hat = 0.5 * (lo + hi);
    let pool_cap = if hist.horizon() < 64 {
        (1u64 << hist.horizon()) as f64
    } else {
        f64::INFINITY
    };
    PoissonFit::Fitted {
        lambda_hat,
        m_hat: (n as f64 / lambda_hat).min(pool_cap),
    }
}

/// One point of the recurrence curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub k: u64,
    /// Fraction of the batch whose schedule occurred at most `k` times.
    pub empirical_fraction_at_most_k: f64,
    /// Poisson baseline for uniform draws over the whole code space.
    pub baseline_fraction_at_most_k: f64,
}

/// Summary of a batch's solution-space structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceReport {
    pub n: u64,
    pub distinct: u64,
    pub counts_by_multiplicity: BTreeMap<u64, u64>,
    pub lambda_baseline: f64,
    pub lambda_hat: Option<f64>,
    pub m_hat: Option<f64>,
    /// Present instead of `m_hat` when no schedule repeated.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub m_hat_lower_bound: Option<f64>,
    /// Days until the effective pool has been seen once: `m_hat / 365`.
    pub repeat_years_365: Option<f64>,
    /// Same, counting only a 190-day heating season per year.
    pub repeat_years_season: Option<f64>,
    pub max_multiplicity: u64,
    #[serde(skip)]
    pub horizon: usize,
}

/// Length of a heating season in days, for the seasonal repeat horizon.
pub const SEASON_DAYS: f64 = 190.0;

/// Builds the space report for a batch of optimal schedules.
pub fn space_report(schedules: &[Schedule]) -> Result<SpaceReport> {
    Ok(report_from_histogram(&MultiplicityHistogram::from_schedules(
        schedules,
    )?))
}

/// Builds the space report from an already-counted histogram.
pub fn report_from_histogram(hist: &MultiplicityHistogram) -> SpaceReport {
    let fit = fit_truncated_poisson(hist);
    let (lambda_hat, m_hat, m_hat_lower_bound) = match fit {
        PoissonFit::Fitted { lambda_hat, m_hat } => (Some(lambda_hat), Some(m_hat), None),
        PoissonFit::NoCollisions { m_hat_lower_bound } => {
            (None, None, Some(m_hat_lower_bound))
        }
    };
    SpaceReport {
        n: hist.n(),
        distinct: hist.distinct(),
        counts_by_multiplicity: hist.counts().clone(),
        lambda_baseline: baseline_lambda(hist.n(), hist.horizon()),
        lambda_hat,
        m_hat,
        m_hat_lower_bound,
        repeat_years_365: m_hat.map(|m| m / 365.0),
        repeat_years_season: m_hat.map(|m| m / SEASON_DAYS),
        max_multiplicity: hist.max_multiplicity(),
        horizon: hist.horizon(),
    }
}

/// Recurrence curve of a histogram against its uniform baseline, from
/// k = 0 up to the largest observed multiplicity.
pub fn fraction_curve(hist: &MultiplicityHistogram) -> Vec<CurvePoint> {
    let lambda = baseline_lambda(hist.n(), hist.horizon());
    (0..=hist.max_multiplicity())
        .map(|k| CurvePoint {
            k,
            empirical_fraction_at_most_k: hist.fraction_at_most(k),
            baseline_fraction_at_most_k: baseline_fraction_at_most(k, lambda),
        })
        .collect()
}
