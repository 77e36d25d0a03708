//! Shared vocabulary: tariffs, pump and store parameters, demand profiles,
//! on/off schedules with their integer encoding, and exact cost evaluation.
//!
//! Prices are stored as integer milli-units per kWh of electricity so that
//! cost comparison and tie-breaking are exact; floats only appear when a
//! cost is reported in currency units.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// Hard cap on the number of hourly decisions in one problem.
///
/// Schedules are encoded as one bit per hour in a `u32`, and exhaustive
/// enumeration of all `2^H` schedules must stay tractable, so a horizon is
/// at most one day of hourly slots.
pub const MAX_HORIZON: usize = 24;

/// Milli-units per currency unit in tariff prices.
pub const MILLI_PER_UNIT: i64 = 1000;

/// Upper bound on a single hourly price in milli-units.
///
/// Keeps the perturbed cost key (price scaled by 10^6 plus an hour index)
/// far away from `i64` overflow even when all 24 hours are switched on.
pub const MAX_PRICE_MILLI: i64 = 1_000_000_000;

/// Absolute tolerance, in kWh, when checking storage levels against bounds.
///
/// Storage states are short sums of kWh-scale floats, so their rounding
/// error is many orders of magnitude below this; the tolerance only absorbs
/// harmless last-bit noise and never masks a real violation.
pub const EPS_FEAS: f64 = 1e-6;

/// Hours that carry the low (main) tariff in the default two-band day:
/// night hours plus the late-evening pair; the remaining hours carry the
/// high tariff.
pub const DEFAULT_MT_HOURS: [usize; 8] = [0, 1, 2, 3, 4, 5, 22, 23];

/// Electricity price for each hour of the horizon, in milli-units per kWh.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tariff {
    milli: Vec<i64>,
}

impl Tariff {
    /// Builds a tariff from per-hour milli-unit prices.
    ///
    /// Every price must lie in `1..=MAX_PRICE_MILLI` and the horizon in
    /// `1..=MAX_HORIZON`.
    pub fn from_milli(milli: Vec<i64>) -> Result<Self> {
        if milli.is_empty() || milli.len() > MAX_HORIZON {
            return Err(Error::HorizonOutOfRange {
                horizon: milli.len(),
            });
        }
        for (hour, &p) in milli.iter().enumerate() {
            if p <= 0 || p > MAX_PRICE_MILLI {
                return Err(Error::NonPositivePrice { hour, milli: p });
            }
        }
        Ok(Self { milli })
    }

    /// Builds a tariff from currency-unit prices, rounding to milli-units.
    pub fn from_unit_prices(prices: &[f64]) -> Result<Self> {
        let milli = prices
            .iter()
            .map(|p| (p * MILLI_PER_UNIT as f64).round() as i64)
            .collect();
        Self::from_milli(milli)
    }

    /// Two-band tariff: `mt_hours` carry `mt_milli`, all other hours carry
    /// `vt_milli`.
    pub fn two_band(
        horizon: usize,
        mt_milli: i64,
        vt_milli: i64,
        mt_hours: &[usize],
    ) -> Result<Self> {
        if horizon == 0 || horizon > MAX_HORIZON {
            return Err(Error::HorizonOutOfRange { horizon });
        }
        let mut milli = vec![vt_milli; horizon];
        for &h in mt_hours {
            if h >= horizon {
                return Err(Error::InvalidPumpConfig(format!(
                    "low-tariff hour {h} outside horizon {horizon}"
                )));
            }
            milli[h] = mt_milli;
        }
        Self::from_milli(milli)
    }

    /// Number of hours the tariff covers.
    pub fn horizon(&self) -> usize {
        self.milli.len()
    }

    /// Price of hour `t` in milli-units per kWh.
    pub fn milli(&self, t: usize) -> i64 {
        self.milli[t]
    }

    /// All hourly prices in milli-units per kWh.
    pub fn as_milli(&self) -> &[i64] {
        &self.milli
    }

    /// Price of hour `t` in currency units per kWh.
    pub fn unit_price(&self, t: usize) -> f64 {
        self.milli[t] as f64 / MILLI_PER_UNIT as f64
    }
}

impl Default for Tariff {
    /// Full-day two-band tariff: main rate 1.000 on the night and
    /// late-evening hours, 1.500 (1.5x) on the daytime hours.
    fn default() -> Self {
        Self::two_band(MAX_HORIZON, 1000, 1500, &DEFAULT_MT_HOURS)
            .expect("default tariff parameters are valid")
    }
}

/// How the final hour of the day interacts with the storage balance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TerminalMode {
    /// The day is left open after the last switching decision: the final
    /// hour's run is priced, but its effect on the store is never tracked,
    /// so the last hour's demand does not enter the balance. The trajectory
    /// holds `horizon` states, `S_0..S_{horizon-1}`.
    Open,
    /// The balance closes the day: every hour steps the store and the
    /// end-of-day stock must respect the bounds. The trajectory holds
    /// `horizon + 1` states, `S_0..S_{horizon}`.
    Closed,
}

impl TerminalMode {
    /// Number of storage steps applied over `horizon` decisions.
    pub fn balance_steps(self, horizon: usize) -> usize {
        match self {
            TerminalMode::Open => horizon.saturating_sub(1),
            TerminalMode::Closed => horizon,
        }
    }
}

impl std::fmt::Display for TerminalMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TerminalMode::Open => write!(f, "open"),
            TerminalMode::Closed => write!(f, "closed"),
        }
    }
}

impl std::str::FromStr for TerminalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "open" => Ok(TerminalMode::Open),
            "closed" => Ok(TerminalMode::Closed),
            other => Err(Error::InvalidPumpConfig(format!(
                "unknown terminal mode {other:?}, expected \"open\" or \"closed\""
            ))),
        }
    }
}

/// Heat pump and thermal store parameters for one scheduling problem.
///
/// Energy flows are in kWh per hourly slot: running the pump during hour `t`
/// draws `p_max` kWh of electricity and adds `cop * p_max` kWh of heat to
/// the store, while the hour's heat demand is drawn from the store.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PumpConfig {
    /// Electrical energy drawn per full-on hour, kWh.
    pub p_max: f64,
    /// Coefficient of performance: heat output per unit of electricity.
    pub cop: f64,
    /// Lowest admissible storage level, kWh.
    pub s_min: f64,
    /// Highest admissible storage level, kWh.
    pub s_max: f64,
    /// Storage level at the start of the day, kWh.
    pub s0: f64,
    /// Number of hourly on/off decisions.
    pub horizon: usize,
    /// Whether the final hour's storage effect is tracked.
    pub terminal_mode: TerminalMode,
}

impl Default for PumpConfig {
    /// Reference day-ahead setup: 100 kW pump with COP 1.6 feeding a
    /// 200 kWh store that starts half full.
    fn default() -> Self {
        Self {
            p_max: 100.0,
            cop: 1.6,
            s_min: 0.0,
            s_max: 200.0,
            s0: 100.0,
            horizon: MAX_HORIZON,
            terminal_mode: TerminalMode::Open,
        }
    }
}

impl PumpConfig {
    /// Checks all parameter invariants.
    pub fn validate(&self) -> Result<()> {
        let finite = [self.p_max, self.cop, self.s_min, self.s_max, self.s0]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidPumpConfig(
                "all parameters must be finite".into(),
            ));
        }
        if self.p_max <= 0.0 {
            return Err(Error::InvalidPumpConfig(format!(
                "p_max must be positive, got {}",
                self.p_max
            )));
        }
        if self.cop <= 0.0 {
            return Err(Error::InvalidPumpConfig(format!(
                "cop must be positive, got {}",
                self.cop
            )));
        }
        if !(self.s_min <= self.s0 && self.s0 <= self.s_max) {
            return Err(Error::InvalidPumpConfig(format!(
                "storage levels must satisfy s_min <= s0 <= s_max, got {} <= {} <= {}",
                self.s_min, self.s0, self.s_max
            )));
        }
        if self.horizon == 0 || self.horizon > MAX_HORIZON {
            return Err(Error::HorizonOutOfRange {
                horizon: self.horizon,
            });
        }
        Ok(())
    }

    /// Heat added to the store by one full-on hour, kWh.
    pub fn charge_per_hour(&self) -> f64 {
        self.cop * self.p_max
    }

    /// Number of storage steps the balance applies over the horizon.
    pub fn balance_steps(&self) -> usize {
        self.terminal_mode.balance_steps(self.horizon)
    }

    /// Length of the storage trajectory produced by a simulation.
    pub fn trajectory_len(&self) -> usize {
        self.balance_steps() + 1
    }
}

/// Hourly heat demand for one day, kWh per hour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandProfile {
    hd: Vec<f64>,
}

impl DemandProfile {
    /// Builds a profile, requiring every entry to be finite and >= 0 and
    /// the length to be a valid horizon.
    pub fn new(hd: Vec<f64>) -> Result<Self> {
        if hd.is_empty() || hd.len() > MAX_HORIZON {
            return Err(Error::HorizonOutOfRange { horizon: hd.len() });
        }
        for (hour, &v) in hd.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidDemand { hour, value: v });
            }
        }
        Ok(Self { hd })
    }

    /// Demand of hour `t`, kWh.
    pub fn get(&self, t: usize) -> f64 {
        self.hd[t]
    }

    /// All hourly demands, kWh.
    pub fn as_slice(&self) -> &[f64] {
        &self.hd
    }

    /// Number of hours covered.
    pub fn len(&self) -> usize {
        self.hd.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hd.is_empty()
    }

    /// Total heat demanded over the day, kWh.
    pub fn total(&self) -> f64 {
        self.hd.iter().sum()
    }
}

/// One on/off decision per hour.
///
/// A schedule maps one-to-one onto an integer code: hour `t` contributes
/// bit `t` (hour 0 is the least significant bit), so the all-off day is 0
/// and the all-on 24-hour day is `2^24 - 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Schedule {
    bits: Vec<bool>,
}

impl Schedule {
    /// Builds a schedule from per-hour switch states.
    pub fn new(bits: Vec<bool>) -> Result<Self> {
        if bits.is_empty() || bits.len() > MAX_HORIZON {
            return Err(Error::HorizonOutOfRange {
                horizon: bits.len(),
            });
        }
        Ok(Self { bits })
    }

    /// The all-off schedule for a horizon.
    pub fn all_off(horizon: usize) -> Result<Self> {
        Self::new(vec![false; horizon])
    }

    /// Reconstructs the schedule with integer code `code` at a horizon.
    ///
    /// Fails if `code >= 2^horizon`: every valid code corresponds to
    /// exactly one schedule and vice versa.
    pub fn decode(code: u32, horizon: usize) -> Result<Self> {
        if horizon == 0 || horizon > MAX_HORIZON {
            return Err(Error::HorizonOutOfRange { horizon });
        }
        if u64::from(code) >= 1u64 << horizon {
            return Err(Error::CodeOutOfRange {
                code: u64::from(code),
                horizon,
            });
        }
        let bits = (0..horizon).map(|t| code >> t & 1 == 1).collect();
        Ok(Self { bits })
    }

    /// Integer code of the schedule: sum of `2^t` over switched-on hours.
    pub fn encode(&self) -> u32 {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .fold(0u32, |acc, (t, _)| acc | 1 << t)
    }

    /// Number of hours covered.
    pub fn horizon(&self) -> usize {
        self.bits.len()
    }

    /// Whether the pump runs during hour `t`.
    pub fn bit(&self, t: usize) -> bool {
        self.bits[t]
    }

    /// All per-hour switch states.
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Number of switched-on hours.
    pub fn on_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Compact `"0"`/`"1"` string, hour 0 first.
    pub fn to_bit_string(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    /// Parses a compact `"0"`/`"1"` string, hour 0 first.
    pub fn from_bit_string(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidDataset(format!(
                    "invalid schedule character {other:?}"
                ))),
            })
            .collect::<Result<Vec<bool>>>()?;
        Self::new(bits)
    }
}

/// Storage level before each balance step, plus the final level when the
/// day's balance is closed. Values in kWh.
#[derive(Debug, Clone, PartialEq)]
pub struct StorageTrajectory {
    pub states: Vec<f64>,
}

impl StorageTrajectory {
    /// Lowest level reached.
    pub fn min(&self) -> f64 {
        self.states.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Highest level reached.
    pub fn max(&self) -> f64 {
        self.states.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// A solved day: the cheapest feasible schedule and its certificates.
#[derive(Debug, Clone)]
pub struct SolveResult {
    /// The optimal schedule.
    pub schedule: Schedule,
    /// Electricity cost of the schedule in currency units.
    pub cost: f64,
    /// Exact integer key the solver minimised: the milli-unit cost scaled
    /// by 10^6 plus the sum of switched-on hour indices. The index term is
    /// always smaller than one price step, so minimising the key minimises
    /// cost first and prefers early-hour schedules among equal-cost ones.
    pub cost_key: i64,
    /// Storage levels certifying feasibility of the schedule.
    pub trajectory: StorageTrajectory,
}

/// Electricity cost of a schedule under a tariff, in currency units.
///
/// The sum runs over switched-on hours in exact integer milli-units and is
/// converted to currency once at the end, so equal costs compare equal.
pub fn evaluate_cost(schedule: &Schedule, tariff: &Tariff, cfg: &PumpConfig) -> Result<f64> {
    if schedule.horizon() != cfg.horizon {
        return Err(Error::LengthMismatch {
            what: "schedule horizon",
            expected: cfg.horizon,
            got: schedule.horizon(),
        });
    }
    if tariff.horizon() != cfg.horizon {
        return Err(Error::LengthMismatch {
            what: "tariff horizon",
            expected: cfg.horizon,
            got: tariff.horizon(),
        });
    }
    let milli_sum: i64 = (0..cfg.horizon)
        .filter(|&t| schedule.bit(t))
        .map(|t| tariff.milli(t))
        .sum();
    Ok(cfg.p_max * milli_sum as f64 / MILLI_PER_UNIT as f64)
}

/// Exact integer tie-breaking key for a schedule under a tariff.
///
/// Each switched-on hour contributes its milli-unit price scaled by 10^6
/// plus its hour index. The largest possible index contribution over a day
/// (0 + 1 + ... + 23 = 276) is far below the 10^6 granted to one milli-unit
/// of price, so ordering by key never contradicts ordering by cost; among
/// equal-cost schedules it prefers the one running in earlier hours.
/// The pump power scales every schedule's cost equally and is left out.
pub fn perturbed_cost_key(schedule: &Schedule, tariff: &Tariff) -> Result<i64> {
    if tariff.horizon() != schedule.horizon() {
        return Err(Error::LengthMismatch {
            what: "tariff horizon",
            expected: schedule.horizon(),
            got: tariff.horizon(),
        });
    }
    Ok((0..schedule.horizon())
        .filter(|&t| schedule.bit(t))
        .map(|t| tariff.milli(t) * 1_000_000 + t as i64)
        .sum())
}
