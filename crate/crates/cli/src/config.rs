//! Experiment configuration: one JSON document that, together with the
//! seed, pins every result an experiment produces.
//!
//! Any subset of fields may appear in a config file; missing fields take
//! the defaults below. Command-line flags override the file. The resolved
//! configuration is echoed into the output directory, so a run can always
//! be reproduced from its artifacts alone.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use heatsched::demand::{default_stats, DemandStats};
use heatsched::model::{PumpConfig, Tariff, TerminalMode, DEFAULT_MT_HOURS, MILLI_PER_UNIT};
use heatsched::predict::HyperGrid;
use heatsched::Result;

/// Where the demand statistics come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum StatsSource {
    /// The bundled illustrative statistics.
    Default,
    /// A `{ "mean": [...], "cov": [[...]] }` JSON file.
    File { path: PathBuf },
}

impl Default for StatsSource {
    fn default() -> Self {
        StatsSource::Default
    }
}

impl StatsSource {
    pub fn load(&self) -> Result<DemandStats> {
        match self {
            StatsSource::Default => Ok(default_stats()),
            StatsSource::File { path } => {
                let stats: DemandStats = serde_json::from_reader(std::fs::File::open(path)?)?;
                stats.validate()?;
                Ok(stats)
            }
        }
    }
}

/// Two-band tariff in unit prices: `mt_hours` pay `mt_unit_price`, every
/// other hour pays `mt_unit_price * vt_ratio`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TariffSpec {
    pub mt_unit_price: f64,
    pub vt_ratio: f64,
    pub mt_hours: Vec<usize>,
}

impl Default for TariffSpec {
    fn default() -> Self {
        Self {
            mt_unit_price: 1.0,
            vt_ratio: 1.5,
            mt_hours: DEFAULT_MT_HOURS.to_vec(),
        }
    }
}

impl TariffSpec {
    pub fn build(&self, horizon: usize) -> Result<Tariff> {
        let mt = (self.mt_unit_price * MILLI_PER_UNIT as f64).round() as i64;
        let vt = (self.mt_unit_price * self.vt_ratio * MILLI_PER_UNIT as f64).round() as i64;
        Tariff::two_band(horizon, mt, vt, &self.mt_hours)
    }
}

/// Pump and storage parameters. The horizon is not configured here; it
/// follows from the demand data (24 for the bundled statistics).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PumpSpec {
    pub p_max: f64,
    pub cop: f64,
    pub s_min: f64,
    pub s_max: f64,
    pub s0: f64,
    pub terminal_mode: TerminalMode,
}

impl Default for PumpSpec {
    fn default() -> Self {
        let d = PumpConfig::default();
        Self {
            p_max: d.p_max,
            cop: d.cop,
            s_min: d.s_min,
            s_max: d.s_max,
            s0: d.s0,
            terminal_mode: d.terminal_mode,
        }
    }
}

impl PumpSpec {
    pub fn build(&self, horizon: usize) -> Result<PumpConfig> {
        let cfg = PumpConfig {
            p_max: self.p_max,
            cop: self.cop,
            s_min: self.s_min,
            s_max: self.s_max,
            s0: self.s0,
            horizon,
            terminal_mode: self.terminal_mode,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Hyperparameter grid for the `predict` subcommand.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PredictSpec {
    pub grid: HyperGrid,
}

/// The full experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Master seed; every stream the run uses is derived from it.
    pub seed: u64,
    /// Number of demand days the pipeline samples and solves.
    pub samples: usize,
    pub stats: StatsSource,
    pub tariff: TariffSpec,
    pub pump: PumpSpec,
    pub predict: PredictSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            samples: 100_000,
            stats: StatsSource::default(),
            tariff: TariffSpec::default(),
            pump: PumpSpec::default(),
            predict: PredictSpec::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let config: Self = serde_json::from_reader(std::fs::File::open(path)?)?;
        Ok(config)
    }

    /// Writes the resolved configuration next to the run's other
    /// artifacts. Paths of inputs are part of the echo; the output
    /// directory itself is not, so two runs into different directories
    /// stay byte-identical.
    pub fn echo_into(&self, out_dir: &Path) -> Result<()> {
        let file = std::fs::File::create(out_dir.join("config.json"))?;
        serde_json::to_writer_pretty(file, self)?;
        Ok(())
    }
}
