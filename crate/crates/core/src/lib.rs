//! Optimal daily on/off scheduling for a heat pump feeding a thermal store.
//!
//! The crate is organised around one day of hourly decisions:
//!
//! * [`model`] holds the shared vocabulary: tariffs, pump and store
//!   parameters, demand profiles, bit schedules and their integer encoding,
//!   and exact cost evaluation.
//! * [`demand`] turns historical consumption into per-hour statistics and
//!   fits a correlated lognormal generator so arbitrarily many plausible
//!   days can be sampled.
//! * [`optimizer`] finds the provably cheapest feasible schedule for a
//!   demand day (dynamic program plus an exhaustive cross-check) and scores
//!   it against a storage-free baseline.
//! * [`space`] examines how many distinct optimal schedules a large batch
//!   of days produces and estimates the effective size of that solution set.
//! * [`predict`] trains and evaluates models that guess the optimal
//!   schedule directly from the demand profile.
//!
//! Every randomised routine takes an explicit seed and derives independent
//! per-item streams via [`rng`], so results are reproducible bit for bit
//! regardless of batch order or worker count.

pub mod demand;
pub mod error;
pub mod model;
pub mod optimizer;
pub mod predict;
pub mod rng;
pub mod space;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
