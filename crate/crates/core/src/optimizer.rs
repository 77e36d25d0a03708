//! Exact minimisation of the daily electricity cost.
//!
//! The store turns the switching problem into a chain of balance
//! constraints: hour t's decision adds `cop * p_max` kWh when on, the
//! hour's demand is drawn out, and the level must stay inside
//! `[s_min, s_max]` after every tracked step. Two independent solvers are
//! provided: a dynamic program over (hour, on-hours-so-far) states, and an
//! exhaustive scan of all `2^horizon` schedules used as its oracle. Both
//! minimise the same exact integer key, so their results are identical bit
//! for bit, including the tie-breaking choice among equally cheap
//! schedules and the diagnosis of infeasible days.

use rayon::prelude::*;

use crate::error::Error;
use crate::model::{
    evaluate_cost, perturbed_cost_key, DemandProfile, PumpConfig, Schedule, SolveResult,
    StorageTrajectory, Tariff, EPS_FEAS,
};
use crate::Result;

/// Largest horizon the exhaustive solver accepts; `2^20` schedules is the
/// point beyond which a full scan stops being a reasonable test oracle.
pub const MAX_EXHAUSTIVE_HORIZON: usize = 20;

/// Which storage bound a schedule runs through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Violation {
    /// The store would be drawn below `s_min`: demand cannot be met.
    Underflow,
    /// The store would be filled above `s_max`.
    Overflow,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Underflow => write!(f, "underflow"),
            Violation::Overflow => write!(f, "overflow"),
        }
    }
}

/// Feasibility of one simulated schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Feasible,
    /// First bound violation: `hour` is the index of the offending storage
    /// state, i.e. the violation happens after the decision of hour
    /// `hour - 1`.
    Violated { hour: usize, violation: Violation },
}

/// Diagnosis of a day with no feasible schedule.
///
/// `hour` is the latest storage step any schedule survives to; every
/// schedule violates a bound at or before it. `violation` is `Underflow`
/// if any deepest-surviving schedule underflows there, else `Overflow`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InfeasibleReport {
    pub hour: usize,
    pub violation: Violation,
}

/// Result of solving one day: the provably cheapest schedule, or a
/// certificate that none exists.
#[derive(Debug, Clone)]
pub enum SolveOutcome {
    Optimal(SolveResult),
    Infeasible(InfeasibleReport),
}

impl SolveOutcome {
    /// The optimal result, if the day was feasible.
    pub fn optimal(&self) -> Option<&SolveResult> {
        match self {
            SolveOutcome::Optimal(r) => Some(r),
            SolveOutcome::Infeasible(_) => None,
        }
    }
}

fn bound_violation(s: f64, cfg: &PumpConfig) -> Option<Violation> {
    if s < cfg.s_min - EPS_FEAS {
        Some(Violation::Underflow)
    } else if s > cfg.s_max + EPS_FEAS {
        Some(Violation::Overflow)
    } else {
        None
    }
}

fn check_problem_shape(demand: &DemandProfile, tariff: &Tariff, cfg: &PumpConfig) -> Result<()> {
    cfg.validate()?;
    if demand.len() != cfg.horizon {
        return Err(Error::LengthMismatch {
            what: "demand horizon",
            expected: cfg.horizon,
            got: demand.len(),
        });
    }
    if tariff.horizon() != cfg.horizon {
        return Err(Error::LengthMismatch {
            what: "tariff horizon",
            expected: cfg.horizon,
            got: tariff.horizon(),
        });
    }
    Ok(())
}

/// Runs the storage balance for a schedule and reports the trajectory
/// together with its first bound violation, if any.
///
/// The trajectory starts at `s0` and applies one step per tracked hour:
/// `S_{t+1} = S_t + cop * p_max * b_t - hd_t`. It is computed in full even
/// past a violation so the caller can inspect the whole day.
pub fn simulate(
    schedule: &Schedule,
    demand: &DemandProfile,
    cfg: &PumpConfig,
) -> Result<(StorageTrajectory, Verdict)> {
    check_shape_for_simulation(schedule, demand, cfg)?;
    let chp = cfg.charge_per_hour();
    let steps = cfg.balance_steps();
    let mut states = Vec::with_capacity(steps + 1);
    let mut s = cfg.s0;
    states.push(s);
    let mut verdict = Verdict::Feasible;
    for t in 0..steps {
        let charge = if schedule.bit(t) { chp } else { 0.0 };
        s = s + charge - demand.get(t);
        states.push(s);
        if verdict == Verdict::Feasible {
            if let Some(violation) = bound_violation(s, cfg) {
                verdict = Verdict::Violated { hour: t + 1, violation };
            }
        }
    }
    Ok((StorageTrajectory { states }, verdict))
}

fn check_shape_for_simulation(
    schedule: &Schedule,
    demand: &DemandProfile,
    cfg: &PumpConfig,
) -> Result<()> {
    cfg.validate()?;
    if schedule.horizon() != cfg.horizon {
        return Err(Error::LengthMismatch {
            what: "schedule horizon",
            expected: cfg.horizon,
            got: schedule.horizon(),
        });
    }
    if demand.len() != cfg.horizon {
        return Err(Error::LengthMismatch {
            what: "demand horizon",
            expected: cfg.horizon,
            got: demand.len(),
        });
    }
    Ok(())
}

/// Per-hour contribution to the exact tie-breaking key; see
/// [`perturbed_cost_key`].
fn hour_key_term(tariff: &Tariff, t: usize) -> i64 {
    tariff.milli(t) * 1_000_000 + t as i64
}

/// cumulative demand before each storage state: `prefix[i]` is the total
/// demand drawn during steps `0..i`.
fn demand_prefix(demand: &DemandProfile, steps: usize) -> Vec<f64> {
    let mut prefix = Vec::with_capacity(steps + 1);
    let mut acc = 0.0;
    prefix.push(acc);
    for t in 0..steps {
        acc += demand.get(t);
        prefix.push(acc);
    }
    prefix
}

/// Finds the cheapest feasible schedule by dynamic programming.
///
/// Because every on-hour adds the same charge, the storage level after
/// step i depends only on i and the number of on-hours so far:
/// `S_i = s0 + cop * p_max * k - prefix_demand[i]`. The program therefore
/// walks states (hour, on-hours) keeping, per state, the minimal
/// (key, code) pair seen so far; both components are sums over decided
/// hours, so the prefix-optimal choice is globally optimal. The key orders
/// schedules by exact cost first and by earlier on-hours among equal
/// costs; any remaining tie is broken by the smaller integer code.
pub fn solve(demand: &DemandProfile, tariff: &Tariff, cfg: &PumpConfig) -> Result<SolveOutcome> {
    check_problem_shape(demand, tariff, cfg)?;
    let h = cfg.horizon;
    let steps = cfg.balance_steps();
    let chp = cfg.charge_per_hour();
    let prefix = demand_prefix(demand, steps);
    let storage = |i: usize, k: usize| cfg.s0 + chp * k as f64 - prefix[i];

    // level[k] = best (key, code) over feasible prefixes of the first t
    // hours that switch on exactly k of them.
    let mut level: Vec<Option<(i64, u32)>> = vec![Some((0, 0))];
    for t in 0..h {
        let constrained = t < steps;
        let mut next: Vec<Option<(i64, u32)>> = vec![None; t + 2];
        let on_term = hour_key_term(tariff, t);
        for k in 0..=t {
            let Some((key, code)) = level[k] else { continue };
            for bit in 0..2usize {
                let k2 = k + bit;
                if constrained && bound_violation(storage(t + 1, k2), cfg).is_some() {
                    continue;
                }
                let cand = if bit == 0 {
                    (key, code)
                } else {
                    (key + on_term, code | 1 << t)
                };
                if next[k2].is_none_or(|best| cand < best) {
                    next[k2] = Some(cand);
                }
            }
        }
        if next.iter().all(Option::is_none) {
            return Ok(SolveOutcome::Infeasible(diagnose_dead_step(
                &level,
                t,
                cfg,
                &storage,
            )));
        }
        level = next;
    }

    let (best_key, best_code) = level
        .into_iter()
        .flatten()
        .min()
        .expect("a non-empty final level was just checked");
    let schedule = Schedule::decode(best_code, h).expect("code built for this horizon");
    let cost = evaluate_cost(&schedule, tariff, cfg)?;
    let (trajectory, verdict) = simulate(&schedule, demand, cfg)?;
    debug_assert_eq!(verdict, Verdict::Feasible);
    debug_assert_eq!(perturbed_cost_key(&schedule, tariff)?, best_key);
    Ok(SolveOutcome::Optimal(SolveResult {
        schedule,
        cost,
        cost_key: best_key,
        trajectory,
    }))
}

/// All schedules die entering storage step t+1: report how.
fn diagnose_dead_step(
    level: &[Option<(i64, u32)>],
    t: usize,
    cfg: &PumpConfig,
    storage: &dyn Fn(usize, usize) -> f64,
) -> InfeasibleReport {
    let mut any_underflow = false;
    for (k, entry) in level.iter().enumerate() {
        if entry.is_none() {
            continue;
        }
        for bit in 0..2usize {
            match bound_violation(storage(t + 1, k + bit), cfg) {
                Some(Violation::Underflow) => any_underflow = true,
                Some(Violation::Overflow) => {}
                None => unreachable!("step was diagnosed dead"),
            }
        }
    }
    InfeasibleReport {
        hour: t + 1,
        violation: if any_underflow {
            Violation::Underflow
        } else {
            Violation::Overflow
        },
    }
}

/// Scans every schedule of the horizon and keeps the best feasible one.
///
/// This is the oracle for [`solve`]: same storage arithmetic, same key,
/// same tie-breaking (codes are visited in increasing order and replaced
/// only on strict improvement), same infeasibility diagnosis. Refuses
/// horizons past [`MAX_EXHAUSTIVE_HORIZON`].
pub fn solve_exhaustive(
    demand: &DemandProfile,
    tariff: &Tariff,
    cfg: &PumpConfig,
) -> Result<SolveOutcome> {
    check_problem_shape(demand, tariff, cfg)?;
    if cfg.horizon > MAX_EXHAUSTIVE_HORIZON {
        return Err(Error::HorizonTooLargeForExhaustive {
            horizon: cfg.horizon,
            max: MAX_EXHAUSTIVE_HORIZON,
        });
    }
    let h = cfg.horizon;
    let steps = cfg.balance_steps();
    let chp = cfg.charge_per_hour();
    let prefix = demand_prefix(demand, steps);
    let terms: Vec<i64> = (0..h).map(|t| hour_key_term(tariff, t)).collect();

    let mut best: Option<(i64, u32)> = None;
    let mut deepest_hour = 0usize;
    let mut deepest_underflows = false;
    for code in 0..(1u64 << h) as u32 {
        // First violation of this schedule, using the same closed-form
        // states as the dynamic program.
        let mut died: Option<(usize, Violation)> = None;
        let mut k = 0usize;
        for t in 0..steps {
            k += (code >> t & 1) as usize;
            if let Some(v) = bound_violation(cfg.s0 + chp * k as f64 - prefix[t + 1], cfg) {
                died = Some((t + 1, v));
                break;
            }
        }
        match died {
            None => {
                let mut key = 0i64;
                let mut m = code;
                while m != 0 {
                    key += terms[m.trailing_zeros() as usize];
                    m &= m - 1;
                }
                if best.is_none_or(|(bk, _)| key < bk) {
                    best = Some((key, code));
                }
            }
            Some((hour, violation)) => {
                if best.is_none() {
                    let under = violation == Violation::Underflow;
                    if hour > deepest_hour {
                        deepest_hour = hour;
                        deepest_underflows = under;
                    } else if hour == deepest_hour {
                        deepest_underflows |= under;
                    }
                }
            }
        }
    }

    match best {
        Some((key, code)) => {
            let schedule = Schedule::decode(code, h).expect("code built for this horizon");
            let cost = evaluate_cost(&schedule, tariff, cfg)?;
            let (trajectory, verdict) = simulate(&schedule, demand, cfg)?;
            debug_assert_eq!(verdict, Verdict::Feasible);
            Ok(SolveOutcome::Optimal(SolveResult {
                schedule,
                cost,
                cost_key: key,
                trajectory,
            }))
        }
        None => Ok(SolveOutcome::Infeasible(InfeasibleReport {
            hour: deepest_hour,
            violation: if deepest_underflows {
                Violation::Underflow
            } else {
                Violation::Overflow
            },
        })),
    }
}

/// Cost of serving the day without any storage: each hour's demand is met
/// directly, drawing `hd_t / cop` kWh of electricity at that hour's price.
pub fn benchmark_cost(demand: &DemandProfile, tariff: &Tariff, cfg: &PumpConfig) -> Result<f64> {
    check_problem_shape(demand, tariff, cfg)?;
    Ok((0..cfg.horizon)
        .map(|t| demand.get(t) / cfg.cop * tariff.unit_price(t))
        .sum())
}

/// One day of a savings study.
#[derive(Debug, Clone)]
pub struct ProfileOutcome {
    pub profile_index: usize,
    pub outcome: SolveOutcome,
    pub benchmark_cost: f64,
    /// Percent saved against the storage-free benchmark. `None` when the
    /// day is infeasible or when the benchmark cost is zero, which leaves
    /// the ratio undefined.
    pub saving_pct: Option<f64>,
}

/// Interpolated quantiles of the per-day percent savings.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SavingQuantiles {
    pub p05: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p95: f64,
}

/// Aggregates of a savings study.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SavingsSummary {
    pub profiles: usize,
    pub feasible: usize,
    pub infeasible: usize,
    /// Feasible days whose benchmark cost is zero; their saving has no
    /// defined percent value and they are excluded from the aggregates.
    pub undefined_saving: usize,
    pub mean_saving_pct: Option<f64>,
    pub quantiles_pct: Option<SavingQuantiles>,
    pub mean_benchmark_cost: f64,
    pub mean_optimal_cost: f64,
}

/// A full savings study over many days.
#[derive(Debug, Clone)]
pub struct SavingsReport {
    pub rows: Vec<ProfileOutcome>,
    pub summary: SavingsSummary,
}

/// Solves every profile and scores it against the storage-free benchmark.
///
/// Days are independent, so they may be solved by any number of worker
/// threads; the rows come back in profile order either way.
pub fn savings_report(
    profiles: &[DemandProfile],
    tariff: &Tariff,
    cfg: &PumpConfig,
) -> Result<SavingsReport> {
    let rows = profiles
        .par_iter()
        .enumerate()
        .map(|(profile_index, demand)| {
            let outcome = solve(demand, tariff, cfg)?;
            let benchmark = benchmark_cost(demand, tariff, cfg)?;
            let saving_pct = outcome.optimal().and_then(|r| {
                (benchmark != 0.0).then(|| 100.0 * (benchmark - r.cost) / benchmark)
            });
            Ok(ProfileOutcome {
                profile_index,
                outcome,
                benchmark_cost: benchmark,
                saving_pct,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let feasible = rows.iter().filter(|r| r.outcome.optimal().is_some()).count();
    let mut savings: Vec<f64> = rows.iter().filter_map(|r| r.saving_pct).collect();
    savings.sort_by(|a, b| a.total_cmp(b));
    let feasible_rows = || rows.iter().filter_map(|r| r.outcome.optimal());
    let summary = SavingsSummary {
        profiles: rows.len(),
        feasible,
        infeasible: rows.len() - feasible,
        undefined_saving: feasible - savings.len(),
        mean_saving_pct: (!savings.is_empty())
            .then(|| savings.iter().sum::<f64>() / savings.len() as f64),
        quantiles_pct: (!savings.is_empty()).then(|| SavingQuantiles {
            p05: quantile(&savings, 0.05),
            p25: quantile(&savings, 0.25),
            p50: quantile(&savings, 0.50),
            p75: quantile(&savings, 0.75),
            p95: quantile(&savings, 0.95),
        }),
        mean_benchmark_cost: mean(rows.iter().map(|r| r.benchmark_cost)),
        mean_optimal_cost: mean(feasible_rows().map(|r| r.cost)),
    };
    Ok(SavingsReport { rows, summary })
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Linearly interpolated quantile of an ascending slice.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TerminalMode;
    use rand::Rng;

    fn four_hour_cfg(mode: TerminalMode) -> PumpConfig {
        PumpConfig {
            horizon: 4,
            terminal_mode: mode,
            ..PumpConfig::default()
        }
    }

    fn flat_demand(v: f64, h: usize) -> DemandProfile {
        DemandProfile::new(vec![v; h]).unwrap()
    }

    #[test]
    fn simulate_walks_the_worked_example() {
        let cfg = four_hour_cfg(TerminalMode::Closed);
        let demand = flat_demand(50.0, 4);
        let schedule = Schedule::new(vec![false, true, false, false]).unwrap();
        let (traj, verdict) = simulate(&schedule, &demand, &cfg).unwrap();
        assert_eq!(traj.states, vec![100.0, 50.0, 160.0, 110.0, 60.0]);
        assert_eq!(verdict, Verdict::Feasible);

        // Leaving the day open drops the final balance step.
        let cfg = four_hour_cfg(TerminalMode::Open);
        let (traj, verdict) = simulate(&schedule, &demand, &cfg).unwrap();
        assert_eq!(traj.states, vec![100.0, 50.0, 160.0, 110.0]);
        assert_eq!(verdict, Verdict::Feasible);
    }

    #[test]
    fn simulate_flags_the_first_overflow() {
        let cfg = four_hour_cfg(TerminalMode::Closed);
        let demand = DemandProfile::new(vec![0.0, 50.0, 50.0, 50.0]).unwrap();
        let all_on = Schedule::new(vec![true; 4]).unwrap();
        let (traj, verdict) = simulate(&all_on, &demand, &cfg).unwrap();
        assert_eq!(
            verdict,
            Verdict::Violated { hour: 1, violation: Violation::Overflow }
        );
        // The trajectory is still reported in full.
        assert_eq!(traj.states.len(), 5);
        assert_eq!(traj.states[1], 260.0);
    }

    #[test]
    fn solve_picks_the_cheap_hour_in_the_worked_example() {
        for mode in [TerminalMode::Open, TerminalMode::Closed] {
            let cfg = four_hour_cfg(mode);
            let tariff = Tariff::from_milli(vec![1, 1, 2, 2]).unwrap();
            let demand = flat_demand(50.0, 4);
            let outcome = solve(&demand, &tariff, &cfg).unwrap();
            let result = outcome.optimal().expect("feasible");
            // Hour 0 is cheapest but charging then overflows the store, so
            // the single on-hour moves to hour 1.
            assert_eq!(result.schedule.to_bit_string(), "0100");
            assert_eq!(result.cost, 0.1);
        }
    }

    #[test]
    fn zero_demand_day_stays_off() {
        let cfg = PumpConfig::default();
        let tariff = Tariff::default();
        let demand = flat_demand(0.0, 24);
        let outcome = solve(&demand, &tariff, &cfg).unwrap();
        let result = outcome.optimal().expect("feasible");
        assert_eq!(result.schedule.encode(), 0);
        assert_eq!(result.cost, 0.0);
        assert_eq!(result.cost_key, 0);
    }

    #[test]
    fn oversized_first_demand_is_diagnosed_as_early_underflow() {
        for mode in [TerminalMode::Open, TerminalMode::Closed] {
            let cfg = four_hour_cfg(mode);
            let tariff = Tariff::from_milli(vec![1, 1, 2, 2]).unwrap();
            let demand = DemandProfile::new(vec![300.0, 50.0, 50.0, 50.0]).unwrap();
            for outcome in [
                solve(&demand, &tariff, &cfg).unwrap(),
                solve_exhaustive(&demand, &tariff, &cfg).unwrap(),
            ] {
                match outcome {
                    SolveOutcome::Infeasible(report) => {
                        assert_eq!(report.hour, 1);
                        assert_eq!(report.violation, Violation::Underflow);
                    }
                    SolveOutcome::Optimal(_) => panic!("expected infeasible"),
                }
            }
        }
    }

    #[test]
    fn exhaustive_refuses_long_horizons() {
        let cfg = PumpConfig {
            horizon: 21,
            ..PumpConfig::default()
        };
        let tariff = Tariff::from_milli(vec![1000; 21]).unwrap();
        let demand = flat_demand(10.0, 21);
        assert!(matches!(
            solve_exhaustive(&demand, &tariff, &cfg),
            Err(Error::HorizonTooLargeForExhaustive { horizon: 21, max: 20 })
        ));
    }

    /// Random problem mixing feasible and infeasible days.
    fn random_instance(rng: &mut impl Rng, horizon: usize, mode: TerminalMode)
        -> (DemandProfile, Tariff, PumpConfig) {
        let cfg = PumpConfig {
            horizon,
            terminal_mode: mode,
            s0: rng.random_range(0.0..=200.0),
            ..PumpConfig::default()
        };
        let milli: Vec<i64> = (0..horizon)
            .map(|_| 100 * rng.random_range(5..=20i64))
            .collect();
        let tariff = Tariff::from_milli(milli).unwrap();
        let hd: Vec<f64> = (0..horizon)
            .map(|_| {
                if rng.random_bool(0.1) {
                    rng.random_range(150.0..400.0)
                } else {
                    rng.random_range(0.0..120.0)
                }
            })
            .collect();
        (DemandProfile::new(hd).unwrap(), tariff, cfg)
    }

    #[test]
    fn dynamic_program_matches_the_exhaustive_oracle() {
        let mut rng = crate::rng::stream(2024, 0);
        let mut optimal = 0usize;
        let mut infeasible = 0usize;
        for round in 0..300 {
            let horizon = [4, 8, 12][round % 3];
            let mode = if round % 2 == 0 { TerminalMode::Open } else { TerminalMode::Closed };
            let (demand, tariff, cfg) = random_instance(&mut rng, horizon, mode);
            let fast = solve(&demand, &tariff, &cfg).unwrap();
            let oracle = solve_exhaustive(&demand, &tariff, &cfg).unwrap();
            match (fast, oracle) {
                (SolveOutcome::Optimal(a), SolveOutcome::Optimal(b)) => {
                    assert_eq!(a.schedule, b.schedule);
                    assert_eq!(a.cost_key, b.cost_key);
                    assert_eq!(a.cost, b.cost);
                    assert_eq!(a.trajectory, b.trajectory);
                    optimal += 1;
                }
                (SolveOutcome::Infeasible(a), SolveOutcome::Infeasible(b)) => {
                    assert_eq!(a, b);
                    infeasible += 1;
                }
                (a, b) => panic!("solvers disagree on feasibility: {a:?} vs {b:?}"),
            }
        }
        assert!(optimal > 50, "too few feasible instances: {optimal}");
        assert!(infeasible > 10, "too few infeasible instances: {infeasible}");
    }

    #[test]
    fn equal_cost_ties_prefer_early_hours_then_small_codes() {
        let mut rng = crate::rng::stream(77, 0);
        let mut checked_ties = 0usize;
        for _ in 0..200 {
            let horizon = 8;
            let cfg = PumpConfig {
                horizon,
                terminal_mode: TerminalMode::Closed,
                s0: rng.random_range(50.0..=150.0),
                ..PumpConfig::default()
            };
            // A flat tariff makes every same-sized schedule equally cheap.
            let tariff = Tariff::from_milli(vec![1000; horizon]).unwrap();
            let hd: Vec<f64> = (0..horizon).map(|_| rng.random_range(0.0..120.0)).collect();
            let demand = DemandProfile::new(hd).unwrap();
            let Some(result) = solve(&demand, &tariff, &cfg).unwrap().optimal().cloned() else {
                continue;
            };
            // Enumerate the feasible schedules with the same exact cost.
            let mut tied: Vec<(usize, u32)> = Vec::new();
            for code in 0..1u32 << horizon {
                let s = Schedule::decode(code, horizon).unwrap();
                let (_, verdict) = simulate(&s, &demand, &cfg).unwrap();
                if verdict == Verdict::Feasible
                    && evaluate_cost(&s, &tariff, &cfg).unwrap() == result.cost
                {
                    let index_sum = (0..horizon).filter(|&t| s.bit(t)).sum::<usize>();
                    tied.push((index_sum, code));
                }
            }
            if tied.len() > 1 {
                checked_ties += 1;
            }
            let &(min_index_sum, _) = tied.iter().min().unwrap();
            let winner = tied
                .iter()
                .filter(|&&(ix, _)| ix == min_index_sum)
                .map(|&(_, code)| code)
                .min()
                .unwrap();
            assert_eq!(result.schedule.encode(), winner);
        }
        assert!(checked_ties > 20, "tie-break law barely exercised: {checked_ties}");
    }

    #[test]
    fn scaling_all_prices_keeps_the_schedule() {
        let mut rng = crate::rng::stream(31, 0);
        for _ in 0..50 {
            let (demand, tariff, cfg) = random_instance(&mut rng, 12, TerminalMode::Closed);
            let scaled =
                Tariff::from_milli(tariff.as_milli().iter().map(|&m| m * 3).collect()).unwrap();
            let a = solve(&demand, &tariff, &cfg).unwrap();
            let b = solve(&demand, &scaled, &cfg).unwrap();
            match (a, b) {
                (SolveOutcome::Optimal(a), SolveOutcome::Optimal(b)) => {
                    assert_eq!(a.schedule, b.schedule);
                    let rel = (b.cost - 3.0 * a.cost).abs() / b.cost.max(1e-12);
                    assert!(rel < 1e-12, "cost did not scale: {} vs {}", a.cost, b.cost);
                }
                (SolveOutcome::Infeasible(a), SolveOutcome::Infeasible(b)) => assert_eq!(a, b),
                (a, b) => panic!("feasibility changed under scaling: {a:?} vs {b:?}"),
            }
        }
    }

    #[test]
    fn optimum_beats_randomly_sampled_feasible_schedules() {
        let mut rng = crate::rng::stream(8, 0);
        let cfg = PumpConfig::default();
        let tariff = Tariff::default();
        for _ in 0..10 {
            let hd: Vec<f64> = (0..24).map(|_| rng.random_range(0.0..60.0)).collect();
            let demand = DemandProfile::new(hd).unwrap();
            let Some(best) = solve(&demand, &tariff, &cfg).unwrap().optimal().cloned() else {
                continue;
            };
            for _ in 0..300 {
                let code: u32 = rng.random_range(0..1 << 24);
                let s = Schedule::decode(code, 24).unwrap();
                let (_, verdict) = simulate(&s, &demand, &cfg).unwrap();
                if verdict == Verdict::Feasible {
                    let cost = evaluate_cost(&s, &tariff, &cfg).unwrap();
                    assert!(cost >= best.cost - 1e-9);
                }
            }
        }
    }

    #[test]
    fn benchmark_cost_follows_demand() {
        let cfg = PumpConfig::default();
        let tariff = Tariff::default();
        assert_eq!(benchmark_cost(&flat_demand(0.0, 24), &tariff, &cfg).unwrap(), 0.0);

        // 16 kWh of heat at a low-tariff hour costs 16 / 1.6 * 1.0 = 10.
        let mut hd = vec![0.0; 24];
        hd[3] = 16.0;
        let demand = DemandProfile::new(hd).unwrap();
        let cost = benchmark_cost(&demand, &tariff, &cfg).unwrap();
        assert!((cost - 10.0).abs() < 1e-9, "got {cost}");

        // Constant demand splits over both tariff bands.
        let cost = benchmark_cost(&flat_demand(10.0, 24), &tariff, &cfg).unwrap();
        let expected = 10.0 / 1.6 * (8.0 * 1.0 + 16.0 * 1.5);
        assert!((cost - expected).abs() < 1e-9);
    }

    #[test]
    fn storage_cannot_beat_the_band_ratio_without_initial_stock() {
        // Starting empty, the best the store can do is shift every kWh from
        // the high band to the low band: saving 1 - 1/1.5 = 33.33 percent.
        let cfg = PumpConfig {
            s0: 0.0,
            s_max: 400.0,
            terminal_mode: TerminalMode::Closed,
            ..PumpConfig::default()
        };
        let tariff = Tariff::default();
        let mut hd = vec![0.0; 24];
        hd[12] = 160.0;
        hd[13] = 160.0;
        let demand = DemandProfile::new(hd).unwrap();
        let report = savings_report(&[demand], &tariff, &cfg).unwrap();
        let saving = report.rows[0].saving_pct.unwrap();
        assert!((saving - 100.0 / 3.0).abs() < 1e-9, "got {saving}");
    }

    #[test]
    fn savings_report_marks_undefined_and_infeasible_days() {
        let cfg = PumpConfig::default();
        let tariff = Tariff::default();
        let zero = flat_demand(0.0, 24);
        let mut hd = vec![20.0; 24];
        hd[0] = 500.0;
        let impossible = DemandProfile::new(hd).unwrap();
        let normal = flat_demand(30.0, 24);
        let report = savings_report(&[zero, impossible, normal.clone()], &tariff, &cfg).unwrap();

        assert_eq!(report.summary.profiles, 3);
        assert_eq!(report.summary.feasible, 2);
        assert_eq!(report.summary.infeasible, 1);
        assert_eq!(report.summary.undefined_saving, 1);
        assert!(report.rows[0].saving_pct.is_none(), "zero benchmark is undefined");
        assert!(report.rows[1].saving_pct.is_none(), "infeasible day has no saving");
        let saving = report.rows[2].saving_pct.unwrap();
        assert!(saving > 0.0);
        assert_eq!(report.summary.mean_saving_pct, Some(saving));

        // Order of profiles does not change per-profile values.
        let report2 = savings_report(&[normal], &tariff, &cfg).unwrap();
        assert_eq!(report2.rows[0].saving_pct, Some(saving));
    }

    #[test]
    fn quantiles_interpolate_linearly() {
        let v = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.0);
        assert_eq!(quantile(&v, 0.25), 1.0);
        assert_eq!(quantile(&v, 0.0), 0.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert_eq!(quantile(&[5.0], 0.9), 5.0);
        assert!((quantile(&[0.0, 1.0], 0.75) - 0.75).abs() < 1e-12);
    }
}
