//! Subcommand implementations. Each writes its artifacts into an output
//! directory and prints a short summary; artifact bytes depend only on
//! the inputs, the configuration, and the seed.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use heatsched::demand::{fit_lognormal, ingest_history, read_history_csv, sample_profiles};
use heatsched::model::{DemandProfile, Schedule};
use heatsched::optimizer::{savings_report, simulate, solve, SolveOutcome};
use heatsched::predict::{select_hyperparams, LabeledDataset};
use heatsched::space::{fraction_curve, report_from_histogram, MultiplicityHistogram};
use heatsched::{Error, Result};

use crate::config::ExperimentConfig;

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(file, value)?;
    Ok(())
}

/// Ingest a metering history CSV into demand statistics.
pub fn cmd_stats(history: &Path, out: &Path) -> Result<()> {
    let readings = read_history_csv(File::open(history)?)?;
    let report = ingest_history(&readings)?;
    fs::create_dir_all(out)?;

    write_json(&out.join("stats.json"), &report.stats)?;

    let mut rejects = csv::Writer::from_path(out.join("rejects.csv"))?;
    rejects.write_record(["date", "present_hours"])?;
    for day in &report.rejected_days {
        rejects.write_record([day.date.to_string(), day.present_hours.to_string()])?;
    }
    rejects.flush()?;

    let lo = report.stats.mean.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = report.stats.mean.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    println!(
        "ingested {} readings: {} complete days, {} rejected",
        readings.len(),
        report.complete_days,
        report.rejected_days.len()
    );
    println!("hourly means {lo:.2}..{hi:.2} kWh -> {}", out.join("stats.json").display());
    Ok(())
}

/// Sample demand days, solve them all, and analyse costs and the
/// structure of the optimal schedules.
pub fn cmd_pipeline(config: &ExperimentConfig, out: &Path) -> Result<()> {
    let started = Instant::now();
    fs::create_dir_all(out)?;
    let stats = config.stats.load()?;
    let horizon = stats.dim();
    let tariff = config.tariff.build(horizon)?;
    let pump = config.pump.build(horizon)?;
    let model = fit_lognormal(&stats)?;

    let profiles = sample_profiles(&model, config.samples, config.seed)?;
    let report = savings_report(&profiles, &tariff, &pump)?;

    config.echo_into(out)?;
    write_json(&out.join("stats_used.json"), &stats)?;

    let mut profile_csv = csv::Writer::from_path(out.join("profiles.csv"))?;
    let mut header = vec!["profile_index".to_string()];
    header.extend((0..horizon).map(|h| format!("h{h}")));
    profile_csv.write_record(&header)?;
    for (i, p) in profiles.iter().enumerate() {
        let mut record = vec![i.to_string()];
        record.extend(p.as_slice().iter().map(|v| format!("{v}")));
        profile_csv.write_record(&record)?;
    }
    profile_csv.flush()?;

    let mut sched_csv = csv::Writer::from_path(out.join("schedules.csv"))?;
    sched_csv.write_record([
        "profile_index",
        "schedule_bits",
        "schedule_code",
        "cost",
        "benchmark_cost",
        "saving_pct",
        "feasible",
    ])?;
    let mut infeasible: Vec<(usize, usize, String)> = Vec::new();
    let mut schedules: Vec<Schedule> = Vec::new();
    for row in &report.rows {
        match &row.outcome {
            SolveOutcome::Optimal(res) => {
                sched_csv.write_record([
                    row.profile_index.to_string(),
                    res.schedule.to_bit_string(),
                    res.schedule.encode().to_string(),
                    format!("{}", res.cost),
                    format!("{}", row.benchmark_cost),
                    row.saving_pct.map(|s| format!("{s}")).unwrap_or_default(),
                    "true".to_string(),
                ])?;
                schedules.push(res.schedule.clone());
            }
            SolveOutcome::Infeasible(diag) => {
                sched_csv.write_record([
                    row.profile_index.to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    format!("{}", row.benchmark_cost),
                    String::new(),
                    "false".to_string(),
                ])?;
                infeasible.push((row.profile_index, diag.hour, diag.violation.to_string()));
            }
        }
    }
    sched_csv.flush()?;

    if !infeasible.is_empty() {
        let mut inf_csv = csv::Writer::from_path(out.join("infeasible.csv"))?;
        inf_csv.write_record(["profile_index", "hour", "violation"])?;
        for (idx, hour, violation) in &infeasible {
            inf_csv.write_record([idx.to_string(), hour.to_string(), violation.clone()])?;
        }
        inf_csv.flush()?;
    }

    let summary = &report.summary;
    let mut savings_csv = csv::Writer::from_path(out.join("savings.csv"))?;
    savings_csv.write_record([
        "profiles",
        "feasible",
        "infeasible",
        "undefined_saving",
        "mean_saving_pct",
        "p05",
        "p25",
        "p50",
        "p75",
        "p95",
        "mean_benchmark_cost",
        "mean_optimal_cost",
    ])?;
    let opt_str = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
    savings_csv.write_record([
        summary.profiles.to_string(),
        summary.feasible.to_string(),
        summary.infeasible.to_string(),
        summary.undefined_saving.to_string(),
        opt_str(summary.mean_saving_pct),
        opt_str(summary.quantiles_pct.map(|q| q.p05)),
        opt_str(summary.quantiles_pct.map(|q| q.p25)),
        opt_str(summary.quantiles_pct.map(|q| q.p50)),
        opt_str(summary.quantiles_pct.map(|q| q.p75)),
        opt_str(summary.quantiles_pct.map(|q| q.p95)),
        format!("{}", summary.mean_benchmark_cost),
        format!("{}", summary.mean_optimal_cost),
    ])?;
    savings_csv.flush()?;

    println!(
        "pipeline: {} days solved in {:.1?} ({} feasible, {} infeasible)",
        summary.profiles,
        started.elapsed(),
        summary.feasible,
        summary.infeasible
    );
    match summary.mean_saving_pct {
        Some(pct) => println!("mean saving vs demand-following: {pct:.2}%"),
        None => println!("mean saving undefined (no feasible day with nonzero benchmark)"),
    }

    if schedules.is_empty() {
        println!("no feasible schedules; skipping solution-space report");
        return Ok(());
    }
    let hist = MultiplicityHistogram::from_schedules(&schedules)?;
    let space = report_from_histogram(&hist);
    write_json(&out.join("space_report.json"), &space)?;

    let mut curve_csv = csv::Writer::from_path(out.join("space_curve.csv"))?;
    curve_csv.write_record([
        "k",
        "empirical_fraction_at_most_k",
        "baseline_fraction_at_most_k",
    ])?;
    for point in fraction_curve(&hist) {
        curve_csv.write_record([
            point.k.to_string(),
            format!("{}", point.empirical_fraction_at_most_k),
            format!("{}", point.baseline_fraction_at_most_k),
        ])?;
    }
    curve_csv.flush()?;

    println!(
        "solution space: {} distinct schedules, max multiplicity {}",
        space.distinct, space.max_multiplicity
    );
    match (space.lambda_hat, space.m_hat) {
        (Some(l), Some(m)) => println!("effective size m_hat = {m:.0} (lambda_hat = {l:.3})"),
        _ => {
            if let Some(lb) = space.m_hat_lower_bound {
                println!("no collisions observed; effective size > {lb:.0}");
            }
        }
    }
    println!("artifacts -> {}", out.display());
    Ok(())
}

#[derive(Debug, Deserialize)]
struct ScheduleRow {
    profile_index: usize,
    schedule_bits: String,
    #[allow(dead_code)]
    schedule_code: String,
    #[allow(dead_code)]
    cost: String,
    #[allow(dead_code)]
    benchmark_cost: String,
    #[allow(dead_code)]
    saving_pct: String,
    feasible: bool,
}

/// Loads the (demand profile, optimal schedule) pairs of every feasible
/// day a pipeline run produced.
pub fn load_pipeline_dataset(pipeline_dir: &Path) -> Result<LabeledDataset> {
    let mut profiles: Vec<Vec<f64>> = Vec::new();
    let mut reader = csv::Reader::from_path(pipeline_dir.join("profiles.csv"))?;
    for record in reader.records() {
        let record = record?;
        let mut iter = record.iter();
        let idx: usize = iter
            .next()
            .ok_or(Error::InvalidDataset("empty profiles.csv record".into()))?
            .parse()
            .map_err(|e| Error::InvalidDataset(format!("bad profile_index: {e}")))?;
        if idx != profiles.len() {
            return Err(Error::InvalidDataset(format!(
                "profiles.csv rows must be consecutive; saw index {idx} at row {}",
                profiles.len()
            )));
        }
        let row: Vec<f64> = iter
            .map(|v| {
                v.parse()
                    .map_err(|e| Error::InvalidDataset(format!("bad demand value: {e}")))
            })
            .collect::<Result<_>>()?;
        profiles.push(row);
    }

    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    let mut reader = csv::Reader::from_path(pipeline_dir.join("schedules.csv"))?;
    for row in reader.deserialize() {
        let row: ScheduleRow = row?;
        if !row.feasible {
            continue;
        }
        let input = profiles
            .get(row.profile_index)
            .ok_or(Error::InvalidDataset(format!(
                "schedules.csv references profile {} beyond profiles.csv",
                row.profile_index
            )))?
            .clone();
        inputs.push(input);
        targets.push(Schedule::from_bit_string(&row.schedule_bits)?);
    }
    LabeledDataset::new(inputs, targets)
}

/// Train and compare schedule predictors on a pipeline run's outputs.
pub fn cmd_predict(pipeline_dir: &Path, config: &ExperimentConfig, out: &Path) -> Result<()> {
    let started = Instant::now();
    let ds = load_pipeline_dataset(pipeline_dir)?;
    fs::create_dir_all(out)?;
    config.echo_into(out)?;

    let report = select_hyperparams(&ds, &config.predict.grid, config.seed)?;

    let mut board = csv::Writer::from_path(out.join("leaderboard.csv"))?;
    board.write_record(["kind", "hyperparams", "val_hamming", "test_hamming"])?;
    for row in &report.rows {
        board.write_record([
            row.kind.to_string(),
            row.params.clone(),
            format!("{}", row.val_hamming),
            row.test_hamming.map(|t| format!("{t}")).unwrap_or_default(),
        ])?;
    }
    board.flush()?;

    for winner in &report.selected {
        let name = format!("model_{}.json", winner.model.kind());
        write_json(&out.join(name), winner)?;
    }

    println!(
        "predict: {} feasible days, split {}/{}/{} train/val/test, {:.1?}",
        ds.len(),
        report.train_size,
        report.val_size,
        report.test_size,
        started.elapsed()
    );
    println!("test Hamming error per family (lower is better):");
    for winner in &report.selected {
        println!(
            "  {:<8} {:>6.3} hours  ({})",
            winner.model.kind().to_string(),
            winner.test_hamming,
            winner.params
        );
    }
    println!("artifacts -> {}", out.display());
    Ok(())
}

#[derive(Debug, Deserialize)]
struct DemandInput {
    hd: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct SolutionDoc {
    feasible: bool,
    schedule_bits: Option<String>,
    schedule_code: Option<u32>,
    cost: Option<f64>,
    benchmark_cost: f64,
    saving_pct: Option<f64>,
    storage_trajectory: Option<Vec<f64>>,
    infeasible_hour: Option<usize>,
    infeasible_violation: Option<String>,
}

/// Solve a single day given as `{ "hd": [kWh per hour] }`.
///
/// Returns the process exit code: 0 when a schedule exists, 3 when the
/// day is infeasible.
pub fn cmd_solve(demand_path: &Path, config: &ExperimentConfig, out: Option<&Path>) -> Result<i32> {
    let input: DemandInput = serde_json::from_reader(File::open(demand_path)?)?;
    let demand = DemandProfile::new(input.hd)?;
    let tariff = config.tariff.build(demand.len())?;
    let pump = config.pump.build(demand.len())?;
    let benchmark = heatsched::optimizer::benchmark_cost(&demand, &tariff, &pump)?;

    let (doc, code) = match solve(&demand, &tariff, &pump)? {
        SolveOutcome::Optimal(res) => {
            let saving =
                (benchmark != 0.0).then(|| 100.0 * (benchmark - res.cost) / benchmark);
            let (traj, _) = simulate(&res.schedule, &demand, &pump)?;
            println!("optimal schedule  {}", res.schedule.to_bit_string());
            println!("on hours          {:?}", on_hours(&res.schedule));
            println!("cost              {:.3}", res.cost);
            println!("benchmark cost    {:.3} (demand-following, no storage)", benchmark);
            match saving {
                Some(pct) => println!("saving            {pct:.2}%"),
                None => println!("saving            undefined (benchmark cost is zero)"),
            }
            println!(
                "storage range     {:.1}..{:.1} kWh over {} tracked states",
                traj.min(),
                traj.max(),
                traj.states.len()
            );
            let doc = SolutionDoc {
                feasible: true,
                schedule_bits: Some(res.schedule.to_bit_string()),
                schedule_code: Some(res.schedule.encode()),
                cost: Some(res.cost),
                benchmark_cost: benchmark,
                saving_pct: saving,
                storage_trajectory: Some(traj.states),
                infeasible_hour: None,
                infeasible_violation: None,
            };
            (doc, 0)
        }
        SolveOutcome::Infeasible(diag) => {
            println!("no feasible schedule exists for this day");
            println!(
                "every schedule violates the storage bounds by hour {} ({})",
                diag.hour, diag.violation
            );
            let doc = SolutionDoc {
                feasible: false,
                schedule_bits: None,
                schedule_code: None,
                cost: None,
                benchmark_cost: benchmark,
                saving_pct: None,
                storage_trajectory: None,
                infeasible_hour: Some(diag.hour),
                infeasible_violation: Some(diag.violation.to_string()),
            };
            (doc, 3)
        }
    };

    if let Some(out) = out {
        fs::create_dir_all(out)?;
        write_json(&out.join("solution.json"), &doc)?;
        config.echo_into(out)?;
        println!("artifacts -> {}", out.display());
    }
    Ok(code)
}

fn on_hours(schedule: &Schedule) -> Vec<usize> {
    (0..schedule.horizon()).filter(|&t| schedule.bit(t)).collect()
}
