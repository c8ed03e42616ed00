use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{ArrivalChoice, ExperimentConfig, PolicyChoice};
use super::stats::{freedman_diaconis, Histogram, PathRecord, PerformanceStats, Summary};
use crate::ensemble::simulate_totals;
use crate::error::{Error, Result};
use crate::mpp::{sample_events, ArrivalKind};
use crate::pide::{solve_pinned_surface, solve_poisson_surface, Penalties};
use crate::policy::{evaluate_path, DiscretionPolicy, PathLedger};

pub const RESULTS_SCHEMA_VERSION: u32 = 1;

/// Marker written in place of undefined ratios.
pub const MISSING: &str = "NA";

/// Optimal policy for `penalties` under the configured arrival model.
///
/// With `gamma = 0` the optimum is the flat discretion `alpha`, so no
/// surface is solved.
pub fn optimal_policy(config: &ExperimentConfig, penalties: Penalties) -> Result<DiscretionPolicy> {
    if penalties.gamma == 0.0 {
        return Ok(DiscretionPolicy::Fixed(penalties.alpha));
    }
    let model = config.arrival_model()?;
    let marks = config.mark_distribution()?;
    let options = config.solver_options();
    match model.kind {
        ArrivalKind::Poisson { rate } => Ok(DiscretionPolicy::poisson(solve_poisson_surface(
            rate,
            penalties,
            model.horizon,
            &marks,
            options,
        )?)),
        ArrivalKind::Pinned { target, epsilon } => Ok(DiscretionPolicy::pinned(solve_pinned_surface(
            target,
            epsilon,
            penalties,
            model.horizon,
            &marks,
            options,
        )?)),
    }
}

/// Policy named by the `[policy]` section.
pub fn configured_policy(config: &ExperimentConfig) -> Result<DiscretionPolicy> {
    match config.policy {
        PolicyChoice::Fixed { delta } => crate::policy::fixed_policy(delta),
        PolicyChoice::Optimal => optimal_policy(config, config.penalties()?),
    }
}

/// Simulates `simulation.paths` paths of the configured policy.
pub fn simulate(config: &ExperimentConfig, policy: &DiscretionPolicy) -> Result<PerformanceStats> {
    config.validate()?;
    let model = config.arrival_model()?;
    let marks = config.mark_distribution()?;
    let s = &config.simulation;
    let totals = simulate_totals(policy, &model, &marks, s.paths, s.seed)?;
    PerformanceStats::from_totals(&totals, s.risk_fraction)
}

/// Event-by-event ledgers of the first `simulation.sample_paths` paths.
pub fn sample_ledgers(config: &ExperimentConfig, policy: &DiscretionPolicy) -> Result<Vec<PathLedger>> {
    let model = config.arrival_model()?;
    let marks = config.mark_distribution()?;
    let s = &config.simulation;
    (0..s.sample_paths.min(s.paths) as u64)
        .map(|id| evaluate_path(policy, &sample_events(&model, &marks, s.seed, id)?, model.horizon))
        .collect()
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub stats: PerformanceStats,
    pub files: Vec<PathBuf>,
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    schema_version: u32,
    arrivals: &'a str,
    seed: u64,
    config: &'a ExperimentConfig,
    summary: &'a Summary,
}

pub(crate) fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| MISSING.to_string(), |v| v.to_string())
}

pub(crate) fn create_file(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn write_path_records<W: Write>(records: &[PathRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["path_id", "N_T", "D_T", "C_T", "miss_ratio", "cost_per_fill"])?;
    for r in records {
        w.write_record([
            r.path_id.to_string(),
            r.attempts.to_string(),
            r.misses.to_string(),
            r.cost.to_string(),
            fmt_opt(r.miss_ratio()),
            fmt_opt(r.cost_per_fill()),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<paths csv>", e))?;
    Ok(())
}

/// Reads a per-path CSV back into records.
pub fn read_path_records(path: &Path) -> Result<Vec<PathRecord>> {
    let mut reader = csv::Reader::from_path(path)?;
    let bad = |what: &str, v: &str| Error::Contract(format!("{}: bad {what} `{v}`", path.display()));
    reader
        .records()
        .map(|rec| {
            let rec = rec?;
            Ok(PathRecord {
                path_id: rec[0].parse().map_err(|_| bad("path_id", &rec[0]))?,
                attempts: rec[1].parse().map_err(|_| bad("N_T", &rec[1]))?,
                misses: rec[2].parse().map_err(|_| bad("D_T", &rec[2]))?,
                cost: rec[3].parse().map_err(|_| bad("C_T", &rec[3]))?,
            })
        })
        .collect()
}

pub fn write_histogram<W: Write>(hist: &Histogram, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["bin_lo", "bin_hi", "count"])?;
    for (k, c) in hist.counts.iter().enumerate() {
        w.write_record([
            hist.edges[k].to_string(),
            hist.edges[k + 1].to_string(),
            c.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<histogram csv>", e))?;
    Ok(())
}

/// `t,delta,D,C,N`: the initial state, then the state after each event with
/// the discretion that event's order was sent with.
pub fn write_sample_path<W: Write>(
    ledger: &PathLedger,
    policy: &DiscretionPolicy,
    out: W,
) -> Result<()> {
    use crate::policy::Discretion;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "delta", "D", "C", "N"])?;
    let start = policy.discretion(0.0, 0, 0)?.value;
    w.write_record(["0".to_string(), start.to_string(), "0".into(), "0".into(), "0".into()])?;
    for p in ledger.series() {
        w.write_record([
            p.time.to_string(),
            p.delta.to_string(),
            p.misses.to_string(),
            p.cost.to_string(),
            p.attempts.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<sample path csv>", e))?;
    Ok(())
}

fn arrivals_label(config: &ExperimentConfig) -> &'static str {
    match config.arrivals.model {
        ArrivalChoice::Poisson => "poisson",
        ArrivalChoice::Pinned => "pinned",
    }
}

/// Solves the configured policy, simulates it and writes
///
/// * `paths.csv`: `path_id,N_T,D_T,C_T,miss_ratio,cost_per_fill`
/// * `summary.json`: config plus ensemble summary
/// * `hist_cost.csv`, `hist_cost_per_fill.csv`, `hist_misses.csv`, `hist_miss_ratio.csv`
/// * `sample_path_<id>.csv`: `t,delta,D,C,N` for the first few paths
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let policy = configured_policy(config)?;
    let stats = simulate(config, &policy)?;
    let dir = &config.output.dir;
    ensure_dir(dir)?;
    let mut files = Vec::new();

    let path = dir.join("paths.csv");
    write_path_records(&stats.records, create_file(&path)?)?;
    files.push(path);

    let path = dir.join("summary.json");
    let body = SummaryFile {
        schema_version: RESULTS_SCHEMA_VERSION,
        arrivals: arrivals_label(config),
        seed: config.simulation.seed,
        config,
        summary: &stats.summary,
    };
    let json = serde_json::to_string_pretty(&body)? + "\n";
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    files.push(path);

    let r = &stats.records;
    let histograms: [(&str, Vec<f64>); 4] = [
        ("hist_cost.csv", r.iter().map(|x| x.cost).collect()),
        ("hist_cost_per_fill.csv", r.iter().filter_map(PathRecord::cost_per_fill).collect()),
        ("hist_misses.csv", r.iter().map(|x| x.misses as f64).collect()),
        ("hist_miss_ratio.csv", r.iter().filter_map(PathRecord::miss_ratio).collect()),
    ];
    for (name, values) in histograms {
        let path = dir.join(name);
        write_histogram(&freedman_diaconis(&values), create_file(&path)?)?;
        files.push(path);
    }

    for (id, ledger) in sample_ledgers(config, &policy)?.iter().enumerate() {
        let path = dir.join(format!("sample_path_{id}.csv"));
        write_sample_path(ledger, &policy, create_file(&path)?)?;
        files.push(path);
    }

    Ok(RunOutput { stats, files })
}

/// Reads back a `summary.json` written by [`run_experiment`].
pub fn read_summary(path: &Path) -> Result<Summary> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    Ok(serde_json::from_value(value["summary"].clone())?)
}
