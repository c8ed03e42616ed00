//! `walkbook`: solve discretion surfaces, simulate trading, run sweeps and checks.
//!
//! Exit codes: 0 on success, 1 on validation, config or I/O errors, 2 when a
//! numerical method fails (stability limit, bracketing, non-convergence).

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use walkbook::criterion::{curvature_fd, gateaux_fd, one_sided_fd, Direction, FdSetup};
use walkbook::experiment::{
    compare_fixed_vs_adaptive, optimal_policy, run_experiment, sweep_from_config, sweep_parameters,
    ArrivalChoice, CompareSpec, ExperimentConfig, PolicyChoice, SweepAxis,
};
use walkbook::fbsde::{contraction_margin, picard_iterate_tree, solve_tree_backward, ScenarioTree};
use walkbook::mpp::ArrivalKind;
use walkbook::pide::{save_surface, save_surface3, solve_pinned_surface, solve_poisson_surface};
use walkbook::Error;

#[derive(Parser, Debug)]
#[command(name = "walkbook", version, about = "Latency-optimal discretion for marketable limit orders")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the discretion surface and write it as CSV plus a JSON header.
    Solve(Common),
    /// Simulate the configured policy and write per-path, summary, histogram and sample-path files.
    Simulate(Common),
    /// Sweep gamma or alpha with common random numbers across grid points.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated gamma grid (overrides the config lists).
        #[arg(long, value_delimiter = ',', conflicts_with = "alphas")]
        gammas: Option<Vec<f64>>,
        /// Comma-separated alpha grid.
        #[arg(long, value_delimiter = ',')]
        alphas: Option<Vec<f64>>,
    },
    /// Cheapest fixed and adaptive strategies under the miss-risk constraint.
    Compare(Common),
    /// Cross-check the PIDE root against backward induction and Picard iteration on a tree.
    OracleCheck {
        #[command(flatten)]
        common: Common,
        /// Tree steps.
        #[arg(long, default_value_t = 2000)]
        steps: usize,
        /// Picard tolerance (sup norm).
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        /// Picard iteration cap.
        #[arg(long, default_value_t = 1000)]
        max_iter: usize,
        /// Largest pairwise relative gap accepted between the three roots.
        #[arg(long, default_value_t = 0.01)]
        rel_tol: f64,
    },
    /// Finite-difference derivative and curvature of the criterion at the solved optimum.
    Stationarity {
        #[command(flatten)]
        common: Common,
        /// Comma-separated step sizes.
        #[arg(long, value_delimiter = ',', default_value = "0.05,0.1")]
        eps: Vec<f64>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Arrivals {
    Poisson,
    Pinned,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML config; without it the Poisson baseline is used.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    paths: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    arrivals: Option<Arrivals>,
    #[arg(long, allow_negative_numbers = true)]
    rate: Option<f64>,
    /// Pinned target count M.
    #[arg(long)]
    target: Option<u32>,
    #[arg(long, allow_negative_numbers = true)]
    epsilon: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    horizon: Option<f64>,
    /// Mark mean.
    #[arg(long, allow_negative_numbers = true)]
    mean: Option<f64>,
    /// Mark standard deviation.
    #[arg(long, allow_negative_numbers = true)]
    std: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    gamma: Option<f64>,
    /// Use a fixed discretion instead of the optimal policy.
    #[arg(long, allow_negative_numbers = true)]
    delta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    dt: Option<f64>,
    #[arg(long)]
    d_max: Option<u32>,
    /// Required probability of keeping misses under the risk fraction.
    #[arg(long, allow_negative_numbers = true)]
    p_target: Option<f64>,
    /// q in P[D_T < q N_T].
    #[arg(long, allow_negative_numbers = true)]
    risk_fraction: Option<f64>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::poisson_baseline(),
        };
        match self.arrivals {
            Some(Arrivals::Pinned) if c.arrivals.model != ArrivalChoice::Pinned => {
                c.arrivals = ExperimentConfig::pinned_baseline().arrivals;
            }
            Some(Arrivals::Poisson) if c.arrivals.model != ArrivalChoice::Poisson => {
                c.arrivals = ExperimentConfig::poisson_baseline().arrivals;
            }
            _ => {}
        }
        let a = &mut c.arrivals;
        a.rate = self.rate.or(a.rate);
        a.target = self.target.or(a.target);
        a.epsilon = self.epsilon.or(a.epsilon);
        a.horizon = self.horizon.unwrap_or(a.horizon);
        c.marks.mean = self.mean.or(c.marks.mean);
        c.marks.std = self.std.or(c.marks.std);
        c.penalties.alpha = self.alpha.unwrap_or(c.penalties.alpha);
        c.penalties.gamma = self.gamma.unwrap_or(c.penalties.gamma);
        if let Some(delta) = self.delta {
            c.policy = PolicyChoice::Fixed { delta };
        }
        c.solver.dt = self.dt.or(c.solver.dt);
        c.solver.d_max = self.d_max.or(c.solver.d_max);
        let s = &mut c.simulation;
        s.seed = self.seed.unwrap_or(s.seed);
        s.paths = self.paths.unwrap_or(s.paths);
        s.p_target = self.p_target.unwrap_or(s.p_target);
        s.risk_fraction = self.risk_fraction.unwrap_or(s.risk_fraction);
        if let Some(out) = &self.out {
            c.output.dir = out.clone();
        }
        c.validate()?;
        Ok(c)
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn solve(c: &ExperimentConfig) -> Result<serde_json::Value> {
    let model = c.arrival_model()?;
    let marks = c.mark_distribution()?;
    let dir = &c.output.dir;
    ensure_dir(dir)?;
    let stem = dir.join("surface");
    let (root, d_max, nodes) = match model.kind {
        ArrivalKind::Poisson { rate } => {
            let s = solve_poisson_surface(rate, c.penalties()?, model.horizon, &marks, c.solver_options())?;
            save_surface(&s, &stem)?;
            (s.node(0, 0), s.d_max(), s.grid().nodes())
        }
        ArrivalKind::Pinned { target, epsilon } => {
            let s = solve_pinned_surface(target, epsilon, c.penalties()?, model.horizon, &marks, c.solver_options())?;
            save_surface3(&s, &stem)?;
            (s.node(0, 0, 0), s.target(), s.grid().nodes())
        }
    };
    Ok(json!({
        "root_discretion": root,
        "d_max": d_max,
        "time_slices": nodes,
        "files": [stem.with_extension("csv"), stem.with_extension("json")],
    }))
}

fn simulate(c: &ExperimentConfig) -> Result<serde_json::Value> {
    let out = run_experiment(c)?;
    Ok(json!({ "summary": out.stats.summary, "files": out.files }))
}

fn sweep(c: &ExperimentConfig, gammas: Option<Vec<f64>>, alphas: Option<Vec<f64>>) -> Result<serde_json::Value> {
    let table = match (gammas, alphas) {
        (Some(g), _) => sweep_parameters(c, SweepAxis::Gamma, &g)?,
        (None, Some(a)) => sweep_parameters(c, SweepAxis::Alpha, &a)?,
        (None, None) => sweep_from_config(c)?,
    };
    ensure_dir(&c.output.dir)?;
    let path = c.output.dir.join("sweep.csv");
    table.save(&path)?;
    Ok(json!({
        "axis": table.axis,
        "rows": table.rows,
        "cost_neutral": table.cost_neutral_point(),
        "file": path,
    }))
}

fn compare(c: &ExperimentConfig) -> Result<serde_json::Value> {
    let report = compare_fixed_vs_adaptive(c, &CompareSpec::standard(c.simulation.p_target))?;
    report.save(&c.output.dir)?;
    Ok(json!({
        "p_target": report.p_target,
        "risk_fraction": report.risk_fraction,
        "fixed": report.fixed,
        "adaptive": report.adaptive,
        "gap": report.gap,
    }))
}

fn oracle_check(c: &ExperimentConfig, steps: usize, tol: f64, max_iter: usize, rel_tol: f64) -> Result<serde_json::Value> {
    let model = c.arrival_model()?;
    let ArrivalKind::Poisson { rate } = model.kind else {
        return Err(Error::Unsupported("the tree oracle covers Poisson arrivals only".into()).into());
    };
    let marks = c.mark_distribution()?;
    let p = c.penalties()?;
    let pide = solve_poisson_surface(rate, p, model.horizon, &marks, c.solver_options())?.node(0, 0);
    let tree = ScenarioTree::poisson(rate, model.horizon, steps, marks)?;
    let backward = solve_tree_backward(&tree, p)?;
    let picard = picard_iterate_tree(&tree, p, tol, max_iter)?;

    ensure_dir(&c.output.dir)?;
    let log = c.output.dir.join("picard_log.csv");
    let file = std::fs::File::create(&log).with_context(|| format!("writing {}", log.display()))?;
    picard.write_log_csv(std::io::BufWriter::new(file))?;

    let roots = [pide, backward.root(), picard.root()];
    let gap = roots
        .iter()
        .flat_map(|a| roots.iter().map(move |b| (a - b).abs() / b.abs()))
        .fold(0.0, f64::max);
    let margin = marks
        .lipschitz_constant()
        .map(|k| contraction_margin(k, model.horizon, rate, p.gamma));
    if gap > rel_tol {
        return Err(Error::Solver(format!(
            "roots disagree: PIDE {pide}, backward {}, Picard {} (relative gap {gap:e} > {rel_tol})",
            backward.root(),
            picard.root()
        ))
        .into());
    }
    Ok(json!({
        "pide_root": pide,
        "tree_backward_root": backward.root(),
        "picard_root": picard.root(),
        "picard_iterations": picard.iterations(),
        "max_relative_gap": gap,
        "contraction_margin": margin,
        "log": log,
    }))
}

fn stationarity(c: &ExperimentConfig, eps: &[f64]) -> Result<serde_json::Value> {
    let model = c.arrival_model()?;
    let marks = c.mark_distribution()?;
    let penalties = c.penalties()?;
    let policy = optimal_policy(c, penalties)?;
    let setup = FdSetup {
        model: &model,
        marks: &marks,
        penalties,
        n_paths: c.simulation.paths,
        seed: c.simulation.seed,
    };
    let half = model.horizon / 2.0;
    let directions = [
        ("constant", Direction::Constant { height: 1.0 }),
        ("early", Direction::Window { start: 0.0, end: half, height: 1.0 }),
        ("late", Direction::Window { start: half, end: model.horizon, height: 1.0 }),
    ];
    let mut rows = Vec::new();
    for (name, w) in directions {
        for &e in eps {
            let g = gateaux_fd(&policy, w, e, setup)?;
            let k = curvature_fd(&policy, w, e, setup)?;
            let one = one_sided_fd(&policy, w, e, setup)?;
            rows.push(json!({
                "direction": name,
                "eps": e,
                "derivative": g.estimate,
                "derivative_se": g.std_error,
                "curvature": k.estimate,
                "curvature_se": k.std_error,
                "right_derivative": one.right.estimate,
                "right_derivative_se": one.right.std_error,
                "left_derivative": one.left.estimate,
                "left_derivative_se": one.left.std_error,
            }));
        }
    }
    let value = json!({ "n_paths": setup.n_paths, "seed": setup.seed, "rows": rows });
    ensure_dir(&c.output.dir)?;
    write_json(&c.output.dir.join("stationarity.json"), &value)?;
    Ok(value)
}

fn run(cli: Cli) -> Result<serde_json::Value> {
    match cli.command {
        Command::Solve(common) => solve(&common.config()?),
        Command::Simulate(common) => simulate(&common.config()?),
        Command::Sweep { common, gammas, alphas } => sweep(&common.config()?, gammas, alphas),
        Command::Compare(common) => compare(&common.config()?),
        Command::OracleCheck {
            common,
            steps,
            tol,
            max_iter,
            rel_tol,
        } => oracle_check(&common.config()?, steps, tol, max_iter, rel_tol),
        Command::Stationarity { common, eps } => stationarity(&common.config()?, &eps),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_numerical() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(value) => {
            let text = serde_json::to_string_pretty(&value).expect("json value serializes");
            // A closed pipe downstream is not a failure of the run.
            let _ = writeln!(std::io::stdout(), "{text}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
