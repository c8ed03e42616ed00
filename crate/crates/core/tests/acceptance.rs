//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Run with `cargo test -p walkbook-core --test acceptance`.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use walkbook::criterion::{curvature_fd, gateaux_fd, one_sided_fd, Direction, FdSetup};
use walkbook::experiment::{
    compare_fixed_vs_adaptive, constrained_minimum, run_experiment, simulate, sweep_parameters, CompareSpec,
    ExperimentConfig, PolicyChoice, SweepAxis,
};
use walkbook::fbsde::{picard_iterate_tree, solve_tree_backward, ScenarioTree};
use walkbook::mpp::{sample_events, ArrivalModel, MarkDistribution};
use walkbook::pide::{solve_pinned_surface, solve_poisson_surface, Penalties, SolverOptions};
use walkbook::policy::{fixed_policy, DiscretionPolicy};

use common::{normal_cdf, normal_pdf, poisson_binomial_risk};

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn marks() -> MarkDistribution {
    MarkDistribution::normal(0.2, 1.0).unwrap()
}

fn pen(alpha: f64, gamma: f64) -> Penalties {
    Penalties::new(alpha, gamma).unwrap()
}

fn baseline(paths: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::poisson_baseline();
    c.simulation.paths = paths;
    c
}

fn within_rel(x: f64, target: f64, rel: f64) -> bool {
    (x - target).abs() <= rel * target.abs()
}

fn gamma_zero_closed_form() -> Verdict {
    let s = solve_poisson_surface(100.0, pen(0.7, 0.0), 1.0, &marks(), SolverOptions::default()).unwrap();
    let worst = s.values().iter().map(|h| (h - 0.7).abs()).fold(0.0, f64::max);
    Verdict::new(worst < 1e-12, format!("max |h - 0.7| = {worst:e} over {} nodes", s.values().len()))
}

fn terminal_and_boundary() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let opts = SolverOptions {
        max_slices: Some(100),
        ..SolverOptions::default()
    };
    for _ in 0..5 {
        let gamma = rng.random_range(0.0..0.3);
        let alpha = rng.random_range(-1.0..2.0);
        let s = solve_poisson_surface(100.0, pen(alpha, gamma), 1.0, &marks(), opts).unwrap();
        let last = s.grid().nodes() - 1;
        let d = rng.random_range(0..=s.d_max());
        let expect = 2.0 * gamma * d as f64 + gamma + alpha;
        worst = worst.max((s.node(last, d) - expect).abs() / expect.abs().max(1.0));
    }
    let (gamma, alpha) = (rng.random_range(0.0..0.3), rng.random_range(-1.0..2.0));
    let p = solve_pinned_surface(40, 0.1, pen(alpha, gamma), 1.0, &marks(), SolverOptions::default()).unwrap();
    for i in 0..p.grid().nodes() {
        for d in 0..=40 {
            let expect = 2.0 * gamma * d as f64 + gamma + alpha;
            worst = worst.max((p.node(i, d, 40) - expect).abs() / expect.abs().max(1.0));
        }
    }
    Verdict::new(worst <= f64::EPSILON, format!("max relative deviation {worst:e}"))
}

fn oracle_triangle() -> Verdict {
    let p = pen(0.0, 0.1);
    let opts = SolverOptions {
        dt: Some(1e-4),
        ..SolverOptions::default()
    };
    let pide = solve_poisson_surface(100.0, p, 1.0, &marks(), opts).unwrap().node(0, 0);
    let tree = ScenarioTree::poisson(100.0, 1.0, 2000, marks()).unwrap();
    let backward = solve_tree_backward(&tree, p).unwrap().root();
    let picard = picard_iterate_tree(&tree, p, 1e-12, 1000).unwrap();
    let values = [pide, backward, picard.root()];
    let worst = (0..3)
        .flat_map(|i| (0..3).map(move |j| (i, j)))
        .map(|(i, j)| (values[i] - values[j]).abs() / values[j])
        .fold(0.0, f64::max);
    Verdict::new(
        worst < 0.01,
        format!(
            "PIDE {pide:.6}, tree {backward:.6}, Picard {:.6} ({} sweeps); max relative gap {worst:.2e}",
            picard.root(),
            picard.iterations()
        ),
    )
}

fn naive_strategy() -> Verdict {
    let mut c = baseline(10_000);
    c.policy = PolicyChoice::Fixed { delta: 0.0 };
    let s = simulate(&c, &fixed_policy(0.0).unwrap()).unwrap().summary;
    let u = -0.2;
    let closed = 100.0 * (0.2 * normal_cdf(u, 0.0, 1.0) - normal_pdf(u, 0.0, 1.0));
    let ratio_ok = (s.mean_miss_ratio - 0.5793).abs() <= 0.005;
    let cost_ok = (s.mean_cost - closed).abs() <= 4.0 * s.se_cost;
    Verdict::new(
        ratio_ok && cost_ok,
        format!(
            "miss ratio {:.4} (0.5793 ± 0.005), E[C_T] {:.3} ± {:.3} vs closed form {closed:.3}; reference -29.25 sits {:.1} SE away",
            s.mean_miss_ratio,
            s.mean_cost,
            s.se_cost,
            (s.mean_cost + 29.25).abs() / s.se_cost
        ),
    )
}

fn gamma_monotonicity() -> Verdict {
    let t = sweep_parameters(&baseline(10_000), SweepAxis::Gamma, &[0.01, 0.03, 0.1]).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for w in t.rows.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let ratio_gap = a.mean_miss_ratio - b.mean_miss_ratio;
        let ratio_se = a.se_miss_ratio.hypot(b.se_miss_ratio);
        let cost_gap = b.mean_cost - a.mean_cost;
        let cost_se = a.se_cost.hypot(b.se_cost);
        pass &= ratio_gap > 4.0 * ratio_se && cost_gap > 4.0 * cost_se;
        parts.push(format!(
            "{}->{}: ratio -{:.4} ({:.0} SE), cost +{:.3} ({:.0} SE)",
            a.param,
            b.param,
            ratio_gap,
            ratio_gap / ratio_se,
            cost_gap,
            cost_gap / cost_se
        ));
    }
    Verdict::new(pass, parts.join("; "))
}

fn cost_neutral_gamma() -> Verdict {
    let grid: Vec<f64> = (0..=16).map(|k| 0.05 + 0.0025 * k as f64).collect();
    let t = sweep_parameters(&baseline(10_000), SweepAxis::Gamma, &grid).unwrap();
    match t.cost_neutral_point() {
        Some(x) => Verdict::new(
            (0.059..=0.079).contains(&x.param) && (x.mean_miss_ratio - 0.105).abs() <= 0.02,
            format!("crossing at gamma {:.4}, miss ratio {:.4} there", x.param, x.mean_miss_ratio),
        ),
        None => Verdict::new(false, "mean cost per fill never changes sign on [0.05, 0.09]"),
    }
}

fn fixed_vs_adaptive() -> Verdict {
    let report = compare_fixed_vs_adaptive(&baseline(10_000), &CompareSpec::standard(0.95)).unwrap();
    let describe = |p: f64| {
        let f = constrained_minimum(&report.fixed_table, p);
        let a = constrained_minimum(&report.adaptive_table, p);
        match (f, a) {
            (Some(f), Some(a)) => format!(
                "p={p}: fixed alpha {:.4} C {:.2} D {:.2}, adaptive gamma {:.4} C {:.2} D {:.2}",
                f.param, f.mean_cost, f.mean_misses, a.param, a.mean_cost, a.mean_misses
            ),
            _ => format!("p={p}: constraint infeasible on the grid"),
        }
    };
    let pass = match (report.fixed, report.adaptive) {
        (Some(f), Some(a)) => {
            a.mean_cost < f.mean_cost
                && within_rel(a.mean_cost, 5.93, 0.2)
                && within_rel(f.mean_cost, 9.52, 0.2)
                && (a.mean_misses - 5.41).abs() <= 0.5
                && (f.mean_misses - 6.39).abs() <= 0.5
        }
        _ => false,
    };
    Verdict::new(
        pass,
        format!(
            "{} [targets C 9.52 / 5.93 ± 20%, D 6.39 / 5.41 ± 0.5]; also {}",
            describe(0.95),
            describe(0.99)
        ),
    )
}

fn stationarity() -> Verdict {
    let (m, z) = (ArrivalModel::poisson(100.0, 1.0).unwrap(), marks());
    let p = pen(0.0, 0.07);
    let surface = solve_poisson_surface(100.0, p, 1.0, &z, SolverOptions::default()).unwrap();
    let policy = DiscretionPolicy::poisson(surface);
    let setup = FdSetup {
        model: &m,
        marks: &z,
        penalties: p,
        n_paths: 10_000,
        seed: 8,
    };
    let directions = [
        ("const", Direction::Constant { height: 1.0 }),
        ("early", Direction::Window { start: 0.0, end: 0.5, height: 1.0 }),
        ("late", Direction::Window { start: 0.5, end: 1.0, height: 1.0 }),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, w) in directions {
        for eps in [0.05, 0.1] {
            let g = gateaux_fd(&policy, w, eps, setup).unwrap();
            let c = curvature_fd(&policy, w, eps, setup).unwrap();
            pass &= g.within(4.0) && c.estimate >= -4.0 * c.std_error;
            parts.push(format!(
                "{name}/{eps}: dJ {:.3} ({:.1} SE), d2J {:.1} ({:.1} SE)",
                g.estimate,
                g.estimate / g.std_error,
                c.estimate,
                c.estimate / c.std_error
            ));
        }
    }
    let one = one_sided_fd(&policy, directions[0].1, 0.02, setup).unwrap();
    parts.push(format!(
        "one-sided const: left {:.3} ± {:.3}, right {:.3} ± {:.3}",
        one.left.estimate, one.left.std_error, one.right.estimate, one.right.std_error
    ));
    Verdict::new(pass, parts.join("; "))
}

fn pinned_model() -> Verdict {
    let z = marks();
    let loose = ArrivalModel::pinned(100, 0.1, 1.0).unwrap();
    let tight = ArrivalModel::pinned(100, 1e-6, 1.0).unwrap();
    let n = 10_000;
    let over = (0..n).filter(|&i| sample_events(&loose, &z, 1, i).unwrap().len() > 100).count();
    let full = (0..n).filter(|&i| sample_events(&tight, &z, 1, i).unwrap().len() == 100).count();
    let frac = full as f64 / n as f64;
    Verdict::new(
        over == 0 && frac >= 0.999,
        format!("eps=0.1: {over} paths above M; eps=1e-6: N_T = M on {:.2}% of paths", 100.0 * frac),
    )
}

fn risk_oracle() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for &delta in &[0.5, 1.0, 1.5, 1.9125, 2.3] {
        let mut c = baseline(10_000);
        c.policy = PolicyChoice::Fixed { delta };
        let mc = simulate(&c, &fixed_policy(delta).unwrap()).unwrap().summary.p_risk;
        let exact = poisson_binomial_risk(100.0, 1.0 - normal_cdf(delta, 0.2, 1.0), 0.1);
        worst = worst.max((mc - exact).abs());
        parts.push(format!("{delta}: {mc:.4}/{exact:.4}"));
    }
    Verdict::new(worst <= 0.01, format!("MC/exact {}; max gap {worst:.4}", parts.join(", ")))
}

fn csv_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn reproducibility() -> Verdict {
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    for (dir, threads) in dirs.iter().zip([1, 4, 4]) {
        let mut c = baseline(10_000);
        c.output.dir = dir.path().to_path_buf();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| run_experiment(&c)).unwrap();
    }
    let runs: Vec<_> = dirs.iter().map(|d| csv_bytes(d.path())).collect();
    let same = runs[0] == runs[1] && runs[1] == runs[2];
    Verdict::new(
        same && !runs[0].is_empty(),
        format!("{} CSV files compared across 1, 4 and 4 threads", runs[0].len()),
    )
}

fn main() {
    type Check = fn() -> Verdict;
    let criteria: [(&str, Check); 11] = [
        ("gamma = 0 closed form", gamma_zero_closed_form),
        ("terminal and boundary exactness", terminal_and_boundary),
        ("oracle triangle", oracle_triangle),
        ("naive strategy", naive_strategy),
        ("gamma monotonicity", gamma_monotonicity),
        ("cost-neutral gamma", cost_neutral_gamma),
        ("fixed vs adaptive", fixed_vs_adaptive),
        ("stationarity", stationarity),
        ("pinned model", pinned_model),
        ("risk-metric oracle", risk_oracle),
        ("reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Verdict::new(false, format!("panicked: {msg}"))
        });
        if !verdict.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<32} {} [{:.1}s] {}",
            k + 1,
            name,
            if verdict.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            verdict.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
