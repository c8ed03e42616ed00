//! Monte Carlo estimation of the performance criterion
//! `J(delta) = E[C_T + alpha D_T + gamma D_T^2]` and finite-difference checks
//! of its first and second directional derivatives.
//!
//! Every estimator draws path `i` from `(seed, i)`, so perturbed policies see
//! the same arrivals and marks (common random numbers) and the per-path
//! differences carry most of the variance reduction.

use serde::{Deserialize, Serialize};

use crate::ensemble::{map_paths, mean_and_se};
use crate::error::{Error, Result};
use crate::fbsde::TreeSolution;
use crate::mpp::{ArrivalModel, MarkDistribution};
use crate::pide::{Lookup, Penalties};
use crate::mpp::EventStream;
use crate::policy::{evaluate_path, fill_outcome, path_totals, Discretion, PathTotals};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriterionEstimate {
    pub j: f64,
    /// `E[C_T]`
    pub j_cost: f64,
    /// `E[D_T]`
    pub j_linear: f64,
    /// `E[D_T^2]`
    pub j_quadratic: f64,
    pub se_j: f64,
    pub se_cost: f64,
    pub se_linear: f64,
    pub se_quadratic: f64,
    pub n_paths: usize,
    pub seed: u64,
}

/// Per-path criterion value `C + alpha D + gamma D^2`.
pub fn path_criterion(totals: &PathTotals, penalties: Penalties) -> f64 {
    let d = totals.misses as f64;
    totals.cost + penalties.alpha * d + penalties.gamma * d * d
}

fn check_paths(n_paths: usize) -> Result<()> {
    if n_paths == 0 {
        Err(Error::param("n_paths", "need at least one path"))
    } else {
        Ok(())
    }
}

pub fn estimate_performance<P: Discretion + ?Sized>(
    policy: &P,
    model: &ArrivalModel,
    marks: &MarkDistribution,
    penalties: Penalties,
    n_paths: usize,
    seed: u64,
) -> Result<CriterionEstimate> {
    check_paths(n_paths)?;
    let totals = map_paths(model, marks, n_paths, seed, |ev| {
        path_totals(policy, ev, model.horizon)
    })?;
    let costs: Vec<f64> = totals.iter().map(|t| t.cost).collect();
    let misses: Vec<f64> = totals.iter().map(|t| t.misses as f64).collect();
    let squares: Vec<f64> = misses.iter().map(|d| d * d).collect();
    let per_path: Vec<f64> = totals.iter().map(|t| path_criterion(t, penalties)).collect();
    let (j_cost, se_cost) = mean_and_se(&costs);
    let (j_linear, se_linear) = mean_and_se(&misses);
    let (j_quadratic, se_quadratic) = mean_and_se(&squares);
    let (_, se_j) = mean_and_se(&per_path);
    Ok(CriterionEstimate {
        j: j_cost + penalties.alpha * j_linear + penalties.gamma * j_quadratic,
        j_cost,
        j_linear,
        j_quadratic,
        se_j,
        se_cost,
        se_linear,
        se_quadratic,
        n_paths,
        seed,
    })
}

/// Deterministic bounded perturbation `w(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Direction {
    Constant { height: f64 },
    Window { start: f64, end: f64, height: f64 },
}

impl Direction {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            Direction::Constant { height } => height,
            Direction::Window { start, end, height } => {
                if t > start && t <= end {
                    height
                } else {
                    0.0
                }
            }
        }
    }
}

/// `delta + scale * w` as a feedback rule: the base policy is still queried
/// at the path's own state.
#[derive(Debug, Clone, Copy)]
pub struct Perturbed<'a, P: ?Sized> {
    pub base: &'a P,
    pub direction: Direction,
    pub scale: f64,
}

impl<P: Discretion + ?Sized> Discretion for Perturbed<'_, P> {
    fn discretion(&self, t: f64, misses: u32, attempts: u32) -> Result<Lookup> {
        let base = self.base.discretion(t, misses, attempts)?;
        Ok(Lookup {
            value: base.value + self.scale * self.direction.at(t),
            clamped: base.clamped,
        })
    }

    fn horizon(&self) -> Option<f64> {
        self.base.horizon()
    }
}

/// Finite-difference estimate with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FdEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub n_paths: usize,
}

impl FdEstimate {
    /// `|estimate| <= k * std_error`
    pub fn within(&self, k: f64) -> bool {
        self.estimate.abs() <= k * self.std_error
    }

    fn from_values(values: &[f64]) -> Self {
        let (estimate, std_error) = mean_and_se(values);
        Self {
            estimate,
            std_error,
            n_paths: values.len(),
        }
    }
}

/// Shared model inputs of the finite-difference estimators.
#[derive(Debug, Clone, Copy)]
pub struct FdSetup<'a> {
    pub model: &'a ArrivalModel,
    pub marks: &'a MarkDistribution,
    pub penalties: Penalties,
    pub n_paths: usize,
    pub seed: u64,
}

/// Path criterion when order `n` is sent with `deltas[n] + scale * w(t_n)`.
fn shifted_criterion(
    events: &EventStream,
    deltas: &[f64],
    direction: Direction,
    scale: f64,
    penalties: Penalties,
) -> f64 {
    let mut totals = PathTotals::default();
    for (e, &delta) in events.events.iter().zip(deltas) {
        let outcome = fill_outcome(delta + scale * direction.at(e.time), e.mark);
        totals.attempts += 1;
        if outcome.filled {
            totals.cost += outcome.cost;
        } else {
            totals.misses += 1;
        }
    }
    path_criterion(&totals, penalties)
}

/// Runs `policy` once per path to fix its decisions `delta_n`, then hands
/// `f` the map `scale -> J(delta + scale w)` on that path.
///
/// The perturbation acts on the decision process: later orders keep the
/// discretion the base policy chose along the path, even where a flipped
/// fill would have changed the policy's own state.
fn map_perturbations<P, T, F>(policy: &P, direction: Direction, setup: FdSetup<'_>, f: F) -> Result<Vec<T>>
where
    P: Discretion + ?Sized,
    T: Send,
    F: Fn(&dyn Fn(f64) -> f64) -> T + Sync,
{
    check_paths(setup.n_paths)?;
    let horizon = setup.model.horizon;
    map_paths(setup.model, setup.marks, setup.n_paths, setup.seed, |ev| {
        let ledger = evaluate_path(policy, ev, horizon)?;
        let deltas: Vec<f64> = ledger.entries.iter().map(|e| e.delta).collect();
        let j = |scale: f64| shifted_criterion(ev, &deltas, direction, scale, setup.penalties);
        Ok(f(&j))
    })
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::param("eps", format!("must be positive, got {eps}")))
    }
}

/// Central difference `(J(delta + eps w) - J(delta - eps w)) / (2 eps)`.
pub fn gateaux_fd<P: Discretion + ?Sized>(
    policy: &P,
    direction: Direction,
    eps: f64,
    setup: FdSetup<'_>,
) -> Result<FdEstimate> {
    check_eps(eps)?;
    let values = map_perturbations(policy, direction, setup, |j| (j(eps) - j(-eps)) / (2.0 * eps))?;
    Ok(FdEstimate::from_values(&values))
}

/// Second difference `(J(delta + eps w) - 2 J(delta) + J(delta - eps w)) / eps^2`.
pub fn curvature_fd<P: Discretion + ?Sized>(
    policy: &P,
    direction: Direction,
    eps: f64,
    setup: FdSetup<'_>,
) -> Result<FdEstimate> {
    check_eps(eps)?;
    let values = map_perturbations(policy, direction, setup, |j| {
        (j(eps) - 2.0 * j(0.0) + j(-eps)) / (eps * eps)
    })?;
    Ok(FdEstimate::from_values(&values))
}

/// Right and left directional derivatives of `J` along `w`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OneSided {
    /// `lim (J(delta + s w) - J(delta)) / s` as `s -> 0+`
    pub right: FdEstimate,
    /// `lim (J(delta) - J(delta - s w)) / s` as `s -> 0+`
    pub left: FdEstimate,
}

/// One-sided derivatives with the linear curvature term removed by
/// Richardson extrapolation over steps `eps` and `2 eps`.
///
/// A miss count is an integer, so flipping a miss into a fill and a fill
/// into a miss are not symmetric moves and the two limits can differ.
pub fn one_sided_fd<P: Discretion + ?Sized>(
    policy: &P,
    direction: Direction,
    eps: f64,
    setup: FdSetup<'_>,
) -> Result<OneSided> {
    check_eps(eps)?;
    let pairs = map_perturbations(policy, direction, setup, |j| {
        let j0 = j(0.0);
        let right = 2.0 * (j(eps) - j0) / eps - (j(2.0 * eps) - j0) / (2.0 * eps);
        let left = 2.0 * (j0 - j(-eps)) / eps - (j0 - j(-2.0 * eps)) / (2.0 * eps);
        (right, left)
    })?;
    let right: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let left: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    Ok(OneSided {
        right: FdEstimate::from_values(&right),
        left: FdEstimate::from_values(&left),
    })
}

/// `J(delta + scale w) - J(delta)` from per-path differences.
pub fn perturbation_gain<P: Discretion + ?Sized>(
    policy: &P,
    direction: Direction,
    scale: f64,
    setup: FdSetup<'_>,
) -> Result<FdEstimate> {
    let values = map_perturbations(policy, direction, setup, |j| j(scale) - j(0.0))?;
    Ok(FdEstimate::from_values(&values))
}

/// `max |h - 2 gamma V - gamma - alpha|` over the tree's decision nodes.
/// No sampling noise: the conditional expectations on a tree are exact.
pub fn stationarity_residual_tree(solution: &TreeSolution, penalties: Penalties) -> f64 {
    let Penalties { alpha, gamma } = penalties;
    solution
        .h
        .iter()
        .zip(&solution.value)
        .flat_map(|(hs, vs)| {
            hs.iter()
                .zip(vs)
                .map(move |(h, v)| (h - 2.0 * gamma * v - gamma - alpha).abs())
        })
        .fold(0.0, f64::max)
}
