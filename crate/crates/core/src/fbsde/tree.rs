use crate::error::{Error, Result};
use crate::mpp::MarkDistribution;
use crate::pide::Penalties;

/// Recombining binomial surrogate of the arrival process: at each of `steps`
/// equal time steps an order arrives with probability `arrival_prob`, and its
/// mark is drawn from `marks`. Nodes are `(step, D)` with `D <= step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioTree {
    steps: usize,
    arrival_prob: f64,
    horizon: f64,
    marks: MarkDistribution,
}

impl ScenarioTree {
    pub fn new(steps: usize, arrival_prob: f64, horizon: f64, marks: MarkDistribution) -> Result<Self> {
        if steps == 0 {
            return Err(Error::param("steps", "need at least one step"));
        }
        if !(0.0..=1.0).contains(&arrival_prob) {
            return Err(Error::param(
                "arrival_prob",
                format!("must lie in [0, 1], got {arrival_prob}"),
            ));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::param("horizon", format!("must be positive, got {horizon}")));
        }
        Ok(Self {
            steps,
            arrival_prob,
            horizon,
            marks: marks.validated()?,
        })
    }

    /// Binomial discretization of Poisson(`rate`) arrivals: `p = rate * T / steps`.
    pub fn poisson(rate: f64, horizon: f64, steps: usize, marks: MarkDistribution) -> Result<Self> {
        Self::new(steps, rate * horizon / steps as f64, horizon, marks)
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn arrival_prob(&self) -> f64 {
        self.arrival_prob
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn marks(&self) -> &MarkDistribution {
        &self.marks
    }

    /// Arrival intensity implied by the tree, `p * steps / T`.
    pub fn intensity_bound(&self) -> f64 {
        self.arrival_prob * self.steps as f64 / self.horizon
    }

    /// Decision nodes: `sum_{j < n} (j + 1)`.
    pub fn node_count(&self) -> usize {
        self.steps * (self.steps + 1) / 2
    }

    pub(crate) fn require_continuous(&self) -> Result<()> {
        if self.marks.is_continuous() {
            Ok(())
        } else {
            Err(Error::Unsupported(
                "the tree fixed point needs a continuous mark CDF; atomic marks can leave it without a solution"
                    .into(),
            ))
        }
    }

    /// Expected terminal misses at every node under the policy `h`
    /// (`h[j][d]` for `j < steps`, `d <= j`).
    pub fn expected_misses(&self, h: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = self.steps;
        let p = self.arrival_prob;
        let mut value: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
        value.resize(n + 1, Vec::new());
        value[n] = (0..=n).map(|d| d as f64).collect();
        for j in (0..n).rev() {
            let (head, tail) = value.split_at_mut(j + 1);
            let next = &tail[0];
            head[j] = (0..=j)
                .map(|d| {
                    let miss = 1.0 - self.marks.cdf(h[j][d]);
                    continuation(p, miss, next[d], next[d + 1])
                })
                .collect();
        }
        value
    }

    /// Probability of reaching each node `(j, d)` from the root under `h`,
    /// including the terminal layer `j = steps`.
    pub fn occupancy(&self, h: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = self.steps;
        let p = self.arrival_prob;
        let mut occ = Vec::with_capacity(n + 1);
        occ.push(vec![1.0]);
        for j in 0..n {
            let mut next = vec![0.0; j + 2];
            for d in 0..=j {
                let mass = occ[j][d];
                let miss = p * (1.0 - self.marks.cdf(h[j][d]));
                next[d] += mass * (1.0 - miss);
                next[d + 1] += mass * miss;
            }
            occ.push(next);
        }
        occ
    }
}

/// `E[V_next]` from a node: no arrival or a fill keeps `D`, a miss moves to `D + 1`.
#[inline]
pub(crate) fn continuation(p: f64, miss_prob: f64, stay: f64, up: f64) -> f64 {
    stay + p * miss_prob * (up - stay)
}

/// One row of the convergence log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeSolution {
    pub penalties: Penalties,
    /// Optimal discretion at decision nodes, `h[j][d]`, `j < steps`.
    pub h: Vec<Vec<f64>>,
    /// Conditional expected terminal misses, `value[j][d]`, `j <= steps`; `value[steps][d] = d`.
    pub value: Vec<Vec<f64>>,
    pub log: Vec<IterationRecord>,
}

impl TreeSolution {
    pub fn root(&self) -> f64 {
        self.h[0][0]
    }

    pub fn root_expected_misses(&self) -> f64 {
        self.value[0][0]
    }

    pub fn iterations(&self) -> usize {
        self.log.len()
    }

    /// Writes the convergence log as `iteration,residual`.
    pub fn write_log_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["iteration", "residual"])?;
        for r in &self.log {
            w.write_record([r.iteration.to_string(), r.residual.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<convergence log>", e))?;
        Ok(())
    }
}

/// Bisection bracket for a node with `d` misses and `remaining` steps to go.
pub fn node_bracket(penalties: Penalties, d: usize, remaining: usize) -> (f64, f64) {
    let Penalties { alpha, gamma } = penalties;
    (
        2.0 * gamma * d as f64 + gamma + alpha,
        2.0 * gamma * (d + remaining) as f64 + gamma + alpha,
    )
}

const BISECTION_TOL: f64 = 1e-12;
const ROOT_RESIDUAL_TOL: f64 = 1e-10;

/// Solves `h = 2 gamma [stay + p (1 - Phi(h)) (up - stay)] + gamma + alpha`
/// for one node by bisection on `bracket`. Returns `(h, V)` where `V` is the
/// bracketed expectation at the root.
///
/// The left side minus the right side is nondecreasing in `h` whenever
/// `up >= stay`. A jump in `Phi` can step over zero without a root; that is
/// reported as a solver error.
pub fn node_fixed_point(
    marks: &MarkDistribution,
    p: f64,
    stay: f64,
    up: f64,
    penalties: Penalties,
    bracket: (f64, f64),
) -> Result<(f64, f64)> {
    let Penalties { alpha, gamma } = penalties;
    let value_at = |h: f64| continuation(p, 1.0 - marks.cdf(h), stay, up);
    let gap = |h: f64| h - 2.0 * gamma * value_at(h) - gamma - alpha;

    let (mut lo, mut hi) = bracket;
    if gap(lo) > ROOT_RESIDUAL_TOL || gap(hi) < -ROOT_RESIDUAL_TOL {
        return Err(Error::Solver(format!(
            "no sign change on [{lo}, {hi}] (gaps {}, {})",
            gap(lo),
            gap(hi)
        )));
    }
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if gap(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let h = 0.5 * (lo + hi);
    let residual = gap(h);
    if residual.abs() > ROOT_RESIDUAL_TOL {
        return Err(Error::Solver(format!(
            "bisection closed on h = {h} with residual {residual}; the fixed point does not exist"
        )));
    }
    Ok((h, value_at(h)))
}

/// Exact backward induction: at each node, solve the scalar fixed point for
/// `h` given next-step values, then roll the expectation back one step.
pub fn solve_tree_backward(tree: &ScenarioTree, penalties: Penalties) -> Result<TreeSolution> {
    tree.require_continuous()?;
    let penalties = Penalties::new(penalties.alpha, penalties.gamma)?;
    let n = tree.steps;
    let mut value: Vec<Vec<f64>> = vec![Vec::new(); n + 1];
    let mut h: Vec<Vec<f64>> = vec![Vec::new(); n];
    value[n] = (0..=n).map(|d| d as f64).collect();
    for j in (0..n).rev() {
        let mut hs = Vec::with_capacity(j + 1);
        let mut vs = Vec::with_capacity(j + 1);
        for d in 0..=j {
            let next = &value[j + 1];
            let (hd, vd) = node_fixed_point(
                &tree.marks,
                tree.arrival_prob,
                next[d],
                next[d + 1],
                penalties,
                node_bracket(penalties, d, n - j),
            )?;
            hs.push(hd);
            vs.push(vd);
        }
        h[j] = hs;
        value[j] = vs;
    }
    Ok(TreeSolution {
        penalties,
        h,
        value,
        log: vec![IterationRecord {
            iteration: 1,
            residual: 0.0,
        }],
    })
}

/// Picard iteration of the policy map `h -> 2 gamma E[D_T | node; h] + gamma + alpha`.
///
/// Starting from the flat policy `h = alpha` (zero misses carried), each sweep
/// recomputes conditional expected misses under the current policy and resets
/// the policy from them, until the sup-norm change drops below `tol`.
pub fn picard_iterate_tree(
    tree: &ScenarioTree,
    penalties: Penalties,
    tol: f64,
    max_iter: usize,
) -> Result<TreeSolution> {
    tree.require_continuous()?;
    let penalties = Penalties::new(penalties.alpha, penalties.gamma)?;
    let Penalties { alpha, gamma } = penalties;
    let n = tree.steps;
    let mut h: Vec<Vec<f64>> = (0..n).map(|j| vec![alpha; j + 1]).collect();
    let mut log = Vec::new();
    for iteration in 1..=max_iter {
        let value = tree.expected_misses(&h);
        let mut residual: f64 = 0.0;
        for (hs, vs) in h.iter_mut().zip(&value) {
            for (hd, v) in hs.iter_mut().zip(vs) {
                let updated = 2.0 * gamma * v + gamma + alpha;
                residual = residual.max((updated - *hd).abs());
                *hd = updated;
            }
        }
        log.push(IterationRecord {
            iteration,
            residual,
        });
        if residual < tol {
            let value = tree.expected_misses(&h);
            return Ok(TreeSolution {
                penalties,
                h,
                value,
                log,
            });
        }
    }
    let residual = log.last().map_or(f64::INFINITY, |r| r.residual);
    Err(Error::NonConvergence {
        iterations: max_iter,
        residual,
    })
}

/// `k T lambda_bar max(1, 2 gamma)^2`; values below one meet the sufficient
/// condition for a unique solution. Diagnostic only.
pub fn contraction_margin(lipschitz: f64, horizon: f64, intensity_bound: f64, gamma: f64) -> f64 {
    let s = (2.0 * gamma).max(1.0);
    lipschitz * horizon * intensity_bound * s * s
}

/// Exact `E[C_T + alpha D_T + gamma D_T^2]` on the tree under the policy `h`.
pub fn expected_criterion(tree: &ScenarioTree, h: &[Vec<f64>], penalties: Penalties) -> f64 {
    let Penalties { alpha, gamma } = penalties;
    let n = tree.steps;
    let p = tree.arrival_prob;
    let mut w: Vec<f64> = (0..=n).map(|d| alpha * d as f64 + gamma * (d * d) as f64).collect();
    for j in (0..n).rev() {
        w = (0..=j)
            .map(|d| step_cost(&tree.marks, p, h[j][d], w[d], w[d + 1]))
            .collect();
    }
    w[0]
}

/// Expected cost-to-go from a node sending `delta` with next-step values `stay`, `up`.
fn step_cost(marks: &MarkDistribution, p: f64, delta: f64, stay: f64, up: f64) -> f64 {
    let fill = marks.cdf(delta);
    (1.0 - p) * stay + p * (marks.truncated_first_moment(delta) + fill * stay + (1.0 - fill) * up)
}

/// Dynamic-programming minimizer of the tree criterion over feedback
/// policies: `h(j, d) = W(j+1, d+1) - W(j+1, d)`.
///
/// This differs from the fixed point `h = 2 gamma V + gamma + alpha`: that
/// condition makes the derivative vanish only for perturbations that lower
/// the discretion, because raising it turns a miss into a fill while later
/// decisions still count the miss.
pub fn bellman_policy(tree: &ScenarioTree, penalties: Penalties) -> Result<Vec<Vec<f64>>> {
    let Penalties { alpha, gamma } = Penalties::new(penalties.alpha, penalties.gamma)?;
    let n = tree.steps;
    let p = tree.arrival_prob;
    let mut w: Vec<f64> = (0..=n).map(|d| alpha * d as f64 + gamma * (d * d) as f64).collect();
    let mut h = vec![Vec::new(); n];
    for j in (0..n).rev() {
        h[j] = (0..=j).map(|d| w[d + 1] - w[d]).collect::<Vec<f64>>();
        w = (0..=j)
            .map(|d| step_cost(&tree.marks, p, h[j][d], w[d], w[d + 1]))
            .collect();
    }
    Ok(h)
}
