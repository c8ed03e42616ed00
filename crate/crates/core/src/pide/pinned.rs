use super::grid::{check_dt, default_dt, SolverOptions, Stepping, TimeGrid};
use super::poisson::{require_continuous, Penalties};
use super::surface::{terminal_value, DiscretionSurface3, SurfaceHeader, SURFACE_SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::mpp::{ArrivalKind, MarkDistribution};

const DEFAULT_MAX_SLICES: usize = 200;

/// Solves the pinned-intensity PIDE
///
/// ```text
/// 0 = h_t + l(t, N) [ (1 - Phi(h)) (h(t, D+1, N+1) - h) + Phi(h) (h(t, D, N+1) - h) ]
/// l(t, N) = (M - N) / (T - t + eps)
/// ```
///
/// backward from `h(T, D, N) = 2 gamma D + gamma + alpha`, with the `N = M`
/// slice held at the same value for all `t`. Both counts run over `0..=M`;
/// states with `D > N` are unreachable but solved anyway, using the closure
/// `h(t, M+1, N) = h(t, M, N) + 2 gamma` at the miss boundary.
pub fn solve_pinned_surface(
    target: u32,
    epsilon: f64,
    penalties: Penalties,
    horizon: f64,
    marks: &MarkDistribution,
    options: SolverOptions,
) -> Result<DiscretionSurface3> {
    let Penalties { alpha, gamma } = Penalties::new(penalties.alpha, penalties.gamma)?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::param("epsilon", format!("must be positive, got {epsilon}")));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::param("horizon", format!("must be positive, got {horizon}")));
    }
    require_continuous(marks)?;
    let bound = target as f64 / epsilon;
    let dt = options.dt.unwrap_or_else(|| default_dt(horizon, bound));
    check_dt(dt, bound)?;

    let plan = Stepping::plan(horizon, dt, options.max_slices.unwrap_or(DEFAULT_MAX_SLICES));
    let side = target as usize + 1;
    let plane = side * side;
    let slices = plan.slices();
    let mut values = vec![0.0; (slices + 1) * plane];

    // Layout: [n][d].
    let mut current = vec![0.0; plane];
    for n in 0..side {
        for d in 0..side {
            current[n * side + d] = terminal_value(alpha, gamma, d as u32);
        }
    }
    let mut next = current.clone();
    values[slices * plane..].copy_from_slice(&current);

    for step in (0..plan.steps).rev() {
        let t = horizon * (step + 1) as f64 / plan.steps as f64;
        let time_left = horizon - t + epsilon;
        for n in 0..side - 1 {
            let intensity = (target as usize - n) as f64 / time_left;
            let row = &current[n * side..(n + 1) * side];
            let above = &current[(n + 1) * side..(n + 2) * side];
            for d in 0..side {
                let h = row[d];
                let miss_next = if d + 1 < side {
                    above[d + 1]
                } else {
                    above[d] + 2.0 * gamma
                };
                let fill_next = above[d];
                let p_fill = marks.cdf(h);
                let drift = (1.0 - p_fill) * (miss_next - h) + p_fill * (fill_next - h);
                next[n * side + d] = h + plan.dt * intensity * drift;
            }
        }
        // The N = M row never moves; `next` keeps the terminal copy.
        std::mem::swap(&mut current, &mut next);
        if step % plan.stride == 0 {
            let i = step / plan.stride;
            values[i * plane..(i + 1) * plane].copy_from_slice(&current);
        }
    }

    let header = SurfaceHeader {
        schema_version: SURFACE_SCHEMA_VERSION,
        alpha,
        gamma,
        marks: *marks,
        arrivals: ArrivalKind::Pinned { target, epsilon },
        grid: TimeGrid {
            horizon,
            intervals: slices,
        },
        solver_dt: plan.dt,
        d_max: target,
    };
    DiscretionSurface3::from_parts(header, values)
}
