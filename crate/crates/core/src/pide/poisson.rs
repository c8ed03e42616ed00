use super::grid::{check_dt, default_dt, SolverOptions, Stepping, TimeGrid};
use super::surface::{terminal_value, DiscretionSurface, SurfaceHeader, SURFACE_SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::mpp::{ArrivalKind, MarkDistribution};

const DEFAULT_MAX_SLICES: usize = 2000;

/// Parameters of the optimal-discretion problem shared by both arrival models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Penalties {
    /// Linear penalty per missed trade.
    pub alpha: f64,
    /// Quadratic penalty on the terminal miss count.
    pub gamma: f64,
}

impl Penalties {
    pub fn new(alpha: f64, gamma: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::param("alpha", "must be finite"));
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::param("gamma", format!("must be non-negative, got {gamma}")));
        }
        Ok(Self { alpha, gamma })
    }
}

/// `ceil(lambda T + 6 sqrt(lambda T))`, at least 1.
pub fn default_d_max(rate: f64, horizon: f64) -> u32 {
    let mean = rate * horizon;
    ((mean + 6.0 * mean.sqrt()).ceil() as u32).max(1)
}

pub(crate) fn require_continuous(marks: &MarkDistribution) -> Result<()> {
    if marks.is_continuous() {
        Ok(())
    } else {
        Err(Error::Unsupported(
            "the discretion PIDE needs a Lipschitz mark CDF; atomic marks are rejected".into(),
        ))
    }
}

/// Solves `0 = h_t + lambda (1 - Phi(h)) (h(t, D+1) - h(t, D))` backward from
/// `h(T, D) = 2 gamma D + gamma + alpha` with explicit Euler steps.
///
/// The miss axis is truncated at `d_max` with the closure
/// `h(t, d_max + 1) = h(t, d_max) + 2 gamma`.
pub fn solve_poisson_surface(
    rate: f64,
    penalties: Penalties,
    horizon: f64,
    marks: &MarkDistribution,
    options: SolverOptions,
) -> Result<DiscretionSurface> {
    let Penalties { alpha, gamma } = Penalties::new(penalties.alpha, penalties.gamma)?;
    if !(rate >= 0.0 && rate.is_finite()) {
        return Err(Error::param("rate", format!("must be non-negative, got {rate}")));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::param("horizon", format!("must be positive, got {horizon}")));
    }
    require_continuous(marks)?;
    let dt = options.dt.unwrap_or_else(|| default_dt(horizon, rate));
    check_dt(dt, rate)?;
    let d_max = options.d_max.unwrap_or_else(|| default_d_max(rate, horizon));
    if d_max < 1 {
        return Err(Error::param("d_max", "must be at least 1"));
    }

    let plan = Stepping::plan(horizon, dt, options.max_slices.unwrap_or(DEFAULT_MAX_SLICES));
    let width = d_max as usize + 1;
    let slices = plan.slices();
    let mut values = vec![0.0; (slices + 1) * width];

    let mut current: Vec<f64> = (0..=d_max).map(|d| terminal_value(alpha, gamma, d)).collect();
    let mut next = vec![0.0; width];
    values[slices * width..].copy_from_slice(&current);

    for step in (0..plan.steps).rev() {
        for d in 0..width {
            let h = current[d];
            let up = if d + 1 < width {
                current[d + 1]
            } else {
                h + 2.0 * gamma
            };
            let miss_rate = rate * (1.0 - marks.cdf(h));
            next[d] = h + plan.dt * miss_rate * (up - h);
        }
        std::mem::swap(&mut current, &mut next);
        if step % plan.stride == 0 {
            let i = step / plan.stride;
            values[i * width..(i + 1) * width].copy_from_slice(&current);
        }
    }

    let header = SurfaceHeader {
        schema_version: SURFACE_SCHEMA_VERSION,
        alpha,
        gamma,
        marks: *marks,
        arrivals: ArrivalKind::Poisson { rate },
        grid: TimeGrid {
            horizon,
            intervals: slices,
        },
        solver_dt: plan.dt,
        d_max,
    };
    DiscretionSurface::from_parts(header, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn normal() -> MarkDistribution {
        MarkDistribution::normal(0.2, 1.0).unwrap()
    }

    fn coarse(dt: f64) -> SolverOptions {
        SolverOptions {
            dt: Some(dt),
            ..Default::default()
        }
    }

    #[test]
    fn zero_gamma_is_flat() {
        let s = solve_poisson_surface(
            100.0,
            Penalties::new(0.7, 0.0).unwrap(),
            1.0,
            &normal(),
            coarse(1e-3),
        )
        .unwrap();
        assert!(s.values().iter().all(|&h| h == 0.7));
    }

    #[test]
    fn rejects_atomic_marks_and_large_steps() {
        let tp = MarkDistribution::two_point(-1.0, 1.0, 0.5).unwrap();
        let p = Penalties::new(0.0, 0.1).unwrap();
        assert!(matches!(
            solve_poisson_surface(100.0, p, 1.0, &tp, coarse(1e-3)),
            Err(Error::Unsupported(_))
        ));
        let e = solve_poisson_surface(100.0, p, 1.0, &normal(), coarse(0.01)).unwrap_err();
        assert!(matches!(e, Error::Stability { .. }));
        assert!(e.is_numerical());
    }

    #[test]
    fn default_grid_sizes() {
        assert_eq!(default_d_max(100.0, 1.0), 160);
        assert_eq!(default_d_max(0.0, 1.0), 1);
        let s = solve_poisson_surface(
            100.0,
            Penalties::new(0.0, 0.1).unwrap(),
            1.0,
            &normal(),
            SolverOptions::default(),
        )
        .unwrap();
        assert_eq!(s.d_max(), 160);
        assert!((s.header().solver_dt - 1e-4).abs() < 1e-18);
    }

    #[test]
    fn terminal_slice_is_exact() {
        let s = solve_poisson_surface(
            50.0,
            Penalties::new(0.3, 0.05).unwrap(),
            1.0,
            &normal(),
            coarse(1e-3),
        )
        .unwrap();
        let last = s.grid().intervals;
        for d in 0..=s.d_max() {
            assert_eq!(s.node(last, d), 2.0 * 0.05 * d as f64 + 0.05 + 0.3);
        }
    }

    #[test]
    fn query_examples() {
        let s = solve_poisson_surface(
            100.0,
            Penalties::new(0.0, 0.1).unwrap(),
            1.0,
            &normal(),
            coarse(1e-3),
        )
        .unwrap();
        assert!((s.value(1.0, 3).unwrap() - 0.7).abs() < 1e-15);
        let g = *s.grid();
        assert_eq!(s.value(g.time(17), 5).unwrap(), s.node(17, 5));
        let mid = 0.5 * (g.time(17) + g.time(18));
        let expect = 0.5 * (s.node(17, 5) + s.node(18, 5));
        assert!((s.value(mid, 5).unwrap() - expect).abs() < 1e-12);
        let l = s.query(0.5, s.d_max() + 40).unwrap();
        assert!(l.clamped);
        assert_eq!(l.value, s.value(0.5, s.d_max()).unwrap());
        assert!(matches!(s.query(1.5, 0), Err(Error::OutOfRange { .. })));
    }
}
