use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform time grid `t_i = i * horizon / intervals`, `i = 0..=intervals`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub horizon: f64,
    pub intervals: usize,
}

/// Position of a query time on the grid: left node and linear weight of the right node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Bracket {
    pub index: usize,
    pub weight: f64,
}

// Queries this close (in units of one interval) to a node snap to it.
const SNAP: f64 = 1e-9;

impl TimeGrid {
    pub fn nodes(&self) -> usize {
        self.intervals + 1
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.intervals as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        if i == self.intervals {
            self.horizon
        } else {
            self.horizon * i as f64 / self.intervals as f64
        }
    }

    pub(crate) fn locate(&self, t: f64) -> Result<Bracket> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::OutOfRange {
                name: "t",
                value: t,
                lo: 0.0,
                hi: self.horizon,
            });
        }
        let x = t / self.horizon * self.intervals as f64;
        let nearest = x.round();
        if (x - nearest).abs() <= SNAP {
            return Ok(Bracket {
                index: nearest as usize,
                weight: 0.0,
            });
        }
        let index = (x.floor() as usize).min(self.intervals - 1);
        Ok(Bracket {
            index,
            weight: x - index as f64,
        })
    }
}

/// Step-size and storage controls shared by both PIDE solvers.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Backward Euler step; defaults to `min(1e-4 * T, 1 / (10 * intensity_bound))`.
    pub dt: Option<f64>,
    /// Largest miss count on the grid (Poisson model only).
    pub d_max: Option<u32>,
    /// Cap on stored time slices; the solver steps finer and keeps every k-th slice.
    pub max_slices: Option<usize>,
}

pub(crate) struct Stepping {
    pub steps: usize,
    pub stride: usize,
    pub dt: f64,
}

impl Stepping {
    /// Chooses the number of solver steps so that `steps` is a multiple of the
    /// storage stride and the effective step never exceeds the requested one.
    pub fn plan(horizon: f64, dt: f64, max_slices: usize) -> Self {
        let raw = (horizon / dt).ceil().max(1.0) as usize;
        let max_slices = max_slices.max(1);
        let (stride, slices) = if raw <= max_slices {
            (1, raw)
        } else {
            let stride = raw.div_ceil(max_slices);
            (stride, raw.div_ceil(stride))
        };
        let steps = stride * slices;
        Self {
            steps,
            stride,
            dt: horizon / steps as f64,
        }
    }

    pub fn slices(&self) -> usize {
        self.steps / self.stride
    }
}

pub(crate) fn default_dt(horizon: f64, intensity_bound: f64) -> f64 {
    let by_horizon = 1e-4 * horizon;
    if intensity_bound > 0.0 {
        by_horizon.min(1.0 / (10.0 * intensity_bound))
    } else {
        by_horizon
    }
}

pub(crate) fn check_dt(dt: f64, intensity_bound: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param("dt", format!("must be positive, got {dt}")));
    }
    if intensity_bound > 0.0 {
        let limit = 1.0 / (10.0 * intensity_bound);
        if dt > limit * (1.0 + 1e-12) {
            return Err(Error::Stability { dt, limit });
        }
    }
    Ok(())
}
