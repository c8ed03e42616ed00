use serde::{Deserialize, Serialize};

use super::grid::TimeGrid;
use crate::error::{Error, Result};
use crate::mpp::{ArrivalKind, MarkDistribution};

pub const SURFACE_SCHEMA_VERSION: u32 = 1;

/// Parameters a surface was solved for; serialized as the JSON header.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceHeader {
    pub schema_version: u32,
    pub alpha: f64,
    pub gamma: f64,
    pub marks: MarkDistribution,
    pub arrivals: ArrivalKind,
    pub grid: TimeGrid,
    /// Backward Euler step actually used (the stored grid may be coarser).
    pub solver_dt: f64,
    pub d_max: u32,
}

impl SurfaceHeader {
    pub fn horizon(&self) -> f64 {
        self.grid.horizon
    }

    /// `2 gamma D + gamma + alpha`: terminal value, and the value on the `N = M` slice.
    pub fn terminal_value(&self, misses: u32) -> f64 {
        terminal_value(self.alpha, self.gamma, misses)
    }
}

pub fn terminal_value(alpha: f64, gamma: f64, misses: u32) -> f64 {
    2.0 * gamma * misses as f64 + gamma + alpha
}

/// Result of a surface lookup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lookup {
    pub value: f64,
    /// The miss count exceeded `d_max` and was clamped to it.
    pub clamped: bool,
}

/// Optimal discretion `h(t, D)` for Poisson arrivals.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretionSurface {
    header: SurfaceHeader,
    values: Vec<f64>,
}

impl DiscretionSurface {
    pub(crate) fn from_parts(header: SurfaceHeader, values: Vec<f64>) -> Result<Self> {
        let expected = header.grid.nodes() * (header.d_max as usize + 1);
        if values.len() != expected {
            return Err(Error::Contract(format!(
                "surface has {} values, grid needs {expected}",
                values.len()
            )));
        }
        Ok(Self { header, values })
    }

    pub fn header(&self) -> &SurfaceHeader {
        &self.header
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.header.grid
    }

    pub fn d_max(&self) -> u32 {
        self.header.d_max
    }

    fn width(&self) -> usize {
        self.header.d_max as usize + 1
    }

    /// Stored value at time node `i` and miss count `d`.
    pub fn node(&self, i: usize, d: u32) -> f64 {
        self.values[i * self.width() + d as usize]
    }

    /// Stored slice at time node `i`, indexed by miss count.
    pub fn slice(&self, i: usize) -> &[f64] {
        let w = self.width();
        &self.values[i * w..(i + 1) * w]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `h(t, D)`: linear in `t` between stored nodes, exact in `D`.
    pub fn query(&self, t: f64, misses: u32) -> Result<Lookup> {
        let b = self.header.grid.locate(t)?;
        let clamped = misses > self.header.d_max;
        let d = misses.min(self.header.d_max);
        let left = self.node(b.index, d);
        let value = if b.weight == 0.0 {
            left
        } else {
            let right = self.node(b.index + 1, d);
            left + b.weight * (right - left)
        };
        Ok(Lookup { value, clamped })
    }

    pub fn value(&self, t: f64, misses: u32) -> Result<f64> {
        Ok(self.query(t, misses)?.value)
    }
}

/// Optimal discretion `h(t, D, N)` for pinned arrivals; `D` and `N` both run over `0..=M`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretionSurface3 {
    header: SurfaceHeader,
    values: Vec<f64>,
}

impl DiscretionSurface3 {
    pub(crate) fn from_parts(header: SurfaceHeader, values: Vec<f64>) -> Result<Self> {
        let side = header.d_max as usize + 1;
        let expected = header.grid.nodes() * side * side;
        if values.len() != expected {
            return Err(Error::Contract(format!(
                "surface has {} values, grid needs {expected}",
                values.len()
            )));
        }
        Ok(Self { header, values })
    }

    pub fn header(&self) -> &SurfaceHeader {
        &self.header
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.header.grid
    }

    /// Target attempt count `M`.
    pub fn target(&self) -> u32 {
        self.header.d_max
    }

    fn side(&self) -> usize {
        self.header.d_max as usize + 1
    }

    pub fn node(&self, i: usize, d: u32, n: u32) -> f64 {
        let s = self.side();
        self.values[(i * s + n as usize) * s + d as usize]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `h(t, D, N)`: linear in `t`, exact in `D` and `N`. Counts beyond `M` clamp.
    pub fn query(&self, t: f64, misses: u32, attempts: u32) -> Result<Lookup> {
        let b = self.header.grid.locate(t)?;
        let m = self.header.d_max;
        let clamped = misses > m || attempts > m;
        let (d, n) = (misses.min(m), attempts.min(m));
        let left = self.node(b.index, d, n);
        let value = if b.weight == 0.0 {
            left
        } else {
            let right = self.node(b.index + 1, d, n);
            left + b.weight * (right - left)
        };
        Ok(Lookup { value, clamped })
    }

    pub fn value(&self, t: f64, misses: u32, attempts: u32) -> Result<f64> {
        Ok(self.query(t, misses, attempts)?.value)
    }
}
