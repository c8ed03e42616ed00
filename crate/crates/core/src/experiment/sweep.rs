use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::config::ExperimentConfig;
use super::runner::{create_file, optimal_policy, simulate};
use crate::error::{Error, Result};
use crate::pide::Penalties;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Gamma,
    Alpha,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub param: f64,
    pub mean_cost: f64,
    pub se_cost: f64,
    pub mean_misses: f64,
    pub se_misses: f64,
    pub mean_miss_ratio: f64,
    pub se_miss_ratio: f64,
    pub p_risk: f64,
    pub mean_cost_per_fill: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
}

/// Runs the optimal policy at each grid value of `axis`, the other penalty
/// held at its configured value. Every grid point reuses the configured seed,
/// so the points share arrivals and marks path by path.
pub fn sweep_parameters(config: &ExperimentConfig, axis: SweepAxis, values: &[f64]) -> Result<SweepTable> {
    config.validate()?;
    if values.len() < 2 {
        return Err(Error::Config(format!(
            "penalties.{}_sweep: need at least two values",
            match axis {
                SweepAxis::Gamma => "gamma",
                SweepAxis::Alpha => "alpha",
            }
        )));
    }
    let base = config.penalties()?;
    let rows = values
        .iter()
        .map(|&v| {
            let penalties = match axis {
                SweepAxis::Gamma => Penalties::new(base.alpha, v)?,
                SweepAxis::Alpha => Penalties::new(v, base.gamma)?,
            };
            let policy = optimal_policy(config, penalties)?;
            let s = simulate(config, &policy)?.summary;
            Ok(SweepRow {
                param: v,
                mean_cost: s.mean_cost,
                se_cost: s.se_cost,
                mean_misses: s.mean_misses,
                se_misses: s.se_misses,
                mean_miss_ratio: s.mean_miss_ratio,
                se_miss_ratio: s.se_miss_ratio,
                p_risk: s.p_risk,
                mean_cost_per_fill: s.mean_cost_per_fill,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable { axis, rows })
}

/// Sweeps whichever list the config carries, preferring `gamma_sweep`.
pub fn sweep_from_config(config: &ExperimentConfig) -> Result<SweepTable> {
    if let Some(g) = &config.penalties.gamma_sweep {
        sweep_parameters(config, SweepAxis::Gamma, g)
    } else if let Some(a) = &config.penalties.alpha_sweep {
        sweep_parameters(config, SweepAxis::Alpha, a)
    } else {
        Err(Error::Config(
            "penalties: set gamma_sweep or alpha_sweep to run a sweep".into(),
        ))
    }
}

/// Point where a sweep column crosses zero, by linear interpolation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub param: f64,
    pub mean_miss_ratio: f64,
}

impl SweepTable {
    /// `param,mean_C,se_C,mean_D,mean_miss_ratio,p_risk,mean_cost_per_fill`
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "param",
            "mean_C",
            "se_C",
            "mean_D",
            "mean_miss_ratio",
            "p_risk",
            "mean_cost_per_fill",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.param.to_string(),
                r.mean_cost.to_string(),
                r.se_cost.to_string(),
                r.mean_misses.to_string(),
                r.mean_miss_ratio.to_string(),
                r.p_risk.to_string(),
                r.mean_cost_per_fill.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<sweep csv>", e))?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_csv(create_file(path)?)
    }

    /// First sign change of the mean cost per fill; the miss ratio is
    /// interpolated at the same point.
    pub fn cost_neutral_point(&self) -> Option<Crossing> {
        self.rows.windows(2).find_map(|w| {
            let (a, b) = (&w[0], &w[1]);
            let (ya, yb) = (a.mean_cost_per_fill, b.mean_cost_per_fill);
            if ya == 0.0 {
                return Some(Crossing {
                    param: a.param,
                    mean_miss_ratio: a.mean_miss_ratio,
                });
            }
            if yb != 0.0 && ya.signum() == yb.signum() {
                return None;
            }
            let s = ya / (ya - yb);
            Some(Crossing {
                param: a.param + s * (b.param - a.param),
                mean_miss_ratio: a.mean_miss_ratio + s * (b.mean_miss_ratio - a.mean_miss_ratio),
            })
        })
    }
}
