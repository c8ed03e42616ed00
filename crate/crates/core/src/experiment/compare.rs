use std::path::Path;

use serde::Serialize;

use super::config::ExperimentConfig;
use super::runner::ensure_dir;
use super::sweep::{sweep_parameters, SweepAxis, SweepRow, SweepTable};
use crate::error::{Error, Result};

/// Grids for the fixed (`gamma = 0`, varying `alpha`) and adaptive
/// (`alpha = 0`, varying `gamma`) families.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareSpec {
    pub alpha_grid: Vec<f64>,
    pub gamma_grid: Vec<f64>,
    pub p_target: f64,
}

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|k| lo + step * k as f64).collect()
}

impl CompareSpec {
    /// `alpha` in `[0, 2.5]` step 0.0125 and `gamma` in `[0.02, 0.16]` step 0.0025.
    pub fn standard(p_target: f64) -> Self {
        Self {
            alpha_grid: grid(0.0, 2.5, 0.0125),
            gamma_grid: grid(0.02, 0.16, 0.0025),
            p_target,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FamilyOptimum {
    pub param: f64,
    pub mean_cost: f64,
    pub se_cost: f64,
    pub mean_misses: f64,
    pub p_risk: f64,
}

impl From<&SweepRow> for FamilyOptimum {
    fn from(r: &SweepRow) -> Self {
        Self {
            param: r.param,
            mean_cost: r.mean_cost,
            se_cost: r.se_cost,
            mean_misses: r.mean_misses,
            p_risk: r.p_risk,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub p_target: f64,
    pub risk_fraction: f64,
    /// `None` when no grid point meets the risk constraint.
    pub fixed: Option<FamilyOptimum>,
    pub adaptive: Option<FamilyOptimum>,
    /// Fixed-family minimum cost minus adaptive-family minimum cost.
    pub gap: Option<f64>,
    pub fixed_table: SweepTable,
    pub adaptive_table: SweepTable,
}

/// Lowest mean cost among rows with `p_risk >= p_target`.
pub fn constrained_minimum(table: &SweepTable, p_target: f64) -> Option<FamilyOptimum> {
    table
        .rows
        .iter()
        .filter(|r| r.p_risk >= p_target)
        .min_by(|a, b| a.mean_cost.total_cmp(&b.mean_cost))
        .map(FamilyOptimum::from)
}

/// Cheapest member of each family subject to `P[D_T < q N_T] >= p_target`.
/// Both families run on the configured arrivals, marks and seed.
pub fn compare_fixed_vs_adaptive(config: &ExperimentConfig, spec: &CompareSpec) -> Result<ComparisonReport> {
    if !(spec.p_target > 0.0 && spec.p_target <= 1.0) {
        return Err(Error::Config(format!(
            "p_target: must lie in (0, 1], got {}",
            spec.p_target
        )));
    }
    let mut fixed_cfg = config.clone();
    fixed_cfg.penalties.gamma = 0.0;
    let fixed_table = sweep_parameters(&fixed_cfg, SweepAxis::Alpha, &spec.alpha_grid)?;

    let mut adaptive_cfg = config.clone();
    adaptive_cfg.penalties.alpha = 0.0;
    let adaptive_table = sweep_parameters(&adaptive_cfg, SweepAxis::Gamma, &spec.gamma_grid)?;

    let fixed = constrained_minimum(&fixed_table, spec.p_target);
    let adaptive = constrained_minimum(&adaptive_table, spec.p_target);
    let gap = match (fixed, adaptive) {
        (Some(f), Some(a)) => Some(f.mean_cost - a.mean_cost),
        _ => None,
    };
    Ok(ComparisonReport {
        p_target: spec.p_target,
        risk_fraction: config.simulation.risk_fraction,
        fixed,
        adaptive,
        gap,
        fixed_table,
        adaptive_table,
    })
}

impl ComparisonReport {
    /// Writes `compare_fixed.csv`, `compare_adaptive.csv` and `compare.json`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        ensure_dir(dir)?;
        self.fixed_table.save(&dir.join("compare_fixed.csv"))?;
        self.adaptive_table.save(&dir.join("compare_adaptive.csv"))?;
        #[derive(Serialize)]
        struct Brief<'a> {
            p_target: f64,
            risk_fraction: f64,
            fixed: &'a Option<FamilyOptimum>,
            adaptive: &'a Option<FamilyOptimum>,
            gap: Option<f64>,
        }
        let brief = Brief {
            p_target: self.p_target,
            risk_fraction: self.risk_fraction,
            fixed: &self.fixed,
            adaptive: &self.adaptive,
            gap: self.gap,
        };
        let path = dir.join("compare.json");
        let json = serde_json::to_string_pretty(&brief)? + "\n";
        std::fs::write(&path, json).map_err(|e| Error::io(&path, e))
    }
}
