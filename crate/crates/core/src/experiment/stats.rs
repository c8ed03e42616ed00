use serde::{Deserialize, Serialize};

use crate::ensemble::mean_and_se;
use crate::error::{Error, Result};
use crate::policy::PathTotals;

/// Terminal metrics of one simulated path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathRecord {
    pub path_id: u64,
    pub attempts: u32,
    pub misses: u32,
    pub cost: f64,
}

impl PathRecord {
    pub fn from_totals(path_id: u64, totals: &PathTotals) -> Self {
        Self {
            path_id,
            attempts: totals.attempts,
            misses: totals.misses,
            cost: totals.cost,
        }
    }

    /// `D_T / N_T`; undefined without attempts.
    pub fn miss_ratio(&self) -> Option<f64> {
        (self.attempts > 0).then(|| self.misses as f64 / self.attempts as f64)
    }

    /// `C_T / (N_T - D_T)`; undefined without fills.
    pub fn cost_per_fill(&self) -> Option<f64> {
        let fills = self.attempts - self.misses;
        (fills > 0).then(|| self.cost / fills as f64)
    }

    /// `D_T < q N_T`; a path without attempts satisfies it.
    pub fn meets_risk(&self, fraction: f64) -> bool {
        self.attempts == 0 || (self.misses as f64) < fraction * self.attempts as f64
    }
}

/// Fraction of paths with `D_T < q N_T`.
pub fn risk_metric(records: &[PathRecord], fraction: f64) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::param("records", "need at least one path"));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::param("fraction", format!("must lie in (0, 1), got {fraction}")));
    }
    let hits = records.iter().filter(|r| r.meets_risk(fraction)).count();
    Ok(hits as f64 / records.len() as f64)
}

/// Ensemble summary; every field is recomputable from the per-path records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n_paths: usize,
    pub mean_attempts: f64,
    pub mean_cost: f64,
    pub se_cost: f64,
    pub mean_misses: f64,
    pub se_misses: f64,
    pub mean_miss_ratio: f64,
    pub se_miss_ratio: f64,
    /// Over paths with at least one fill.
    pub mean_cost_per_fill: f64,
    pub se_cost_per_fill: f64,
    pub paths_without_fills: usize,
    pub risk_fraction: f64,
    /// `P[D_T < risk_fraction * N_T]`
    pub p_risk: f64,
    pub max_attempts: u32,
}

impl Summary {
    pub fn from_records(records: &[PathRecord], risk_fraction: f64) -> Result<Self> {
        let p_risk = risk_metric(records, risk_fraction)?;
        let attempts: Vec<f64> = records.iter().map(|r| r.attempts as f64).collect();
        let costs: Vec<f64> = records.iter().map(|r| r.cost).collect();
        let misses: Vec<f64> = records.iter().map(|r| r.misses as f64).collect();
        let ratios: Vec<f64> = records.iter().filter_map(PathRecord::miss_ratio).collect();
        let per_fill: Vec<f64> = records.iter().filter_map(PathRecord::cost_per_fill).collect();
        let (mean_cost, se_cost) = mean_and_se(&costs);
        let (mean_misses, se_misses) = mean_and_se(&misses);
        let (mean_miss_ratio, se_miss_ratio) = mean_and_se(&ratios);
        let (mean_cost_per_fill, se_cost_per_fill) = mean_and_se(&per_fill);
        Ok(Self {
            n_paths: records.len(),
            mean_attempts: mean_and_se(&attempts).0,
            mean_cost,
            se_cost,
            mean_misses,
            se_misses,
            mean_miss_ratio,
            se_miss_ratio,
            mean_cost_per_fill,
            se_cost_per_fill,
            paths_without_fills: records.len() - per_fill.len(),
            risk_fraction,
            p_risk,
            max_attempts: records.iter().map(|r| r.attempts).max().unwrap_or(0),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceStats {
    pub records: Vec<PathRecord>,
    pub summary: Summary,
}

impl PerformanceStats {
    pub fn from_totals(totals: &[PathTotals], risk_fraction: f64) -> Result<Self> {
        let records: Vec<PathRecord> = totals
            .iter()
            .enumerate()
            .map(|(i, t)| PathRecord::from_totals(i as u64, t))
            .collect();
        let summary = Summary::from_records(&records, risk_fraction)?;
        Ok(Self { records, summary })
    }
}

/// Histogram with explicit bin edges (`edges.len() == counts.len() + 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

const MAX_BINS: usize = 1000;

/// Freedman–Diaconis binning: width `2 IQR n^(-1/3)`. Falls back to one bin
/// when the data have no spread.
pub fn freedman_diaconis(values: &[f64]) -> Histogram {
    let mut xs: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if xs.is_empty() {
        return Histogram {
            edges: vec![0.0, 1.0],
            counts: vec![0],
        };
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    let (lo, hi) = (xs[0], xs[n - 1]);
    let iqr = quantile(&xs, 0.75) - quantile(&xs, 0.25);
    let width = 2.0 * iqr / (n as f64).cbrt();
    let bins = if width > 0.0 && hi > lo {
        (((hi - lo) / width).ceil() as usize).clamp(1, MAX_BINS)
    } else {
        1
    };
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
    let step = (hi - lo) / bins as f64;
    let mut edges: Vec<f64> = (0..bins).map(|k| lo + step * k as f64).collect();
    edges.push(hi);
    let mut counts = vec![0u64; bins];
    for x in xs {
        let k = (((x - lo) / step) as usize).min(bins - 1);
        counts[k] += 1;
    }
    Histogram { edges, counts }
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}
