//! Experiment configuration.
//!
//! The file is TOML with fixed sections; unknown keys anywhere are rejected.
//!
//! ```toml
//! [arrivals]
//! model = "poisson"      # or "pinned"
//! rate = 100.0           # poisson only
//! target = 100           # pinned only (M)
//! epsilon = 0.1          # pinned only
//! horizon = 1.0
//!
//! [marks]
//! kind = "normal"        # normal | uniform
//! mean = 0.2
//! std = 1.0
//!
//! [penalties]
//! alpha = 0.0
//! gamma = 0.07
//! gamma_sweep = [0.01, 0.03, 0.1]   # optional
//! alpha_sweep = [0.0, 0.5, 1.0]     # optional
//!
//! [policy]
//! kind = "optimal"       # or "fixed", with `delta`
//!
//! [simulation]
//! paths = 10000
//! seed = 1
//! risk_fraction = 0.1    # q in P[D_T < q N_T]
//! p_target = 0.95
//! sample_paths = 3
//!
//! [solver]               # all optional
//! dt = 1e-4
//! d_max = 160
//! max_slices = 2000
//!
//! [output]
//! dir = "out"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mpp::{ArrivalModel, MarkDistribution};
use crate::pide::{Penalties, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrivalChoice {
    Poisson,
    Pinned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrivalsSection {
    pub model: ArrivalChoice,
    #[serde(default)]
    pub rate: Option<f64>,
    #[serde(default)]
    pub target: Option<u32>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    pub horizon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarkChoice {
    Normal,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarksSection {
    pub kind: MarkChoice,
    #[serde(default)]
    pub mean: Option<f64>,
    #[serde(default)]
    pub std: Option<f64>,
    #[serde(default)]
    pub lo: Option<f64>,
    #[serde(default)]
    pub hi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenaltiesSection {
    pub alpha: f64,
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_sweep: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_sweep: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicyChoice {
    /// Solve the optimal surface for the configured penalties.
    Optimal,
    /// Send every order with discretion `delta`.
    Fixed { delta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub paths: usize,
    pub seed: u64,
    #[serde(default = "default_risk_fraction")]
    pub risk_fraction: f64,
    #[serde(default = "default_p_target")]
    pub p_target: f64,
    #[serde(default = "default_sample_paths")]
    pub sample_paths: usize,
}

fn default_risk_fraction() -> f64 {
    0.1
}

fn default_p_target() -> f64 {
    0.95
}

fn default_sample_paths() -> usize {
    3
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_max: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_slices: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub arrivals: ArrivalsSection,
    pub marks: MarksSection,
    pub penalties: PenaltiesSection,
    #[serde(default = "default_policy")]
    pub policy: PolicyChoice,
    pub simulation: SimulationSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_policy() -> PolicyChoice {
    PolicyChoice::Optimal
}

fn field(path: &str, reason: impl std::fmt::Display) -> Error {
    Error::Config(format!("{path}: {reason}"))
}

impl ExperimentConfig {
    /// Poisson(100) arrivals on `[0, 1]`, `N(0.2, 1)` marks, `alpha = 0`,
    /// `gamma = 0.07`, 10,000 paths.
    pub fn poisson_baseline() -> Self {
        Self {
            arrivals: ArrivalsSection {
                model: ArrivalChoice::Poisson,
                rate: Some(100.0),
                target: None,
                epsilon: None,
                horizon: 1.0,
            },
            marks: MarksSection {
                kind: MarkChoice::Normal,
                mean: Some(0.2),
                std: Some(1.0),
                lo: None,
                hi: None,
            },
            penalties: PenaltiesSection {
                alpha: 0.0,
                gamma: 0.07,
                gamma_sweep: None,
                alpha_sweep: None,
            },
            policy: PolicyChoice::Optimal,
            simulation: SimulationSection {
                paths: 10_000,
                seed: 1,
                risk_fraction: default_risk_fraction(),
                p_target: default_p_target(),
                sample_paths: default_sample_paths(),
            },
            solver: SolverSection::default(),
            output: OutputSection::default(),
        }
    }

    /// Same as [`Self::poisson_baseline`] with pinned arrivals, `M = 100`, `eps = 0.1`.
    pub fn pinned_baseline() -> Self {
        let mut c = Self::poisson_baseline();
        c.arrivals = ArrivalsSection {
            model: ArrivalChoice::Pinned,
            rate: None,
            target: Some(100),
            epsilon: Some(0.1),
            horizon: 1.0,
        };
        c
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn arrival_model(&self) -> Result<ArrivalModel> {
        let a = &self.arrivals;
        let model = match a.model {
            ArrivalChoice::Poisson => {
                let rate = a.rate.ok_or_else(|| field("arrivals.rate", "required for poisson arrivals"))?;
                ArrivalModel::poisson(rate, a.horizon)
            }
            ArrivalChoice::Pinned => {
                let target = a
                    .target
                    .ok_or_else(|| field("arrivals.target", "required for pinned arrivals"))?;
                let epsilon = a
                    .epsilon
                    .ok_or_else(|| field("arrivals.epsilon", "required for pinned arrivals"))?;
                ArrivalModel::pinned(target, epsilon, a.horizon)
            }
        };
        model.map_err(|e| match e {
            Error::InvalidParameter { name, reason } => field(&format!("arrivals.{name}"), reason),
            other => other,
        })
    }

    pub fn mark_distribution(&self) -> Result<MarkDistribution> {
        let m = &self.marks;
        let dist = match m.kind {
            MarkChoice::Normal => MarkDistribution::normal(
                m.mean.ok_or_else(|| field("marks.mean", "required for normal marks"))?,
                m.std.ok_or_else(|| field("marks.std", "required for normal marks"))?,
            ),
            MarkChoice::Uniform => MarkDistribution::uniform(
                m.lo.ok_or_else(|| field("marks.lo", "required for uniform marks"))?,
                m.hi.ok_or_else(|| field("marks.hi", "required for uniform marks"))?,
            ),
        };
        dist.map_err(|e| match e {
            Error::InvalidParameter { name, reason } => field(&format!("marks.{name}"), reason),
            other => other,
        })
    }

    pub fn penalties(&self) -> Result<Penalties> {
        Penalties::new(self.penalties.alpha, self.penalties.gamma).map_err(|e| match e {
            Error::InvalidParameter { name, reason } => field(&format!("penalties.{name}"), reason),
            other => other,
        })
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            dt: self.solver.dt,
            d_max: self.solver.d_max,
            max_slices: self.solver.max_slices,
        }
    }

    /// Checks every field and reports the first problem with its dotted path.
    pub fn validate(&self) -> Result<()> {
        self.arrival_model()?;
        self.mark_distribution()?;
        self.penalties()?;
        for (name, list) in [
            ("penalties.gamma_sweep", &self.penalties.gamma_sweep),
            ("penalties.alpha_sweep", &self.penalties.alpha_sweep),
        ] {
            if let Some(list) = list {
                if list.is_empty() {
                    return Err(field(name, "sweep list must not be empty"));
                }
                if let Some(bad) = list.iter().find(|x| !x.is_finite()) {
                    return Err(field(name, format!("non-finite entry {bad}")));
                }
                if name == "penalties.gamma_sweep" {
                    if let Some(bad) = list.iter().find(|&&x| x < 0.0) {
                        return Err(field(name, format!("gamma must be non-negative, got {bad}")));
                    }
                }
            }
        }
        if let PolicyChoice::Fixed { delta } = self.policy {
            if !delta.is_finite() {
                return Err(field("policy.delta", "must be finite"));
            }
        }
        let s = &self.simulation;
        if s.paths == 0 {
            return Err(field("simulation.paths", "must be at least 1"));
        }
        if !(s.risk_fraction > 0.0 && s.risk_fraction < 1.0) {
            return Err(field("simulation.risk_fraction", format!("must lie in (0, 1), got {}", s.risk_fraction)));
        }
        if !(s.p_target > 0.0 && s.p_target <= 1.0) {
            return Err(field("simulation.p_target", format!("must lie in (0, 1], got {}", s.p_target)));
        }
        if let Some(dt) = self.solver.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(field("solver.dt", format!("must be positive, got {dt}")));
            }
        }
        if self.solver.d_max == Some(0) {
            return Err(field("solver.d_max", "must be at least 1"));
        }
        if self.solver.max_slices == Some(0) {
            return Err(field("solver.max_slices", "must be at least 1"));
        }
        Ok(())
    }
}
