use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal::{std_cdf, std_pdf, INV_SQRT_2PI};

/// Law of the price shock `Z` carried by each trade attempt.
///
/// Positive marks are price deteriorations (the order has to walk the book
/// further to fill), negative marks are price improvements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MarkDistribution {
    Normal { mean: f64, std: f64 },
    Uniform { lo: f64, hi: f64 },
    TwoPoint { z1: f64, z2: f64, p1: f64 },
}

impl MarkDistribution {
    pub fn normal(mean: f64, std: f64) -> Result<Self> {
        Self::Normal { mean, std }.validated()
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Self::Uniform { lo, hi }.validated()
    }

    pub fn two_point(z1: f64, z2: f64, p1: f64) -> Result<Self> {
        Self::TwoPoint { z1, z2, p1 }.validated()
    }

    /// Checks the parameter invariants; used after deserialization too.
    pub fn validated(self) -> Result<Self> {
        match self {
            Self::Normal { mean, std } => {
                if !mean.is_finite() {
                    return Err(Error::param("mean", "must be finite"));
                }
                if !(std > 0.0 && std.is_finite()) {
                    return Err(Error::param("std", format!("must be positive, got {std}")));
                }
            }
            Self::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(Error::param("lo", format!("need lo < hi, got [{lo}, {hi}]")));
                }
            }
            Self::TwoPoint { z1, z2, p1 } => {
                if !(z1.is_finite() && z2.is_finite()) {
                    return Err(Error::param("z1", "atoms must be finite"));
                }
                if !(0.0..=1.0).contains(&p1) {
                    return Err(Error::param("p1", format!("must lie in [0, 1], got {p1}")));
                }
            }
        }
        Ok(self)
    }

    /// `P(Z <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Self::Normal { mean, std } => std_cdf((x - mean) / std),
            Self::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Self::TwoPoint { z1, z2, p1 } => {
                let mut p = 0.0;
                if z1 <= x {
                    p += p1;
                }
                if z2 <= x {
                    p += 1.0 - p1;
                }
                p
            }
        }
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        match *self {
            Self::Normal { mean, std } => Ok(std_pdf((x - mean) / std) / std),
            Self::Uniform { lo, hi } => Ok(if (lo..=hi).contains(&x) {
                1.0 / (hi - lo)
            } else {
                0.0
            }),
            Self::TwoPoint { .. } => Err(Error::Unsupported(
                "two-point marks are atomic and have no density".into(),
            )),
        }
    }

    /// `r(x) = E[Z; Z <= x]`, the first moment of `Z` truncated from above.
    pub fn truncated_first_moment(&self, x: f64) -> f64 {
        match *self {
            Self::Normal { mean, std } => {
                if x == f64::NEG_INFINITY {
                    return 0.0;
                }
                if x == f64::INFINITY {
                    return mean;
                }
                let u = (x - mean) / std;
                mean * std_cdf(u) - std * std_pdf(u)
            }
            Self::Uniform { lo, hi } => {
                let x = x.clamp(lo, hi);
                (x * x - lo * lo) / (2.0 * (hi - lo))
            }
            Self::TwoPoint { z1, z2, p1 } => {
                let mut r = 0.0;
                if z1 <= x {
                    r += p1 * z1;
                }
                if z2 <= x {
                    r += (1.0 - p1) * z2;
                }
                r
            }
        }
    }

    pub fn mean(&self) -> f64 {
        self.truncated_first_moment(f64::INFINITY)
    }

    /// Lipschitz constant of the CDF (the density supremum), `None` for atomic laws.
    pub fn lipschitz_constant(&self) -> Option<f64> {
        match *self {
            Self::Normal { std, .. } => Some(INV_SQRT_2PI / std),
            Self::Uniform { lo, hi } => Some(1.0 / (hi - lo)),
            Self::TwoPoint { .. } => None,
        }
    }

    pub fn is_continuous(&self) -> bool {
        self.lipschitz_constant().is_some()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Normal { mean, std } => {
                let n: f64 = rng.sample(StandardNormal);
                mean + std * n
            }
            Self::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            Self::TwoPoint { z1, z2, p1 } => {
                if rng.random::<f64>() < p1 {
                    z1
                } else {
                    z2
                }
            }
        }
    }
}
