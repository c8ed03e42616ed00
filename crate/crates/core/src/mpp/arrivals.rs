use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use serde::{Deserialize, Serialize};

use super::MarkDistribution;
use crate::error::{Error, Result};
use crate::rng::path_rng;

/// Intensity of the agent's trade attempts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArrivalKind {
    /// Homogeneous Poisson arrivals at `rate` attempts per unit time.
    Poisson { rate: f64 },
    /// State-dependent intensity `(target - N_{t-}) / (T - t + epsilon)` that
    /// drives the count towards `target` by the horizon.
    Pinned { target: u32, epsilon: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrivalModel {
    pub kind: ArrivalKind,
    pub horizon: f64,
}

impl ArrivalModel {
    pub fn poisson(rate: f64, horizon: f64) -> Result<Self> {
        Self {
            kind: ArrivalKind::Poisson { rate },
            horizon,
        }
        .validated()
    }

    pub fn pinned(target: u32, epsilon: f64, horizon: f64) -> Result<Self> {
        Self {
            kind: ArrivalKind::Pinned { target, epsilon },
            horizon,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        check_horizon(self.horizon)?;
        match self.kind {
            ArrivalKind::Poisson { rate } => check_rate(rate)?,
            ArrivalKind::Pinned { epsilon, .. } => check_epsilon(epsilon)?,
        }
        Ok(self)
    }

    /// Upper bound on the intensity: `rate`, or `target / epsilon` when pinned.
    pub fn intensity_bound(&self) -> f64 {
        match self.kind {
            ArrivalKind::Poisson { rate } => rate,
            ArrivalKind::Pinned { target, epsilon } => target as f64 / epsilon,
        }
    }

    /// Intensity at time `t` given `attempts` arrivals strictly before `t`.
    pub fn intensity(&self, t: f64, attempts: u32) -> f64 {
        match self.kind {
            ArrivalKind::Poisson { rate } => rate,
            ArrivalKind::Pinned { target, epsilon } => {
                target.saturating_sub(attempts) as f64 / (self.horizon - t + epsilon)
            }
        }
    }
}

fn check_horizon(horizon: f64) -> Result<()> {
    if horizon > 0.0 && horizon.is_finite() {
        Ok(())
    } else {
        Err(Error::param("horizon", format!("must be positive, got {horizon}")))
    }
}

fn check_rate(rate: f64) -> Result<()> {
    if rate >= 0.0 && rate.is_finite() {
        Ok(())
    } else {
        Err(Error::param("rate", format!("must be non-negative, got {rate}")))
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(Error::param(
            "epsilon",
            format!("must be positive (the pinned intensity is unbounded otherwise), got {epsilon}"),
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub mark: f64,
}

/// One realization of the marked point process on `(0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EventStream {
    pub events: Vec<Event>,
    pub seed: u64,
    pub path_id: u64,
}

impl EventStream {
    /// Builds a stream from explicit events, checking the ordering invariant.
    pub fn from_events(events: Vec<Event>, horizon: f64) -> Result<Self> {
        for w in events.windows(2) {
            if w[0].time.partial_cmp(&w[1].time) != Some(std::cmp::Ordering::Less) {
                return Err(Error::Contract(format!(
                    "event times must be strictly increasing ({} then {})",
                    w[0].time, w[1].time
                )));
            }
        }
        if let Some(e) = events.iter().find(|e| !(e.time > 0.0 && e.time <= horizon)) {
            return Err(Error::Contract(format!(
                "event time {} outside (0, {horizon}]",
                e.time
            )));
        }
        Ok(Self {
            events,
            seed: 0,
            path_id: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// Arrival times of a homogeneous Poisson process on `(0, horizon]`.
///
/// The count is drawn from `Poisson(rate * horizon)` and the times are iid
/// uniform on `(0, horizon]`, then sorted.
pub fn sample_poisson_arrivals<R: Rng + ?Sized>(
    rate: f64,
    horizon: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    check_rate(rate)?;
    check_horizon(horizon)?;
    let mean = rate * horizon;
    if mean == 0.0 {
        return Ok(Vec::new());
    }
    let count = Poisson::new(mean)
        .map_err(|e| Error::param("rate", e.to_string()))?
        .sample(rng) as usize;
    let mut times: Vec<f64> = (0..count)
        .map(|_| horizon * (1.0 - rng.random::<f64>()))
        .collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    Ok(times)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PinnedSampler {
    /// Exact inversion of the integrated intensity between arrivals.
    #[default]
    Inversion,
    /// Rejection thinning of a Poisson(target/epsilon) candidate stream.
    Thinning,
}

/// Arrival times under the pinned intensity `(M - N_{t-}) / (T - t + epsilon)`.
///
/// Between arrivals the intensity is deterministic, so its integral from `s`
/// to `t` is `(M - n) ln((T - s + eps) / (T - t + eps))` and the next time
/// can be drawn by inverting it against a unit exponential. `Thinning` draws
/// candidates at the global bound `M / eps` instead; both are exact in
/// distribution, but thinning costs `M T / eps` candidates per path.
pub fn sample_pinned_arrivals<R: Rng + ?Sized>(
    target: u32,
    epsilon: f64,
    horizon: f64,
    sampler: PinnedSampler,
    rng: &mut R,
) -> Result<Vec<f64>> {
    check_epsilon(epsilon)?;
    check_horizon(horizon)?;
    let mut times = Vec::with_capacity(target as usize);
    match sampler {
        PinnedSampler::Inversion => {
            let mut last = 0.0_f64;
            while (times.len() as u32) < target {
                let remaining = (target - times.len() as u32) as f64;
                let e: f64 = rng.sample(Exp1);
                let t = last + (horizon - last + epsilon) * -(-e / remaining).exp_m1();
                if t > horizon {
                    break;
                }
                if t > last {
                    times.push(t);
                    last = t;
                }
            }
        }
        PinnedSampler::Thinning => {
            let bound = target as f64 / epsilon;
            if bound == 0.0 {
                return Ok(times);
            }
            let mut t = 0.0;
            while (times.len() as u32) < target {
                let e: f64 = rng.sample(Exp1);
                t += e / bound;
                if t > horizon {
                    break;
                }
                let remaining = (target - times.len() as u32) as f64;
                let intensity = remaining / (horizon - t + epsilon);
                if rng.random::<f64>() * bound < intensity {
                    times.push(t);
                }
            }
        }
    }
    Ok(times)
}

/// Samples a full marked stream for one path: arrival times first, then one
/// mark per arrival, all from the path's own random stream.
pub fn sample_events(
    model: &ArrivalModel,
    marks: &MarkDistribution,
    seed: u64,
    path_id: u64,
) -> Result<EventStream> {
    sample_events_with(model, marks, PinnedSampler::default(), seed, path_id)
}

pub fn sample_events_with(
    model: &ArrivalModel,
    marks: &MarkDistribution,
    sampler: PinnedSampler,
    seed: u64,
    path_id: u64,
) -> Result<EventStream> {
    let mut rng = path_rng(seed, path_id);
    let times = match model.kind {
        ArrivalKind::Poisson { rate } => sample_poisson_arrivals(rate, model.horizon, &mut rng)?,
        ArrivalKind::Pinned { target, epsilon } => {
            sample_pinned_arrivals(target, epsilon, model.horizon, sampler, &mut rng)?
        }
    };
    let events = times
        .into_iter()
        .map(|time| Event {
            time,
            mark: marks.sample(&mut rng),
        })
        .collect();
    Ok(EventStream {
        events,
        seed,
        path_id,
    })
}
