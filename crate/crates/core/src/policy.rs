//! Discretion policies and pathwise accounting of fills, misses and the cost
//! of walking the book.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mpp::EventStream;
use crate::pide::{DiscretionSurface, DiscretionSurface3, Lookup};

/// Outcome of one marketable limit order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FillOutcome {
    pub filled: bool,
    /// Extra cash paid to walk the book; negative for a price improvement.
    pub cost: f64,
}

/// Fill-or-kill rule: the order fills iff the shock does not exceed the
/// discretion (`z <= delta`, ties fill), and the cost of a fill is the shock.
pub fn fill_outcome(delta: f64, mark: f64) -> FillOutcome {
    if mark <= delta {
        FillOutcome {
            filled: true,
            cost: mark,
        }
    } else {
        FillOutcome {
            filled: false,
            cost: 0.0,
        }
    }
}

/// Anything that can set the discretion of the next order from the state
/// strictly before it: time, misses so far and attempts so far.
pub trait Discretion: Sync {
    fn discretion(&self, t: f64, misses: u32, attempts: u32) -> Result<Lookup>;

    /// Horizon the policy was built for, if it depends on one.
    fn horizon(&self) -> Option<f64>;
}

#[derive(Debug, Clone, PartialEq)]
pub enum DiscretionPolicy {
    Fixed(f64),
    PoissonSurface(Arc<DiscretionSurface>),
    PinnedSurface(Arc<DiscretionSurface3>),
}

/// Sends every order with the same discretion; optimal when `gamma = 0`.
pub fn fixed_policy(alpha: f64) -> Result<DiscretionPolicy> {
    if alpha.is_finite() {
        Ok(DiscretionPolicy::Fixed(alpha))
    } else {
        Err(Error::param("alpha", format!("must be finite, got {alpha}")))
    }
}

impl DiscretionPolicy {
    pub fn poisson(surface: DiscretionSurface) -> Self {
        Self::PoissonSurface(Arc::new(surface))
    }

    pub fn pinned(surface: DiscretionSurface3) -> Self {
        Self::PinnedSurface(Arc::new(surface))
    }
}

impl Discretion for DiscretionPolicy {
    fn discretion(&self, t: f64, misses: u32, attempts: u32) -> Result<Lookup> {
        match self {
            Self::Fixed(delta) => Ok(Lookup {
                value: *delta,
                clamped: false,
            }),
            Self::PoissonSurface(s) => s.query(t, misses),
            Self::PinnedSurface(s) => s.query(t, misses, attempts),
        }
    }

    fn horizon(&self) -> Option<f64> {
        match self {
            Self::Fixed(_) => None,
            Self::PoissonSurface(s) => Some(s.header().horizon()),
            Self::PinnedSurface(s) => Some(s.header().horizon()),
        }
    }
}

impl<P: Discretion + ?Sized> Discretion for &P {
    fn discretion(&self, t: f64, misses: u32, attempts: u32) -> Result<Lookup> {
        (**self).discretion(t, misses, attempts)
    }

    fn horizon(&self) -> Option<f64> {
        (**self).horizon()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerEntry {
    pub time: f64,
    pub mark: f64,
    /// Discretion the order was sent with.
    pub delta: f64,
    pub filled: bool,
}

/// Running state right after an event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatePoint {
    pub time: f64,
    pub delta: f64,
    pub cost: f64,
    pub misses: u32,
    pub attempts: u32,
}

/// Terminal totals of one path.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PathTotals {
    /// `N_T`
    pub attempts: u32,
    /// `D_T`
    pub misses: u32,
    /// `C_T`
    pub cost: f64,
    /// Lookups whose miss count ran past the surface grid.
    pub clamped_lookups: u32,
}

impl PathTotals {
    pub fn fills(&self) -> u32 {
        self.attempts - self.misses
    }
}

/// Full event-by-event record of one path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathLedger {
    pub entries: Vec<LedgerEntry>,
    pub totals: PathTotals,
}

impl PathLedger {
    /// `(t, delta, C, D, N)` after each event.
    pub fn series(&self) -> Vec<StatePoint> {
        let mut cost = 0.0;
        let mut misses = 0;
        self.entries
            .iter()
            .enumerate()
            .map(|(k, e)| {
                if e.filled {
                    cost += e.mark;
                } else {
                    misses += 1;
                }
                StatePoint {
                    time: e.time,
                    delta: e.delta,
                    cost,
                    misses,
                    attempts: k as u32 + 1,
                }
            })
            .collect()
    }
}

fn check_horizon<P: Discretion + ?Sized>(policy: &P, events: &EventStream, horizon: f64) -> Result<()> {
    if let Some(h) = policy.horizon() {
        if (h - horizon).abs() > 1e-12 * horizon.abs().max(1.0) {
            return Err(Error::Contract(format!(
                "policy was solved for horizon {h}, simulation uses {horizon}"
            )));
        }
    }
    if let Some(last) = events.events.last() {
        if last.time > horizon {
            return Err(Error::Contract(format!(
                "event at {} lies beyond the horizon {horizon}",
                last.time
            )));
        }
    }
    Ok(())
}

fn walk<P, F>(policy: &P, events: &EventStream, horizon: f64, mut record: F) -> Result<PathTotals>
where
    P: Discretion + ?Sized,
    F: FnMut(LedgerEntry),
{
    check_horizon(policy, events, horizon)?;
    let mut totals = PathTotals::default();
    for e in &events.events {
        // State strictly before the event: D_{t-}, N_{t-}.
        let lookup = policy.discretion(e.time, totals.misses, totals.attempts)?;
        if lookup.clamped {
            totals.clamped_lookups += 1;
        }
        let outcome = fill_outcome(lookup.value, e.mark);
        totals.attempts += 1;
        if outcome.filled {
            totals.cost += outcome.cost;
        } else {
            totals.misses += 1;
        }
        record(LedgerEntry {
            time: e.time,
            mark: e.mark,
            delta: lookup.value,
            filled: outcome.filled,
        });
    }
    Ok(totals)
}

/// Runs `policy` over one event stream and records every decision.
pub fn evaluate_path<P: Discretion + ?Sized>(
    policy: &P,
    events: &EventStream,
    horizon: f64,
) -> Result<PathLedger> {
    let mut entries = Vec::with_capacity(events.len());
    let totals = walk(policy, events, horizon, |e| entries.push(e))?;
    Ok(PathLedger { entries, totals })
}

/// Same as [`evaluate_path`] but keeps only the terminal totals.
pub fn path_totals<P: Discretion + ?Sized>(
    policy: &P,
    events: &EventStream,
    horizon: f64,
) -> Result<PathTotals> {
    walk(policy, events, horizon, |_| {})
}
