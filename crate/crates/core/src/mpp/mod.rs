//! Marked point process of trade attempts: arrival times and price-shock marks.

mod arrivals;
mod marks;

pub use arrivals::{
    sample_events, sample_events_with, sample_pinned_arrivals, sample_poisson_arrivals,
    ArrivalKind, ArrivalModel, Event, EventStream, PinnedSampler,
};
pub use marks::MarkDistribution;
