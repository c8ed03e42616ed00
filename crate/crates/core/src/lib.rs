//! Latency-optimal discretion for marketable limit orders.
//!
//! An agent sends fill-or-kill marketable orders; between the decision and
//! the execution the achievable price moves by a random shock. The
//! discretion `delta` is how far past the quote the order may walk the book.
//! Wider discretion fills more often but pays more. This crate computes the
//! discretion that minimizes `E[C_T + alpha D_T + gamma D_T^2]` (cost plus
//! penalties on missed trades) and checks it by simulation:
//!
//! * [`mpp`]: arrival times and marks (Poisson or pinned intensity)
//! * [`policy`]: fills, misses and cost along a path
//! * [`pide`]: backward finite-difference solvers for the optimal surface
//! * [`fbsde`]: exact scenario-tree oracle and Picard iteration
//! * [`criterion`]: Monte Carlo criterion and finite-difference optimality checks
//! * [`experiment`]: configuration, runs, sweeps and CSV/JSON output

pub mod criterion;
pub mod ensemble;
pub mod error;
pub mod experiment;
pub mod fbsde;
pub mod mpp;
pub mod normal;
pub mod pide;
pub mod policy;
pub mod rng;

pub use error::{Error, Result};
