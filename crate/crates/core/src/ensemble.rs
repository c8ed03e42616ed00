//! Parallel path loops with a fixed output order.

use rayon::prelude::*;

use crate::error::Result;
use crate::mpp::{sample_events, ArrivalModel, EventStream, MarkDistribution};
use crate::policy::{path_totals, Discretion, PathTotals};

/// Samples path `i` from `(seed, i)` for `i in 0..n_paths` and applies `f`.
/// Results come back in path order whatever the thread count.
pub fn map_paths<T, F>(
    model: &ArrivalModel,
    marks: &MarkDistribution,
    n_paths: usize,
    seed: u64,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&EventStream) -> Result<T> + Sync,
{
    (0..n_paths as u64)
        .into_par_iter()
        .map(|i| f(&sample_events(model, marks, seed, i)?))
        .collect()
}

pub fn simulate_totals<P: Discretion + ?Sized>(
    policy: &P,
    model: &ArrivalModel,
    marks: &MarkDistribution,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<PathTotals>> {
    map_paths(model, marks, n_paths, seed, |events| {
        path_totals(policy, events, model.horizon)
    })
}

/// Sample mean and standard error, summed in index order.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_se_small_cases() {
        assert!(mean_and_se(&[]).0.is_nan());
        assert_eq!(mean_and_se(&[3.0]), (3.0, 0.0));
        let (m, se) = mean_and_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }
}
