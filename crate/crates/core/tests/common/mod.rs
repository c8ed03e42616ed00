//! Independent oracles shared by the integration tests. Nothing here calls
//! into the crate's numerics.

#![allow(dead_code)]

use std::f64::consts::PI;

/// erf by its Maclaurin series; accurate to ~1e-14 for |x| <= 3.
pub fn erf_series(x: f64) -> f64 {
    let mut term = x;
    let mut sum = x;
    let x2 = x * x;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= -x2 / n;
        let add = term / (2.0 * n + 1.0);
        sum += add;
        if add.abs() <= 1e-18 * sum.abs() {
            break;
        }
    }
    2.0 / PI.sqrt() * sum
}

/// erfc for x > 0 by the Laplace continued fraction, evaluated bottom-up.
pub fn erfc_cf(x: f64) -> f64 {
    assert!(x > 0.0);
    let mut tail = x;
    for k in (1..=400).rev() {
        tail = x + (k as f64 / 2.0) / tail;
    }
    (-x * x).exp() / PI.sqrt() / tail
}

/// Standard normal CDF from the two routes above.
pub fn phi_oracle(x: f64) -> f64 {
    let y = x / 2f64.sqrt();
    if y.abs() <= 3.0 {
        0.5 * (1.0 + erf_series(y))
    } else if y > 0.0 {
        1.0 - 0.5 * erfc_cf(y)
    } else {
        0.5 * erfc_cf(-y)
    }
}

pub fn normal_pdf(x: f64, mean: f64, std: f64) -> f64 {
    let u = (x - mean) / std;
    (-0.5 * u * u).exp() / (std * (2.0 * PI).sqrt())
}

pub fn normal_cdf(x: f64, mean: f64, std: f64) -> f64 {
    phi_oracle((x - mean) / std)
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    assert!(n.is_multiple_of(2));
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + h * i as f64);
    }
    s * h / 3.0
}

/// `P[D < q N]` for `N ~ Poisson(lambda)` and `D | N ~ Bin(N, p_miss)`,
/// counting `N = 0` as satisfied.
pub fn poisson_binomial_risk(lambda: f64, p_miss: f64, q: f64) -> f64 {
    let n_max = (lambda + 20.0 * lambda.sqrt() + 50.0) as usize;
    let mut pois = (-lambda).exp();
    let mut total = pois;
    for n in 1..=n_max {
        pois *= lambda / n as f64;
        let mut pmf = (1.0 - p_miss).powi(n as i32);
        let mut cdf = 0.0;
        for k in 0..=n {
            if (k as f64) < q * n as f64 {
                cdf += pmf;
            } else {
                break;
            }
            pmf *= (n - k) as f64 / (k + 1) as f64 * p_miss / (1.0 - p_miss);
        }
        total += pois * cdf;
    }
    total
}

/// `E[N_T]` under the pinned intensity, by forward Euler on
/// `dm/dt = (M - m) / (T - t + eps)`.
pub fn pinned_mean_count_euler(target: f64, epsilon: f64, horizon: f64, steps: usize) -> f64 {
    let dt = horizon / steps as f64;
    let mut m = 0.0;
    for i in 0..steps {
        let t = i as f64 * dt;
        m += dt * (target - m) / (horizon - t + epsilon);
    }
    m
}

/// Ordinary least squares slope through the origin.
pub fn slope_through_origin(xs: &[f64], ys: &[f64]) -> f64 {
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    sxy / sxx
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
