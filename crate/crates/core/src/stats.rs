//! Small statistics helpers: order statistics, jackknife, least squares.

use alloc::vec::Vec;
use libm::sqrt;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; zero for fewer than two values.
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Linear-interpolation quantile (Hyndman-Fan type 7), `q` in `[0, 1]`.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v: Vec<f64> = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let h = (v.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h as usize;
    let hi = (lo + 1).min(v.len() - 1);
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Jackknife standard error from leave-one-out replicates.
pub fn jackknife_error(replicates: &[f64]) -> f64 {
    let n = replicates.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(replicates);
    let ss: f64 = replicates.iter().map(|r| (r - m) * (r - m)).sum();
    sqrt(ss * (n - 1) as f64 / n as f64)
}

/// Mean and jackknife error of a sample mean.
pub fn jackknife_mean(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    let total: f64 = xs.iter().sum();
    let m = total / n as f64;
    if n < 2 {
        return (m, f64::NAN);
    }
    let reps: Vec<f64> = xs.iter().map(|x| (total - x) / (n - 1) as f64).collect();
    (m, jackknife_error(&reps))
}

/// Ordinary least squares `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    let mx = mean(xs);
    let my = mean(ys);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    LinearFit {
        slope,
        intercept: my - slope * mx,
    }
}
