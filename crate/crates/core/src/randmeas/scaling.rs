use alloc::vec::Vec;

use libm::log2;

use crate::qsim::state::QuantumState;
use crate::randmeas::dataset::{collect, sample_settings, Ensemble};
use crate::randmeas::estimators::estimate_overlap;
use crate::rng::Seed;
use crate::stats::{linear_fit, median};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingOptions {
    /// Shots per setting, held fixed while the number of settings is
    /// searched.
    pub n_m: u64,
    /// Largest number of settings tried before giving up.
    pub max_settings: usize,
    pub ensemble: Ensemble,
    pub seeds: Vec<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingRow {
    pub n: usize,
    pub n_u: usize,
    pub n_m: u64,
    /// `n_u * n_m`
    pub budget: u64,
    pub median_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingTable {
    pub rows: Vec<ScalingRow>,
    /// Fitted `b` in `budget ~ 2^{b N}`; `None` with fewer than two sizes.
    pub exponent: Option<f64>,
}

/// Median over seeds of `|estimate - Tr(rho^2)|` where the estimate is the
/// cross-overlap of two independent collections of `state`.
pub fn median_overlap_error(state: &QuantumState, n_u: usize, opts: &ScalingOptions) -> Result<f64> {
    let n = state
        .basis()
        .n_qubits()
        .ok_or_else(|| Error::BasisMismatch("randomized measurements need qubits".into()))?;
    let exact = state.purity();
    let all: Vec<usize> = (0..n).collect();
    let errs: Vec<f64> = opts
        .seeds
        .iter()
        .map(|&s| {
            let seed = Seed(s).split(n_u as u64);
            let settings = sample_settings(n, n_u, opts.ensemble, seed.split(0))?;
            let a = collect(state, &settings, opts.n_m, seed.split(1), "a", "probe")?;
            let b = collect(state, &settings, opts.n_m, seed.split(2), "b", "probe")?;
            Ok((estimate_overlap(&a, &b, &all)?.value - exact).abs())
        })
        .collect::<Result<_>>()?;
    Ok(median(&errs))
}

/// For each size, the smallest number of settings whose median overlap
/// error is at most `target`, found by doubling and then bisection.
pub fn scaling_probe<F>(ns: &[usize], target: f64, state_for: F, opts: &ScalingOptions) -> Result<ScalingTable>
where
    F: Fn(usize) -> Result<QuantumState>,
{
    if opts.seeds.is_empty() || ns.is_empty() {
        return Err(Error::InvalidArgument("scaling probe needs sizes and seeds".into()));
    }
    let mut rows = Vec::new();
    for &n in ns {
        let state = state_for(n)?;
        let mut lo = 0usize;
        let mut hi = 1usize;
        let mut hi_err;
        loop {
            hi_err = median_overlap_error(&state, hi, opts)?;
            if hi_err <= target {
                break;
            }
            if hi >= opts.max_settings {
                return Err(Error::BudgetCap {
                    qubits: n,
                    cap: opts.max_settings as u64 * opts.n_m,
                });
            }
            lo = hi;
            hi = (hi * 2).min(opts.max_settings);
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            let e = median_overlap_error(&state, mid, opts)?;
            if e <= target {
                hi = mid;
                hi_err = e;
            } else {
                lo = mid;
            }
        }
        rows.push(ScalingRow {
            n,
            n_u: hi,
            n_m: opts.n_m,
            budget: hi as u64 * opts.n_m,
            median_error: hi_err,
        });
    }
    let exponent = if rows.len() >= 2 {
        let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
        let ys: Vec<f64> = rows.iter().map(|r| log2(r.budget as f64)).collect();
        Some(linear_fit(&xs, &ys).slope)
    } else {
        None
    };
    Ok(ScalingTable { rows, exponent })
}
