//! Nonparametric bootstrap over unit indices.
//!
//! Replicate `r` draws its resample from an independent stream seeded by
//! `sub_seed(seed, r)`, so parallel execution is bit-identical to serial
//! execution for any thread count. Replicates on which the statistic is
//! undefined (a stratum empties, a model separates, ...) are dropped and
//! counted; more than 10% dropped is an error.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::replicate_rng;
use crate::stats::{mean, sample_sd};

/// Largest tolerated share of dropped replicates.
pub const MAX_DROP_SHARE: f64 = 0.10;

/// Result of a scalar bootstrap.
#[derive(Debug, Clone)]
pub struct BootstrapResult {
    /// Kept replicate values.
    pub replicates: Vec<f64>,
    /// Sample standard deviation of the kept replicates.
    pub se: f64,
    /// Point estimate on the original data.
    pub point: f64,
    /// Number of dropped replicates.
    pub dropped: usize,
}

/// Run `b` bootstrap replicates of a vector-valued statistic of a resample of
/// `n` unit indices. Returns the kept replicate vectors (in replicate order)
/// and the dropped count.
pub fn bootstrap_multi<S>(
    n: usize,
    b: usize,
    seed: u64,
    statistic: S,
) -> Result<(Vec<Vec<f64>>, usize)>
where
    S: Fn(&[usize]) -> Result<Vec<f64>> + Sync,
{
    if b < 2 {
        return Err(Error::invalid("bootstrap needs B >= 2"));
    }
    if n == 0 {
        return Err(Error::invalid("bootstrap needs at least one unit"));
    }
    let raw: Vec<Option<Vec<f64>>> = (0..b as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(seed, r);
            let idx: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            statistic(&idx).ok()
        })
        .collect();
    let dropped = raw.iter().filter(|v| v.is_none()).count();
    if (dropped as f64) > MAX_DROP_SHARE * (b as f64) {
        return Err(Error::TooManyDropped { dropped, total: b });
    }
    Ok((raw.into_iter().flatten().collect(), dropped))
}

/// Scalar bootstrap: standard error of `statistic` over `b` resamples.
///
/// `point` is the statistic evaluated on the original data, carried through
/// for reporting.
pub fn bootstrap<S>(n: usize, b: usize, seed: u64, point: f64, statistic: S) -> Result<BootstrapResult>
where
    S: Fn(&[usize]) -> Result<f64> + Sync,
{
    let (reps, dropped) = bootstrap_multi(n, b, seed, |idx| statistic(idx).map(|v| vec![v]))?;
    let replicates: Vec<f64> = reps.into_iter().map(|v| v[0]).collect();
    let se = if replicates.iter().all(|&v| v == replicates[0]) {
        0.0
    } else {
        sample_sd(&replicates)?
    };
    Ok(BootstrapResult {
        se,
        point,
        replicates,
        dropped,
    })
}

/// Component-wise bootstrap standard errors of a vector statistic.
pub fn bootstrap_ses<S>(n: usize, b: usize, seed: u64, statistic: S) -> Result<Vec<f64>>
where
    S: Fn(&[usize]) -> Result<Vec<f64>> + Sync,
{
    let (reps, _) = bootstrap_multi(n, b, seed, statistic)?;
    if reps.is_empty() {
        return Err(Error::degenerate("all bootstrap replicates dropped"));
    }
    let k = reps[0].len();
    (0..k)
        .map(|j| {
            let col: Vec<f64> = reps.iter().map(|r| r[j]).collect();
            if col.iter().all(|&v| v == col[0]) {
                Ok(0.0)
            } else {
                sample_sd(&col)
            }
        })
        .collect()
}

/// Resample helper: gather `xs[idx]` for a bootstrap index vector.
pub fn take(xs: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| xs[i]).collect()
}

/// Resample helper for boolean columns.
pub fn take_bool(xs: &[bool], idx: &[usize]) -> Vec<bool> {
    idx.iter().map(|&i| xs[i]).collect()
}

/// Bootstrap mean of the replicates (for bias diagnostics).
pub fn replicate_mean(reps: &[f64]) -> Result<f64> {
    mean(reps)
}
