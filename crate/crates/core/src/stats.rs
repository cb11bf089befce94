//! Elementary statistics shared by every estimator: means, unbiased sample
//! variances and covariances, and midranks for tied data.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Arithmetic mean. Errors on an empty slice.
pub fn mean<F: Real>(xs: &[F]) -> Result<F> {
    if xs.is_empty() {
        return Err(Error::degenerate("mean of an empty slice"));
    }
    let sum: F = xs.iter().copied().sum();
    Ok(sum / F::of_usize(xs.len()))
}

/// Unbiased sample variance (denominator `n - 1`). Errors for `n < 2`.
pub fn sample_var<F: Real>(xs: &[F]) -> Result<F> {
    if xs.len() < 2 {
        return Err(Error::degenerate("sample variance needs at least 2 values"));
    }
    let m = mean(xs)?;
    let ss: F = xs.iter().map(|&x| (x - m) * (x - m)).sum();
    Ok(ss / F::of_usize(xs.len() - 1))
}

/// Unbiased sample standard deviation.
pub fn sample_sd<F: Real>(xs: &[F]) -> Result<F> {
    Ok(sample_var(xs)?.sqrt())
}

/// Unbiased sample covariance (denominator `n - 1`). Errors for `n < 2` or
/// mismatched lengths.
pub fn sample_cov<F: Real>(xs: &[F], ys: &[F]) -> Result<F> {
    if xs.len() != ys.len() {
        return Err(Error::invalid("covariance inputs differ in length"));
    }
    if xs.len() < 2 {
        return Err(Error::degenerate("sample covariance needs at least 2 values"));
    }
    let mx = mean(xs)?;
    let my = mean(ys)?;
    let ss: F = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| (x - mx) * (y - my))
        .sum();
    Ok(ss / F::of_usize(xs.len() - 1))
}

/// Midranks of the values: ranks starting at 1, with ties sharing the average
/// of the ranks they span.
pub fn midranks<F: Real>(xs: &[F]) -> Vec<F> {
    let n = xs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).expect("non-NaN values"));
    let mut ranks = vec![F::zero(); n];
    let mut i = 0;
    while i < n {
        // Find the run of tied values starting at sorted position i.
        let mut j = i + 1;
        while j < n && xs[order[j]] == xs[order[i]] {
            j += 1;
        }
        // Positions i..j (0-based) hold ranks i+1 ..= j; their average:
        let avg = F::of_usize(i + 1 + j) / F::of(2.0);
        for &idx in &order[i..j] {
            ranks[idx] = avg;
        }
        i = j;
    }
    ranks
}

/// Mean of the subset of `xs` where `keep` is true. Errors if empty.
pub fn mean_where<F: Real>(xs: &[F], keep: &[bool]) -> Result<F> {
    let vals: Vec<F> = xs
        .iter()
        .zip(keep)
        .filter(|(_, &k)| k)
        .map(|(&x, _)| x)
        .collect();
    mean(&vals)
}

/// Split `xs` by a binary indicator: `(values where z = 1, values where z = 0)`.
pub fn split_by_arm<F: Real>(xs: &[F], z: &[bool]) -> (Vec<F>, Vec<F>) {
    let mut one = Vec::new();
    let mut zero = Vec::new();
    for (&x, &zi) in xs.iter().zip(z) {
        if zi {
            one.push(x);
        } else {
            zero.push(x);
        }
    }
    (one, zero)
}
