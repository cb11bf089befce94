//! Special functions used throughout the crate: the standard normal
//! distribution, log-gamma-based combinatorics, the hypergeometric pmf, and
//! the Kolmogorov limit distribution.
//!
//! Everything is computed in `f64` (the generic numerics core lowers through
//! [`crate::scalar::Real::to64`] when it needs one of these).

use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::ln_gamma;

/// Standard normal cumulative distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    let n = Normal::new(0.0, 1.0).expect("standard normal");
    n.cdf(x)
}

/// Standard normal quantile function.
pub fn normal_quantile(p: f64) -> f64 {
    assert!((0.0..=1.0).contains(&p), "probability out of range: {p}");
    let n = Normal::new(0.0, 1.0).expect("standard normal");
    n.inverse_cdf(p)
}

/// Natural log of `n choose k`.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    assert!(k <= n, "choose({n}, {k}) undefined");
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Log-pmf of the hypergeometric count: the probability that a simple random
/// sample of size `draws` from a population of `total` items, `successes` of
/// which are marked, contains exactly `k` marked items.
///
/// Returns `f64::NEG_INFINITY` outside the support.
pub fn hypergeometric_ln_pmf(total: u64, successes: u64, draws: u64, k: u64) -> f64 {
    assert!(successes <= total && draws <= total, "invalid margins");
    let failures = total - successes;
    if k > successes || k > draws || draws - k > failures {
        return f64::NEG_INFINITY;
    }
    ln_choose(successes, k) + ln_choose(failures, draws - k) - ln_choose(total, draws)
}

/// Survival function `pr(K > x)` of the Kolmogorov limit distribution,
/// evaluated by the alternating series
/// `1 - (sqrt(2*pi)/x) * sum_{j>=1} exp(-(2j-1)^2 pi^2 / (8 x^2))`.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100u32 {
        let m = (2 * j - 1) as f64;
        let term = (-m * m * std::f64::consts::PI.powi(2) / (8.0 * x * x)).exp();
        sum += term;
        if term < 1e-16 {
            break;
        }
    }
    let cdf = (2.0 * std::f64::consts::PI).sqrt() / x * sum;
    (1.0 - cdf).clamp(0.0, 1.0)
}
