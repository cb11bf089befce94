//! Design-based estimation for randomized experiments: difference in means
//! with the conservative variance bound, stratified/post-stratified
//! estimation, covariate-interacted (Lin) regression adjustment, gain scores,
//! matched pairs, and generally weighted matched sets.
//!
//! Validated against R: estimates match `lm` coefficient output with
//! `sandwich::vcovHC(type = "HC2")` standard errors where applicable.

use serde_json::json;

use crate::error::{Error, Result};
use crate::linalg::MatrixOf;
use crate::regress::{ols, CovKind};
use crate::report::EstimateReport;
use crate::stats::{mean, sample_var, split_by_arm};

/// Difference in arm means with the conservative variance
/// `S1^2/n1 + S0^2/n0`.
pub fn neyman_cre(z: &[bool], y: &[f64], alpha: f64) -> Result<EstimateReport> {
    let (one, zero) = split_by_arm(y, z);
    if one.len() < 2 || zero.len() < 2 {
        return Err(Error::degenerate(
            "difference-in-means SE needs at least 2 units per arm",
        ));
    }
    let est = mean(&one)? - mean(&zero)?;
    let v = sample_var(&one)? / one.len() as f64 + sample_var(&zero)? / zero.len() as f64;
    Ok(
        EstimateReport::wald("neyman", "ate", est, v.sqrt(), alpha, y.len())
            .with_diag("n1", one.len())
            .with_diag("n0", zero.len()),
    )
}

/// Sharper conservative variance bound
/// `n^{-1} (sqrt(n0/n1) S1 + sqrt(n1/n0) S0)^2`.
pub fn neyman_alt_variance(z: &[bool], y: &[f64]) -> Result<f64> {
    let (one, zero) = split_by_arm(y, z);
    if one.len() < 2 || zero.len() < 2 {
        return Err(Error::degenerate(
            "variance bound needs at least 2 units per arm",
        ));
    }
    let n = y.len() as f64;
    let (n1, n0) = (one.len() as f64, zero.len() as f64);
    let s1 = sample_var(&one)?.sqrt();
    let s0 = sample_var(&zero)?.sqrt();
    let root = (n0 / n1).sqrt() * s1 + (n1 / n0).sqrt() * s0;
    Ok(root * root / n)
}

/// Per-stratum summary used by the stratified estimator.
#[derive(Debug, Clone)]
pub struct StratumEstimate {
    /// Stratum index.
    pub stratum: usize,
    /// Stratum share of the sample.
    pub weight: f64,
    /// Within-stratum difference in means.
    pub estimate: f64,
    /// Within-stratum standard error (`None` when an arm has < 2 units).
    pub se: Option<f64>,
}

/// Stratified (post-stratified) difference in means
/// `sum_k pi_k tau_k` with variance `sum_k pi_k^2 (S_k1^2/n_k1 + S_k0^2/n_k0)`.
///
/// Strata whose arms cannot support the variance (fewer than 2 units in an
/// arm) cause an error unless `drop_small` is set, in which case they are
/// dropped and the weights renormalized; dropped strata are listed in the
/// diagnostics either way.
pub fn stratified(
    z: &[bool],
    y: &[f64],
    strata: &[usize],
    alpha: f64,
    drop_small: bool,
) -> Result<EstimateReport> {
    if z.len() != y.len() || strata.len() != y.len() {
        return Err(Error::invalid("input length mismatch"));
    }
    let k = strata.iter().max().map_or(0, |m| m + 1);
    let n = y.len() as f64;
    let mut kept: Vec<StratumEstimate> = Vec::new();
    let mut dropped: Vec<usize> = Vec::new();
    for s in 0..k {
        let idx: Vec<usize> = (0..y.len()).filter(|&i| strata[i] == s).collect();
        if idx.is_empty() {
            continue;
        }
        let zk: Vec<bool> = idx.iter().map(|&i| z[i]).collect();
        let yk: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
        let (one, zero) = split_by_arm(&yk, &zk);
        if one.len() < 2 || zero.len() < 2 {
            if drop_small {
                dropped.push(s);
                continue;
            }
            return Err(Error::degenerate(format!(
                "stratum {s} has an arm with fewer than 2 units; rerun with the drop-small-strata option or use the matched-pairs machinery"
            )));
        }
        let est = mean(&one)? - mean(&zero)?;
        let v = sample_var(&one)? / one.len() as f64 + sample_var(&zero)? / zero.len() as f64;
        kept.push(StratumEstimate {
            stratum: s,
            weight: yk.len() as f64 / n,
            estimate: est,
            se: Some(v.sqrt()),
        });
    }
    if kept.is_empty() {
        return Err(Error::degenerate("no usable strata"));
    }
    let total_w: f64 = kept.iter().map(|s| s.weight).sum();
    let mut est = 0.0;
    let mut var = 0.0;
    for s in &kept {
        let w = s.weight / total_w;
        est += w * s.estimate;
        let se = s.se.expect("kept strata have SEs");
        var += w * w * se * se;
    }
    let used_n: usize = (kept.iter().map(|s| s.weight).sum::<f64>() * n).round() as usize;
    Ok(
        EstimateReport::wald("stratified", "ate", est, var.sqrt(), alpha, used_n)
            .with_diag(
                "stratum_estimates",
                json!(kept.iter().map(|s| s.estimate).collect::<Vec<_>>()),
            )
            .with_diag(
                "stratum_ses",
                json!(kept.iter().map(|s| s.se.unwrap()).collect::<Vec<_>>()),
            )
            .with_diag(
                "stratum_weights",
                json!(kept
                    .iter()
                    .map(|s| s.weight / total_w)
                    .collect::<Vec<_>>()),
            )
            .with_diag("dropped_strata", json!(dropped)),
    )
}

/// Which population the Lin-adjusted variance targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Population {
    /// Finite-population (randomization-based): HC2 sandwich.
    Finite,
    /// Super-population: HC2 plus `(b1 - b0)' S_x (b1 - b0)/n`.
    Super,
}

/// Internal pieces of the covariate-interacted fit.
struct LinFitParts {
    estimate: f64,
    hc2_var: f64,
    slope_diff: Vec<f64>,
    x_centered: Vec<Vec<f64>>,
}

fn lin_fit(z: &[bool], y: &[f64], x: &MatrixOf<f64>) -> Result<LinFitParts> {
    let n = y.len();
    if z.len() != n || x.nrows() != n {
        return Err(Error::invalid("input length mismatch"));
    }
    let p = x.ncols();
    let zf: Vec<f64> = z.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    // Center covariates at the grand mean.
    let mut xc: Vec<Vec<f64>> = Vec::with_capacity(p);
    for j in 0..p {
        let col = x.column(j);
        let m = mean(&col)?;
        xc.push(col.iter().map(|v| v - m).collect());
    }
    // Design: (1, Z, Xc, Z * Xc).
    let mut cols = vec![vec![1.0; n], zf.clone()];
    for c in &xc {
        cols.push(c.clone());
    }
    for c in &xc {
        cols.push(c.iter().zip(&zf).map(|(&a, &b)| a * b).collect());
    }
    let fit = ols(&MatrixOf::from_columns(&cols), y)?;
    let cov = fit.covariance(CovKind::Hc2);
    Ok(LinFitParts {
        estimate: fit.coefficients[1],
        hc2_var: cov[(1, 1)],
        slope_diff: fit.coefficients[2 + p..2 + 2 * p].to_vec(),
        x_centered: xc,
    })
}

/// Point estimate and finite-population (HC2) SE of the covariate-interacted
/// regression estimator (used as a studentized test statistic elsewhere).
pub fn lin_adjust_parts(z: &[bool], y: &[f64], x: &MatrixOf<f64>) -> Result<(f64, f64)> {
    let parts = lin_fit(z, y, x)?;
    Ok((parts.estimate, parts.hc2_var.sqrt()))
}

/// Covariate-interacted regression adjustment: the treatment coefficient in
/// the OLS of `y` on `(1, Z, Xc, Z*Xc)` with grand-mean-centered covariates.
///
/// The finite-population SE is the HC2 sandwich; the super-population SE adds
/// `(b1 - b0)' S_x (b1 - b0)/n` for the covariate-slope difference.
pub fn lin_adjust(
    z: &[bool],
    y: &[f64],
    x: &MatrixOf<f64>,
    population: Population,
    alpha: f64,
) -> Result<EstimateReport> {
    let parts = lin_fit(z, y, x)?;
    let n = y.len();
    let p = x.ncols();
    let mut var = parts.hc2_var;
    if let Population::Super = population {
        // S_x: sample covariance of the covariates.
        let mut s: MatrixOf<f64> = MatrixOf::zeros(p, p);
        for i in 0..n {
            for a in 0..p {
                for b in 0..p {
                    s[(a, b)] += parts.x_centered[a][i] * parts.x_centered[b][i];
                }
            }
        }
        let denom = (n - 1) as f64;
        let mut extra = 0.0;
        for a in 0..p {
            for b in 0..p {
                extra += parts.slope_diff[a] * s[(a, b)] / denom * parts.slope_diff[b];
            }
        }
        var += extra / n as f64;
    }
    let method = match population {
        Population::Finite => "lin",
        Population::Super => "lin_super",
    };
    Ok(EstimateReport::wald(
        method,
        "ate",
        parts.estimate,
        var.sqrt(),
        alpha,
        n,
    ))
}

/// Gain-score (difference-in-difference) estimator: difference in means of
/// `y - x_lag`.
pub fn gain_score(z: &[bool], y: &[f64], x_lag: &[f64], alpha: f64) -> Result<EstimateReport> {
    if x_lag.len() != y.len() {
        return Err(Error::invalid("lagged-outcome length mismatch"));
    }
    let g: Vec<f64> = y.iter().zip(x_lag).map(|(&a, &b)| a - b).collect();
    let mut r = neyman_cre(z, &g, alpha)?;
    r.method = "gain_score".to_string();
    Ok(r)
}

/// Matched-pairs estimator from within-pair differences: mean difference with
/// variance `sample var / n` (equivalently the intercept of an OLS on 1).
pub fn mpe(diffs: &[f64], alpha: f64) -> Result<EstimateReport> {
    if diffs.len() < 2 {
        return Err(Error::degenerate("matched-pairs SE needs >= 2 pairs"));
    }
    let n = diffs.len() as f64;
    let est = mean(diffs)?;
    let se = (sample_var(diffs)? / n).sqrt();
    Ok(EstimateReport::wald("mpe", "ate", est, se, alpha, diffs.len()))
}

/// Covariate-adjusted matched-pairs estimator: the intercept of the OLS of
/// pair differences on pair covariate differences, with its model-based SE.
pub fn mpe_adjusted(diffs: &[f64], xdiffs: &[Vec<f64>], alpha: f64) -> Result<EstimateReport> {
    let p = xdiffs.first().map_or(0, |r| r.len());
    if diffs.len() < p + 2 {
        return Err(Error::degenerate(
            "matched-pairs adjustment needs more pairs than parameters",
        ));
    }
    let (est, se) = crate::randomization::mpe_adjusted_parts(diffs, xdiffs)?;
    Ok(EstimateReport::wald(
        "mpe_adjusted",
        "ate",
        est,
        se,
        alpha,
        diffs.len(),
    ))
}

/// Unbiased estimator of the covariance between the covariate-difference
/// means and the pair-difference mean:
/// `theta_j = {n(n-1)}^{-1} sum_i (xdiff_ij - mean_j)(diff_i - mean)`.
pub fn mpe_covariance(diffs: &[f64], xdiffs: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = diffs.len();
    if n < 2 {
        return Err(Error::degenerate("covariance needs >= 2 pairs"));
    }
    let p = xdiffs.first().map_or(0, |r| r.len());
    let md = mean(diffs)?;
    let mut out = vec![0.0; p];
    for j in 0..p {
        let col: Vec<f64> = xdiffs.iter().map(|r| r[j]).collect();
        let mx = mean(&col)?;
        let s: f64 = col
            .iter()
            .zip(diffs)
            .map(|(&a, &b)| (a - mx) * (b - md))
            .sum();
        out[j] = s / (n as f64 * (n - 1) as f64);
    }
    Ok(out)
}

/// Weighted combination of matched-set estimates with the conservative
/// variance `sum_i c_i (tau_i - tau_w)^2`,
/// `c_i = (w_i^2/(1-2w_i)) / (1 + sum_j w_j^2/(1-2w_j))`.
///
/// Requires `sum w = 1` and every `w_i < 1/2`.
pub fn matched_sets_weighted(
    estimates: &[f64],
    weights: &[f64],
    alpha: f64,
) -> Result<EstimateReport> {
    if estimates.len() != weights.len() || estimates.len() < 2 {
        return Err(Error::invalid("need >= 2 matched sets with matching weights"));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-8 {
        return Err(Error::invalid("weights must sum to 1"));
    }
    if weights.iter().any(|&w| w <= 0.0 || w >= 0.5) {
        return Err(Error::invalid("every weight must lie in (0, 1/2)"));
    }
    let est: f64 = estimates.iter().zip(weights).map(|(&t, &w)| t * w).sum();
    let g: Vec<f64> = weights.iter().map(|&w| w * w / (1.0 - 2.0 * w)).collect();
    let gsum: f64 = g.iter().sum();
    let var: f64 = estimates
        .iter()
        .zip(&g)
        .map(|(&t, &gi)| gi / (1.0 + gsum) * (t - est) * (t - est))
        .sum();
    Ok(EstimateReport::wald(
        "matched_sets_weighted",
        "ate",
        est,
        var.sqrt(),
        alpha,
        estimates.len(),
    ))
}

/// Stratified covariate-interacted estimator: within-stratum Lin adjustment
/// (covariates centered within stratum) combined with stratum weights.
pub fn lin_sre(
    z: &[bool],
    y: &[f64],
    x: &MatrixOf<f64>,
    strata: &[usize],
    alpha: f64,
) -> Result<EstimateReport> {
    if z.len() != y.len() || strata.len() != y.len() || x.nrows() != y.len() {
        return Err(Error::invalid("input length mismatch"));
    }
    let k = strata.iter().max().map_or(0, |m| m + 1);
    let n = y.len() as f64;
    let mut est = 0.0;
    let mut var = 0.0;
    for s in 0..k {
        let idx: Vec<usize> = (0..y.len()).filter(|&i| strata[i] == s).collect();
        if idx.is_empty() {
            continue;
        }
        let zk: Vec<bool> = idx.iter().map(|&i| z[i]).collect();
        let yk: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
        let rows: Vec<Vec<f64>> = idx.iter().map(|&i| x.row(i).to_vec()).collect();
        let xk = MatrixOf::from_rows(&rows);
        let (e, se) = lin_adjust_parts(&zk, &yk, &xk).map_err(|err| {
            Error::invalid(format!("stratum {s} cannot support the adjusted fit: {err}"))
        })?;
        let w = yk.len() as f64 / n;
        est += w * e;
        var += w * w * se * se;
    }
    Ok(EstimateReport::wald(
        "lin_stratified",
        "ate",
        est,
        var.sqrt(),
        alpha,
        y.len(),
    ))
}
