//! Propensity-score observational estimators: stratification on the estimated
//! score, inverse probability weighting (Horvitz–Thompson and Hajek), doubly
//! robust estimation, treated-population (ATT) estimators, overlap weighting,
//! Hajek-as-WLS, covariate balance checks, and two-period sequential IPW.
//!
//! Standard errors for the weighting pipelines come from the nonparametric
//! bootstrap, refitting the propensity (and outcome) models inside each
//! resample so that first-stage uncertainty is captured.

use crate::bootstrap::{bootstrap, take, take_bool};
use crate::error::{Error, Result};
use crate::linalg::MatrixOf;
use crate::regress::{logistic_fit, ols, wls};
use crate::report::EstimateReport;
use crate::stats::mean;

/// Default number of propensity-score strata.
pub const DEFAULT_STRATA: usize = 5;
/// Default bootstrap replication count.
pub const DEFAULT_BOOTSTRAP: usize = 200;
/// Truncation presets exposed by the CLI.
pub const TRUNCATION_PRESETS: [(f64, f64); 3] = [(0.01, 0.99), (0.05, 0.95), (0.1, 0.9)];

/// A fitted propensity-score model.
#[derive(Debug, Clone)]
pub struct PsModel {
    /// Fitted probabilities, strictly inside (0, 1) after any truncation.
    pub scores: Vec<f64>,
    /// Logistic coefficients (intercept first).
    pub coefficients: Vec<f64>,
    /// Truncation bounds applied, if any.
    pub truncation: Option<(f64, f64)>,
}

/// Fit a logistic propensity model of `z` on `(1, X)`.
pub fn fit_pscore(x: &MatrixOf<f64>, z: &[bool]) -> Result<PsModel> {
    let n = z.len();
    if x.nrows() != n {
        return Err(Error::invalid("covariate/treatment length mismatch"));
    }
    let mut cols = vec![vec![1.0; n]];
    for j in 0..x.ncols() {
        cols.push(x.column(j));
    }
    let design = MatrixOf::from_columns(&cols);
    let zf: Vec<f64> = z.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let fit = logistic_fit(&design, &zf)?;
    Ok(PsModel {
        scores: fit.fitted,
        coefficients: fit.coefficients,
        truncation: None,
    })
}

impl PsModel {
    /// Clamp scores into `[lo, hi]` (order-preserving truncation).
    pub fn truncated(&self, lo: f64, hi: f64) -> Result<PsModel> {
        if !(0.0 < lo && lo < hi && hi < 1.0) {
            return Err(Error::invalid("truncation bounds must satisfy 0 < lo < hi < 1"));
        }
        Ok(PsModel {
            scores: self.scores.iter().map(|s| s.clamp(lo, hi)).collect(),
            coefficients: self.coefficients.clone(),
            truncation: Some((lo, hi)),
        })
    }
}

fn apply_trunc(model: PsModel, trunc: Option<(f64, f64)>) -> Result<PsModel> {
    match trunc {
        Some((lo, hi)) => model.truncated(lo, hi),
        None => Ok(model),
    }
}

/// Unnormalized vs normalized weighting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IpwEstimator {
    /// Horvitz–Thompson: simple weighted means over `n`.
    Ht,
    /// Hajek: each arm normalized by its weight sum.
    Hajek,
}

/// IPW point estimate of the average treatment effect from given scores.
pub fn ipw_point(scores: &[f64], z: &[bool], y: &[f64], estimator: IpwEstimator) -> Result<f64> {
    let n = y.len() as f64;
    let (mut sum1, mut sum0, mut w1, mut w0) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..y.len() {
        let e = scores[i];
        if !(e > 0.0 && e < 1.0) {
            return Err(Error::degenerate(format!("propensity score {e} outside (0,1)")));
        }
        if z[i] {
            sum1 += y[i] / e;
            w1 += 1.0 / e;
        } else {
            sum0 += y[i] / (1.0 - e);
            w0 += 1.0 / (1.0 - e);
        }
    }
    match estimator {
        IpwEstimator::Ht => Ok(sum1 / n - sum0 / n),
        IpwEstimator::Hajek => {
            if w1 <= 0.0 || w0 <= 0.0 {
                return Err(Error::degenerate("an arm has no weight"));
            }
            Ok(sum1 / w1 - sum0 / w0)
        }
    }
}

/// Outcome-model family for regression and doubly robust estimation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutcomeFamily {
    /// Per-arm ordinary least squares.
    Linear,
    /// Per-arm logistic regression (binary outcomes).
    Logistic,
}

/// Fit per-arm outcome models of `y` on `(1, X)` and return fitted means
/// `(mu1(X_i), mu0(X_i))` for every unit.
pub fn outcome_means(
    x: &MatrixOf<f64>,
    z: &[bool],
    y: &[f64],
    family: OutcomeFamily,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = y.len();
    let mut cols = vec![vec![1.0; n]];
    for j in 0..x.ncols() {
        cols.push(x.column(j));
    }
    let design = MatrixOf::from_columns(&cols);
    let fit_arm = |arm: bool| -> Result<Vec<f64>> {
        let idx: Vec<usize> = (0..n).filter(|&i| z[i] == arm).collect();
        if idx.is_empty() {
            return Err(Error::degenerate("an arm is empty"));
        }
        let rows: Vec<Vec<f64>> = idx.iter().map(|&i| design.row(i).to_vec()).collect();
        let sub = MatrixOf::from_rows(&rows);
        let ysub: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
        match family {
            OutcomeFamily::Linear => {
                let f = ols(&sub, &ysub)?;
                Ok((0..n).map(|i| dot(design.row(i), &f.coefficients)).collect())
            }
            OutcomeFamily::Logistic => {
                let f = logistic_fit(&sub, &ysub)?;
                Ok((0..n).map(|i| f.predict(design.row(i))).collect())
            }
        }
    };
    Ok((fit_arm(true)?, fit_arm(false)?))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Outcome-regression (g-formula) ATE: mean of `mu1(X) - mu0(X)`.
pub fn reg_point(mu1: &[f64], mu0: &[f64]) -> Result<f64> {
    let diffs: Vec<f64> = mu1.iter().zip(mu0).map(|(&a, &b)| a - b).collect();
    mean(&diffs)
}

/// Doubly robust (AIPW) ATE point estimate.
pub fn dr_point(scores: &[f64], z: &[bool], y: &[f64], mu1: &[f64], mu0: &[f64]) -> Result<f64> {
    let n = y.len() as f64;
    let mut acc = reg_point(mu1, mu0)?;
    for i in 0..y.len() {
        let e = scores[i];
        if z[i] {
            acc += (y[i] - mu1[i]) / e / n;
        } else {
            acc -= (y[i] - mu0[i]) / (1.0 - e) / n;
        }
    }
    Ok(acc)
}

/// Overlap-weighted estimand point estimate: the coefficient of `Z - e(X)` in
/// the no-intercept OLS of `Y` on `Z - e(X)`.
pub fn overlap_point(scores: &[f64], z: &[bool], y: &[f64]) -> Result<f64> {
    let resid: Vec<f64> = scores
        .iter()
        .zip(z)
        .map(|(&e, &zi)| if zi { 1.0 - e } else { -e })
        .collect();
    let denom: f64 = resid.iter().map(|r| r * r).sum();
    if denom <= 0.0 {
        return Err(Error::degenerate("Z - e(X) has no variation"));
    }
    Ok(resid.iter().zip(y).map(|(&r, &yi)| r * yi).sum::<f64>() / denom)
}

/// Target estimand for the Hajek-as-WLS estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WlsTarget {
    /// Average treatment effect: weights `Z/e + (1-Z)/(1-e)`, covariates
    /// centered at the grand mean.
    Ate,
    /// Effect on the treated: weights `Z + (1-Z) e/(1-e)`, covariates
    /// centered at the treated mean.
    Att,
}

/// Hajek estimator as a weighted least-squares coefficient: the coefficient
/// of `Z` in the WLS of `Y` on `(1, Z)` (no covariates) or `(1, Z, Xc, Z*Xc)`.
pub fn hajek_wls_point(
    scores: &[f64],
    z: &[bool],
    y: &[f64],
    x: Option<&MatrixOf<f64>>,
    target: WlsTarget,
) -> Result<f64> {
    let n = y.len();
    let w: Vec<f64> = scores
        .iter()
        .zip(z)
        .map(|(&e, &zi)| match target {
            WlsTarget::Ate => {
                if zi {
                    1.0 / e
                } else {
                    1.0 / (1.0 - e)
                }
            }
            WlsTarget::Att => {
                if zi {
                    1.0
                } else {
                    e / (1.0 - e)
                }
            }
        })
        .collect();
    let zf: Vec<f64> = z.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let mut cols = vec![vec![1.0; n], zf.clone()];
    if let Some(x) = x {
        // Centering point: grand mean for ATE, treated mean for ATT.
        for j in 0..x.ncols() {
            let col = x.column(j);
            let center = match target {
                WlsTarget::Ate => mean(&col)?,
                WlsTarget::Att => {
                    let treated: Vec<f64> = col
                        .iter()
                        .zip(z)
                        .filter(|(_, &zi)| zi)
                        .map(|(&v, _)| v)
                        .collect();
                    mean(&treated)?
                }
            };
            let centered: Vec<f64> = col.iter().map(|v| v - center).collect();
            cols.push(centered);
        }
        let p = x.ncols();
        for j in 0..p {
            let c = cols[2 + j].clone();
            cols.push(c.iter().zip(&zf).map(|(&a, &b)| a * b).collect());
        }
    }
    let fit = wls(&MatrixOf::from_columns(&cols), y, &w)?;
    Ok(fit.coefficients[1])
}

/// The five treated-population (ATT) point estimates.
#[derive(Debug, Clone, Copy)]
pub struct AttPoints {
    /// Coefficient of `Z` in the additive OLS of `Y` on `(1, Z, X)`.
    pub reg0: f64,
    /// Outcome-regression ATT: treated mean minus imputed control mean.
    pub reg: f64,
    /// Odds-weighted Horvitz–Thompson ATT.
    pub ht: f64,
    /// Odds-weighted Hajek ATT.
    pub hajek: f64,
    /// Doubly robust ATT.
    pub dr: f64,
}

/// Compute all ATT point estimates; the control-arm outcome model is linear.
///
/// `trunc_upper` truncates only the upper end of the score (the odds weight
/// `e/(1-e)` explodes as `e` approaches 1).
pub fn att_points(
    x: &MatrixOf<f64>,
    z: &[bool],
    y: &[f64],
    trunc_upper: Option<f64>,
) -> Result<AttPoints> {
    let n = y.len();
    let ps = fit_pscore(x, z)?;
    let scores: Vec<f64> = match trunc_upper {
        Some(hi) => ps.scores.iter().map(|s| s.min(hi)).collect(),
        None => ps.scores.clone(),
    };
    let n1 = z.iter().filter(|&&b| b).count();
    if n1 == 0 || n1 == n {
        return Err(Error::degenerate("an arm is empty"));
    }
    // Additive OLS.
    let zf: Vec<f64> = z.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let mut cols = vec![vec![1.0; n], zf];
    for j in 0..x.ncols() {
        cols.push(x.column(j));
    }
    let reg0 = ols(&MatrixOf::from_columns(&cols), y)?.coefficients[1];

    // Control-arm outcome model.
    let (_, mu0) = outcome_means(x, z, y, OutcomeFamily::Linear)?;
    let ybar1 = {
        let t: Vec<f64> = y.iter().zip(z).filter(|(_, &zi)| zi).map(|(&v, _)| v).collect();
        mean(&t)?
    };
    let mu0bar1 = {
        let t: Vec<f64> = mu0
            .iter()
            .zip(z)
            .filter(|(_, &zi)| zi)
            .map(|(&v, _)| v)
            .collect();
        mean(&t)?
    };
    let reg = ybar1 - mu0bar1;

    // Odds-weighted control means.
    let (mut sum_oy, mut sum_o, mut sum_or) = (0.0, 0.0, 0.0);
    for i in 0..n {
        if !z[i] {
            let e = scores[i];
            let odds = e / (1.0 - e);
            sum_oy += odds * y[i];
            sum_o += odds;
            sum_or += odds * (y[i] - mu0[i]);
        }
    }
    let ht = ybar1 - sum_oy / n1 as f64;
    if sum_o <= 0.0 {
        return Err(Error::degenerate("control arm has no odds weight"));
    }
    let hajek = ybar1 - sum_oy / sum_o;
    let dr = reg - sum_or / n1 as f64;

    Ok(AttPoints {
        reg0,
        reg,
        ht,
        hajek,
        dr,
    })
}

/// Two-period sequential IPW mean of `Y(a, b)`.
///
/// Fits `Z1 ~ (1, X0)` and `Z2 ~ (1, Z1, X1, X0)` by logistic regression.
pub fn sequential_ipw_point(
    z1: &[bool],
    z2: &[bool],
    y: &[f64],
    x0: &MatrixOf<f64>,
    x1: &MatrixOf<f64>,
    target: (bool, bool),
    estimator: IpwEstimator,
) -> Result<f64> {
    let n = y.len();
    if z1.len() != n || z2.len() != n || x0.nrows() != n || x1.nrows() != n {
        return Err(Error::invalid("input length mismatch"));
    }
    let e1 = fit_pscore(x0, z1)?.scores;
    // Second-period model includes Z1, X1, and X0.
    let z1f: Vec<f64> = z1.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let mut cols = vec![vec![1.0; n], z1f];
    for j in 0..x1.ncols() {
        cols.push(x1.column(j));
    }
    for j in 0..x0.ncols() {
        cols.push(x0.column(j));
    }
    let z2f: Vec<f64> = z2.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let fit2 = logistic_fit(&MatrixOf::from_columns(&cols), &z2f)?;
    let e2 = &fit2.fitted;

    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        if z1[i] == target.0 && z2[i] == target.1 {
            let p1 = if target.0 { e1[i] } else { 1.0 - e1[i] };
            let p2 = if target.1 { e2[i] } else { 1.0 - e2[i] };
            let w = 1.0 / (p1 * p2);
            num += w * y[i];
            den += w;
        }
    }
    match estimator {
        IpwEstimator::Ht => Ok(num / n as f64),
        IpwEstimator::Hajek => {
            if den <= 0.0 {
                return Err(Error::degenerate("no units in the target regime"));
            }
            Ok(num / den)
        }
    }
}

/// Extract the rows `idx` of a matrix (bootstrap resampling helper).
pub fn take_rows(x: &MatrixOf<f64>, idx: &[usize]) -> MatrixOf<f64> {
    let rows: Vec<Vec<f64>> = idx.iter().map(|&i| x.row(i).to_vec()).collect();
    MatrixOf::from_rows(&rows)
}

/// Configuration for the bootstrap wrapper of the observational estimators.
#[derive(Debug, Clone, Copy)]
pub struct BootConfig {
    /// Replication count.
    pub b: usize,
    /// Root seed.
    pub seed: u64,
    /// Two-sided interval level `1 - alpha`.
    pub alpha: f64,
}

/// IPW report: point estimate from the full data, bootstrap SE refitting the
/// propensity model inside each resample.
pub fn ipw(
    x: &MatrixOf<f64>,
    z: &[bool],
    y: &[f64],
    estimator: IpwEstimator,
    trunc: Option<(f64, f64)>,
    cfg: BootConfig,
) -> Result<EstimateReport> {
    let point_fn = |x: &MatrixOf<f64>, z: &[bool], y: &[f64]| -> Result<f64> {
        let ps = apply_trunc(fit_pscore(x, z)?, trunc)?;
        ipw_point(&ps.scores, z, y, estimator)
    };
    let point = point_fn(x, z, y)?;
    let boot = bootstrap(y.len(), cfg.b, cfg.seed, point, |idx| {
        point_fn(&take_rows(x, idx), &take_bool(z, idx), &take(y, idx))
    })?;
    let name = match estimator {
        IpwEstimator::Ht => "ipw_ht",
        IpwEstimator::Hajek => "ipw_hajek",
    };
    Ok(
        EstimateReport::wald(name, "ate", point, boot.se, cfg.alpha, y.len())
            .with_diag("bootstrap_b", cfg.b)
            .with_diag("bootstrap_dropped", boot.dropped),
    )
}

/// Doubly robust ATE report with bootstrap SE (both nuisance models refit per
/// resample).
pub fn doubly_robust_ate(
    x: &MatrixOf<f64>,
    z: &[bool],
    y: &[f64],
    family: OutcomeFamily,
    trunc: Option<(f64, f64)>,
    cfg: BootConfig,
) -> Result<EstimateReport> {
    let point_fn = |x: &MatrixOf<f64>, z: &[bool], y: &[f64]| -> Result<f64> {
        let ps = apply_trunc(fit_pscore(x, z)?, trunc)?;
        let (mu1, mu0) = outcome_means(x, z, y, family)?;
        dr_point(&ps.scores, z, y, &mu1, &mu0)
    };
    let point = point_fn(x, z, y)?;
    let boot = bootstrap(y.len(), cfg.b, cfg.seed, point, |idx| {
        point_fn(&take_rows(x, idx), &take_bool(z, idx), &take(y, idx))
    })?;
    Ok(
        EstimateReport::wald("doubly_robust", "ate", point, boot.se, cfg.alpha, y.len())
            .with_diag("bootstrap_b", cfg.b)
            .with_diag("bootstrap_dropped", boot.dropped),
    )
}

/// Outcome-regression ATE report with bootstrap SE.
pub fn regression_ate(
    x: &MatrixOf<f64>,
    z: &[bool],
    y: &[f64],
    family: OutcomeFamily,
    cfg: BootConfig,
) -> Result<EstimateReport> {
    let point_fn = |x: &MatrixOf<f64>, z: &[bool], y: &[f64]| -> Result<f64> {
        let (mu1, mu0) = outcome_means(x, z, y, family)?;
        reg_point(&mu1, &mu0)
    };
    let point = point_fn(x, z, y)?;
    let boot = bootstrap(y.len(), cfg.b, cfg.seed, point, |idx| {
        point_fn(&take_rows(x, idx), &take_bool(z, idx), &take(y, idx))
    })?;
    Ok(
        EstimateReport::wald("regression", "ate", point, boot.se, cfg.alpha, y.len())
            .with_diag("bootstrap_b", cfg.b),
    )
}

/// Propensity-score stratification: bins by `k` quantiles of the estimated
/// score, then the stratified experiment estimator.
pub fn ps_stratify(
    ps: &PsModel,
    z: &[bool],
    y: &[f64],
    k: usize,
    alpha: f64,
) -> Result<EstimateReport> {
    let strata = quantile_bins(&ps.scores, k);
    let mut r = crate::design::stratified(z, y, &strata, alpha, false)?;
    r.method = "ps_stratified".to_string();
    r.diagnostics
        .insert("k".to_string(), serde_json::json!(k));
    Ok(r)
}

/// Assign dense stratum indices by `k`-quantile bins of `scores`.
pub fn quantile_bins(scores: &[f64], k: usize) -> Vec<usize> {
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    // Breakpoints at the j/k empirical quantiles, 0 < j < k; bins are the
    // half-open intervals (b_{j-1}, b_j] so equal scores share a bin.
    let mut breaks: Vec<f64> = (1..k)
        .map(|j| sorted[((j * n) / k).saturating_sub(1).min(n - 1)])
        .collect();
    breaks.dedup_by(|a, b| a == b);
    let raw: Vec<usize> = scores
        .iter()
        .map(|&s| breaks.iter().filter(|&&b| s > b).count())
        .collect();
    // Re-label to dense indices.
    let mut seen: Vec<usize> = raw.clone();
    seen.sort_unstable();
    seen.dedup();
    raw.iter()
        .map(|r| seen.iter().position(|s| s == r).unwrap())
        .collect()
}

/// Covariate balance method.
#[derive(Debug, Clone, Copy)]
pub enum BalanceMethod {
    /// Stratify on `k` quantiles of the estimated score.
    Stratified(usize),
    /// Hajek weighting with bootstrap SEs.
    Hajek,
}

/// Balance check: treat each covariate as a pseudo-outcome; every interval
/// should cover 0 when the score model balances the covariates.
pub fn balance_check(
    x: &MatrixOf<f64>,
    z: &[bool],
    method: BalanceMethod,
    cfg: BootConfig,
) -> Result<Vec<EstimateReport>> {
    let mut out = Vec::with_capacity(x.ncols());
    for j in 0..x.ncols() {
        let pseudo = x.column(j);
        let report = match method {
            BalanceMethod::Stratified(k) => {
                let ps = fit_pscore(x, z)?;
                let mut r = ps_stratify(&ps, z, &pseudo, k, cfg.alpha)?;
                r.estimand = format!("balance_x{j}");
                r
            }
            BalanceMethod::Hajek => {
                let mut r = ipw(x, z, &pseudo, IpwEstimator::Hajek, None, cfg)?;
                r.estimand = format!("balance_x{j}");
                r
            }
        };
        out.push(report);
    }
    Ok(out)
}
