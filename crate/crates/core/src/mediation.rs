// Copyright 2026 the causalkit authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Mediation and principal-stratification effect estimation.
//!
//! Four entry points:
//!
//! * [`baron_kenny`] — natural direct/indirect effects under linear mediator
//!   and outcome models, with the product-of-coefficients indirect effect and
//!   its delta-method (Sobel) standard error;
//! * [`mediation_formula_binary_m`] — the nonparametric mediation formula for
//!   a binary mediator, with per-arm working models averaged over the
//!   empirical covariate distribution and bootstrap standard errors;
//! * [`principal_score_weighting`] — effects within principal strata under
//!   strong monotonicity and principal ignorability, weighting the control
//!   arm by the principal score;
//! * [`cde_estimators`] — controlled direct effects at a fixed mediator
//!   level, treating `(z, m)` as a four-level treatment with regression, IPW
//!   (Horvitz–Thompson and Hajek), and doubly robust estimators.
//!
//! Natural direct/indirect effects additionally assume cross-world
//! independence between `Y(z, m)` and `M(z')` given covariates. That
//! assumption is untestable; reports carry it as a diagnostic caveat.
//!
//! Validated against R: point estimates of `baron_kenny` match
//! `lm` coefficient arithmetic with `car::hccm` component variances, and
//! `principal_score_weighting` matches a direct transcription of the
//! weighted-moment estimator with `glm(..., family = binomial)` principal
//! scores.

use serde::Serialize;

use crate::bootstrap::{bootstrap_ses, take, take_bool};
use crate::error::{Error, Result};
use crate::propensity::{take_rows, BootConfig};
use crate::regress::{self, CovKind};
use crate::report::EstimateReport;
use crate::stats;
use crate::{Logit, Matrix};

/// Caveat attached to every natural-effect report.
const CROSS_WORLD_CAVEAT: &str =
    "assumes cross-world independence of Y(z,m) and M(z') given X (untestable)";

/// Natural direct and indirect effect estimates.
#[derive(Debug, Clone, Serialize)]
pub struct MediationReport {
    /// Natural direct effect.
    pub nde: EstimateReport,
    /// Natural indirect effect.
    pub nie: EstimateReport,
}

/// Design matrix `(1, X)`; works for zero-column `x`.
fn intercept_design(x: &Matrix, n: usize) -> Matrix {
    let p = x.ncols();
    let mut data = Vec::with_capacity(n * (p + 1));
    for i in 0..n {
        data.push(1.0);
        if p > 0 {
            data.extend_from_slice(x.row(i));
        }
    }
    Matrix::from_vec(n, p + 1, data)
}

fn keep_indices(keep: &[bool]) -> Vec<usize> {
    keep.iter()
        .enumerate()
        .filter_map(|(i, &k)| if k { Some(i) } else { None })
        .collect()
}

/// Fit OLS of `y` on `design` over the kept rows; predict for every row.
fn cell_linear_predict(design: &Matrix, keep: &[bool], y: &[f64]) -> Result<Vec<f64>> {
    let idx = keep_indices(keep);
    if idx.is_empty() {
        return Err(Error::invalid("empty (z, m) cell in outcome model"));
    }
    let sub_y = take(y, &idx);
    let fit = regress::ols(&take_rows(design, &idx), &sub_y)?;
    Ok(design.matvec(&fit.coefficients))
}

/// Working model for `pr(M = 1 | ...)` fitted within one arm.
///
/// A degenerate arm (mediator constant) yields a constant probability of 0 or
/// 1 rather than a separation error, so that strong-monotonicity data and
/// constant mediators reduce to the textbook special cases exactly.
enum ProbModel {
    Constant(f64),
    Fit(Logit),
}

impl ProbModel {
    fn predict_all(&self, design: &Matrix) -> Vec<f64> {
        match self {
            ProbModel::Constant(p) => vec![*p; design.nrows()],
            ProbModel::Fit(fit) => (0..design.nrows())
                .map(|i| fit.predict(design.row(i)))
                .collect(),
        }
    }
}

/// Logistic fit of the binary mediator on `design` over the kept rows.
fn fit_prob(design: &Matrix, keep: &[bool], m: &[bool]) -> Result<ProbModel> {
    let idx = keep_indices(keep);
    if idx.is_empty() {
        return Err(Error::invalid("empty arm in mediator model"));
    }
    let first = m[idx[0]];
    if idx.iter().all(|&i| m[i] == first) {
        return Ok(ProbModel::Constant(if first { 1.0 } else { 0.0 }));
    }
    let sub_m: Vec<f64> = idx.iter().map(|&i| if m[i] { 1.0 } else { 0.0 }).collect();
    regress::logistic_fit(&take_rows(design, &idx), &sub_m).map(ProbModel::Fit)
}

fn check_lengths(n: usize, pieces: &[usize]) -> Result<()> {
    if pieces.iter().any(|&len| len != n) {
        return Err(Error::invalid("z, m, y, and X must have matching lengths"));
    }
    Ok(())
}

/// Natural direct and indirect effects under linear mediator and outcome
/// models (the product-of-coefficients method).
///
/// Fits `m ~ (1, z, X)` and `y ~ (1, z, m, X)` by OLS. Without interaction,
/// the direct effect is the treatment coefficient of the outcome model with
/// its heteroskedasticity-robust (HC0) standard error, and the indirect
/// effect is `theta_m * beta_z` with delta-method variance
/// `theta_m^2 v(beta_z) + beta_z^2 v(theta_m)` built from robust component
/// variances.
///
/// With `interaction`, the outcome model gains a `z*m` column and the effects
/// become `NDE = theta_z + theta_zm (beta_0 + beta_x' xbar)` and
/// `NIE = (theta_m + theta_zm) beta_z`, with delta-method variances that
/// treat the mediator baseline `beta_0 + beta_x' xbar` as fixed.
pub fn baron_kenny(
    z: &[bool],
    m: &[f64],
    y: &[f64],
    x: &Matrix,
    interaction: bool,
    alpha: f64,
) -> Result<MediationReport> {
    let n = z.len();
    check_lengths(n, &[m.len(), y.len(), if x.ncols() > 0 { x.nrows() } else { n }])?;
    let zf: Vec<f64> = z.iter().map(|&zi| if zi { 1.0 } else { 0.0 }).collect();
    let x_cols: Vec<Vec<f64>> = (0..x.ncols()).map(|j| x.column(j)).collect();

    let mut med_cols = vec![zf.clone()];
    med_cols.extend(x_cols.iter().cloned());
    let med_fit = regress::ols(&regress::design_with_intercept(&med_cols), m)?;
    let med_cov = med_fit.covariance(CovKind::Hc0);
    let beta_z = med_fit.coefficients[1];
    let v_beta_z = med_cov[(1, 1)];

    let mut out_cols = vec![zf.clone(), m.to_vec()];
    if interaction {
        out_cols.push(zf.iter().zip(m).map(|(&zi, &mi)| zi * mi).collect());
    }
    out_cols.extend(x_cols.iter().cloned());
    let out_fit = regress::ols(&regress::design_with_intercept(&out_cols), y)?;
    let out_cov = out_fit.covariance(CovKind::Hc0);
    let theta_z = out_fit.coefficients[1];
    let theta_m = out_fit.coefficients[2];

    let (nde, nde_se, nie, nie_se) = if interaction {
        let theta_zm = out_fit.coefficients[3];
        // Mediator baseline under control at the covariate mean.
        let mut baseline = med_fit.coefficients[0];
        for (j, col) in x_cols.iter().enumerate() {
            baseline += med_fit.coefficients[2 + j] * stats::mean(col)?;
        }
        let nde = theta_z + theta_zm * baseline;
        let v_nde = out_cov[(1, 1)]
            + baseline * baseline * out_cov[(3, 3)]
            + 2.0 * baseline * out_cov[(1, 3)];
        let slope = theta_m + theta_zm;
        let nie = slope * beta_z;
        let v_slope = out_cov[(2, 2)] + out_cov[(3, 3)] + 2.0 * out_cov[(2, 3)];
        let v_nie = slope * slope * v_beta_z + beta_z * beta_z * v_slope;
        (nde, v_nde.max(0.0).sqrt(), nie, v_nie.max(0.0).sqrt())
    } else {
        let v_nie = theta_m * theta_m * v_beta_z + beta_z * beta_z * out_cov[(2, 2)];
        (theta_z, out_cov[(1, 1)].sqrt(), theta_m * beta_z, v_nie.max(0.0).sqrt())
    };

    let method = if interaction { "baron_kenny_interaction" } else { "baron_kenny" };
    Ok(MediationReport {
        nde: EstimateReport::wald(method, "nde", nde, nde_se, alpha, n)
            .with_normal_p()
            .with_diag("caveat", CROSS_WORLD_CAVEAT),
        nie: EstimateReport::wald(method, "nie", nie, nie_se, alpha, n)
            .with_normal_p()
            .with_diag("caveat", CROSS_WORLD_CAVEAT),
    })
}

/// Point estimates of (NDE, NIE) from the binary-mediator mediation formula.
///
/// Outcome means use one linear fit per `(z, m)` cell; mediator
/// probabilities use one logistic fit per treatment arm. Both are averaged
/// over the empirical covariate distribution.
pub fn mediation_formula_points(
    z: &[bool],
    m: &[bool],
    y: &[f64],
    x: &Matrix,
) -> Result<(f64, f64)> {
    let n = z.len();
    check_lengths(n, &[m.len(), y.len(), if x.ncols() > 0 { x.nrows() } else { n }])?;
    let design = intercept_design(x, n);
    let cell = |zv: bool, mv: bool| -> Vec<bool> {
        z.iter().zip(m).map(|(&zi, &mi)| zi == zv && mi == mv).collect()
    };
    let mu11 = cell_linear_predict(&design, &cell(true, true), y)?;
    let mu10 = cell_linear_predict(&design, &cell(true, false), y)?;
    let mu01 = cell_linear_predict(&design, &cell(false, true), y)?;
    let mu00 = cell_linear_predict(&design, &cell(false, false), y)?;
    let not_z: Vec<bool> = z.iter().map(|&zi| !zi).collect();
    let p1 = fit_prob(&design, z, m)?.predict_all(&design);
    let p0 = fit_prob(&design, &not_z, m)?.predict_all(&design);

    let mut nde = 0.0;
    let mut nie = 0.0;
    for i in 0..n {
        nde += (mu11[i] - mu01[i]) * p0[i] + (mu10[i] - mu00[i]) * (1.0 - p0[i]);
        nie += (mu11[i] - mu10[i]) * (p1[i] - p0[i]);
    }
    Ok((nde / n as f64, nie / n as f64))
}

/// Natural direct and indirect effects for a binary mediator via the
/// nonparametric mediation formula, with bootstrap standard errors.
///
/// Working models (per-cell linear outcome, per-arm logistic mediator) are
/// refitted inside every bootstrap replicate.
pub fn mediation_formula_binary_m(
    z: &[bool],
    m: &[bool],
    y: &[f64],
    x: &Matrix,
    boot: &BootConfig,
) -> Result<MediationReport> {
    let n = z.len();
    let (nde, nie) = mediation_formula_points(z, m, y, x)?;
    let ses = bootstrap_ses(n, boot.b, boot.seed, |idx| {
        let (d, i) = mediation_formula_points(
            &take_bool(z, idx),
            &take_bool(m, idx),
            &take(y, idx),
            &take_rows(x, idx),
        )?;
        Ok(vec![d, i])
    })?;
    Ok(MediationReport {
        nde: EstimateReport::wald("mediation_formula", "nde", nde, ses[0], boot.alpha, n)
            .with_normal_p()
            .with_diag("bootstrap_b", boot.b as u64)
            .with_diag("caveat", CROSS_WORLD_CAVEAT),
        nie: EstimateReport::wald("mediation_formula", "nie", nie, ses[1], boot.alpha, n)
            .with_normal_p()
            .with_diag("bootstrap_b", boot.b as u64)
            .with_diag("caveat", CROSS_WORLD_CAVEAT),
    })
}

/// Point estimates of the principal-stratification effects `tau(1,0)` and
/// `tau(0,0)` by principal-score weighting.
///
/// Requires strong monotonicity (`M(0) = 0`): any unit with `Z = 0, M = 1`
/// is an error. A stratum with no treated units is reported as `None` rather
/// than an error, so callers can tell which contrast is undefined.
pub fn principal_score_points(
    z: &[bool],
    m: &[bool],
    y: &[f64],
    x: &Matrix,
) -> Result<(Option<f64>, Option<f64>)> {
    let n = z.len();
    check_lengths(n, &[m.len(), y.len(), if x.ncols() > 0 { x.nrows() } else { n }])?;
    let violations = z.iter().zip(m).filter(|&(&zi, &mi)| !zi && mi).count();
    if violations > 0 {
        return Err(Error::invalid(format!(
            "strong monotonicity requires M(0) = 0, but {violations} control units have M = 1"
        )));
    }
    let n1 = z.iter().filter(|&&zi| zi).count();
    let n0 = n - n1;
    if n1 == 0 || n0 == 0 {
        return Err(Error::degenerate("both treatment arms must be nonempty"));
    }
    let m1 = z.iter().zip(m).filter(|&(&zi, &mi)| zi && mi).count();
    let pi_10 = m1 as f64 / n1 as f64;
    let pi_00 = 1.0 - pi_10;

    let design = intercept_design(x, n);
    let ps = fit_prob(&design, z, m)?.predict_all(&design);
    let mut weighted_1 = 0.0;
    let mut weighted_0 = 0.0;
    for i in 0..n {
        if !z[i] {
            weighted_1 += ps[i] * y[i];
            weighted_0 += (1.0 - ps[i]) * y[i];
        }
    }
    let tau_10 = if m1 == 0 {
        None
    } else {
        let treated_mean = stats::mean_where(
            y,
            &z.iter().zip(m).map(|(&zi, &mi)| zi && mi).collect::<Vec<_>>(),
        )?;
        Some(treated_mean - weighted_1 / (pi_10 * n0 as f64))
    };
    let tau_00 = if m1 == n1 {
        None
    } else {
        let treated_mean = stats::mean_where(
            y,
            &z.iter().zip(m).map(|(&zi, &mi)| zi && !mi).collect::<Vec<_>>(),
        )?;
        Some(treated_mean - weighted_0 / (pi_00 * n0 as f64))
    };
    Ok((tau_10, tau_00))
}

/// Principal-score weighting estimates of `tau(1,0)` and `tau(0,0)` with
/// bootstrap standard errors.
///
/// The principal score `pr(M(1) = 1 | X)` comes from a treated-arm logistic
/// regression of the mediator on the covariates, refitted in every bootstrap
/// replicate.
pub fn principal_score_weighting(
    z: &[bool],
    m: &[bool],
    y: &[f64],
    x: &Matrix,
    boot: &BootConfig,
) -> Result<(EstimateReport, EstimateReport)> {
    let n = z.len();
    let (tau_10, tau_00) = principal_score_points(z, m, y, x)?;
    let tau_10 = tau_10.ok_or_else(|| {
        Error::degenerate("no treated units with M = 1; tau(1,0) is undefined")
    })?;
    let tau_00 = tau_00.ok_or_else(|| {
        Error::degenerate("all treated units have M = 1; tau(0,0) is undefined")
    })?;
    let ses = bootstrap_ses(n, boot.b, boot.seed, |idx| {
        let (t10, t00) = principal_score_points(
            &take_bool(z, idx),
            &take_bool(m, idx),
            &take(y, idx),
            &take_rows(x, idx),
        )?;
        match (t10, t00) {
            (Some(a), Some(b)) => Ok(vec![a, b]),
            _ => Err(Error::degenerate("degenerate principal stratum in replicate")),
        }
    })?;
    let report = |estimand: &str, est: f64, se: f64| {
        EstimateReport::wald("principal_score_weighting", estimand, est, se, boot.alpha, n)
            .with_normal_p()
            .with_diag("bootstrap_b", boot.b as u64)
    };
    Ok((
        report("tau_1_0", tau_10, ses[0]),
        report("tau_0_0", tau_00, ses[1]),
    ))
}

/// Which controlled-direct-effect estimator to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdeEstimator {
    /// Outcome-regression imputation.
    Reg,
    /// Horvitz–Thompson inverse probability weighting.
    Ht,
    /// Ratio-normalized (Hajek) inverse probability weighting.
    Hajek,
    /// Augmented IPW, consistent if either working model is correct.
    Dr,
}

impl CdeEstimator {
    fn method_name(self) -> &'static str {
        match self {
            CdeEstimator::Reg => "cde_reg",
            CdeEstimator::Ht => "cde_ht",
            CdeEstimator::Hajek => "cde_hajek",
            CdeEstimator::Dr => "cde_dr",
        }
    }
}

/// Point estimate of the controlled direct effect `CDE(m_level)`.
///
/// Treats `(z, m)` as a four-level treatment. The joint assignment
/// probability factors as `e_zm(x) = e_z(x) * e_m(z, x)` with a logistic
/// treatment model and per-arm logistic mediator models; outcome means use a
/// linear fit per `(z, m_level)` cell.
pub fn cde_point(
    z: &[bool],
    m: &[bool],
    y: &[f64],
    x: &Matrix,
    m_level: bool,
    estimator: CdeEstimator,
) -> Result<f64> {
    let n = z.len();
    check_lengths(n, &[m.len(), y.len(), if x.ncols() > 0 { x.nrows() } else { n }])?;
    let in1: Vec<bool> = z.iter().zip(m).map(|(&zi, &mi)| zi && mi == m_level).collect();
    let in0: Vec<bool> = z.iter().zip(m).map(|(&zi, &mi)| !zi && mi == m_level).collect();
    if !in1.iter().any(|&k| k) || !in0.iter().any(|&k| k) {
        return Err(Error::invalid(format!(
            "empty (z, m = {}) cell; the controlled direct effect at this mediator level is not estimable",
            u8::from(m_level)
        )));
    }

    let design = intercept_design(x, n);
    let mu1 = cell_linear_predict(&design, &in1, y)?;
    let mu0 = cell_linear_predict(&design, &in0, y)?;
    let reg = stats::mean(&mu1)? - stats::mean(&mu0)?;
    if estimator == CdeEstimator::Reg {
        return Ok(reg);
    }

    let everyone = vec![true; n];
    let e1 = fit_prob(&design, &everyone, z)?.predict_all(&design);
    let not_z: Vec<bool> = z.iter().map(|&zi| !zi).collect();
    let pm1 = fit_prob(&design, z, m)?.predict_all(&design);
    let pm0 = fit_prob(&design, &not_z, m)?.predict_all(&design);
    // Probability of the observed mediator level m_level within each arm.
    let level = |p: f64| if m_level { p } else { 1.0 - p };

    let mut ht1 = 0.0;
    let mut ht0 = 0.0;
    let mut w1 = 0.0;
    let mut w0 = 0.0;
    let mut aug1 = 0.0;
    let mut aug0 = 0.0;
    for i in 0..n {
        if in1[i] {
            let e = e1[i] * level(pm1[i]);
            if e <= 0.0 {
                return Err(Error::degenerate("zero estimated assignment probability"));
            }
            ht1 += y[i] / e;
            w1 += 1.0 / e;
            aug1 += (y[i] - mu1[i]) / e;
        } else if in0[i] {
            let e = (1.0 - e1[i]) * level(pm0[i]);
            if e <= 0.0 {
                return Err(Error::degenerate("zero estimated assignment probability"));
            }
            ht0 += y[i] / e;
            w0 += 1.0 / e;
            aug0 += (y[i] - mu0[i]) / e;
        }
    }
    let nf = n as f64;
    Ok(match estimator {
        CdeEstimator::Reg => unreachable!(),
        CdeEstimator::Ht => ht1 / nf - ht0 / nf,
        CdeEstimator::Hajek => ht1 / w1 - ht0 / w0,
        CdeEstimator::Dr => reg + aug1 / nf - aug0 / nf,
    })
}

/// Controlled direct effect `CDE(m_level)` with a bootstrap standard error.
///
/// All working models (treatment, mediator, outcome) are refitted in every
/// bootstrap replicate.
pub fn cde_estimators(
    z: &[bool],
    m: &[bool],
    y: &[f64],
    x: &Matrix,
    m_level: bool,
    estimator: CdeEstimator,
    boot: &BootConfig,
) -> Result<EstimateReport> {
    let n = z.len();
    let point = cde_point(z, m, y, x, m_level, estimator)?;
    let ses = bootstrap_ses(n, boot.b, boot.seed, |idx| {
        cde_point(
            &take_bool(z, idx),
            &take_bool(m, idx),
            &take(y, idx),
            &take_rows(x, idx),
            m_level,
            estimator,
        )
        .map(|v| vec![v])
    })?;
    Ok(
        EstimateReport::wald(estimator.method_name(), "cde", point, ses[0], boot.alpha, n)
            .with_normal_p()
            .with_diag("m_level", u8::from(m_level) as u64)
            .with_diag("bootstrap_b", boot.b as u64),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propensity::{self, IpwEstimator, OutcomeFamily};
    use crate::rng::rng_from_seed;
    use crate::special::normal_quantile;
    use rand::Rng;
    use rand_chacha::ChaCha8Rng;

    fn norm(rng: &mut ChaCha8Rng) -> f64 {
        normal_quantile(rng.gen::<f64>().clamp(1e-12, 1.0 - 1e-12))
    }

    fn sim_data(n: usize, seed: u64) -> (Vec<bool>, Vec<f64>, Vec<f64>, Matrix) {
        let mut rng = rng_from_seed(seed);
        let x_col: Vec<f64> = (0..n).map(|_| norm(&mut rng)).collect();
        let z: Vec<bool> = (0..n).map(|_| rng.gen::<f64>() < 0.5).collect();
        let m: Vec<f64> = x_col
            .iter()
            .zip(&z)
            .map(|(&xi, &zi)| 0.5 + 0.8 * f64::from(zi) + 0.3 * xi + norm(&mut rng))
            .collect();
        let y: Vec<f64> = x_col
            .iter()
            .zip(&z)
            .zip(&m)
            .map(|((&xi, &zi), &mi)| {
                1.0 + 0.6 * f64::from(zi) + 0.9 * mi - 0.4 * xi + norm(&mut rng)
            })
            .collect();
        (z, m, y, Matrix::from_columns(&[x_col]))
    }

    /// Difference method equals product method exactly: the total-effect OLS
    /// coefficient minus the direct effect equals the indirect effect.
    #[test]
    fn difference_equals_product() {
        let (z, m, y, x) = sim_data(120, 7);
        let report = baron_kenny(&z, &m, &y, &x, false, 0.05).unwrap();
        let zf: Vec<f64> = z.iter().map(|&zi| f64::from(zi)).collect();
        let total_fit = regress::ols(
            &regress::design_with_intercept(&[zf, x.column(0)]),
            &y,
        )
        .unwrap();
        let total = total_fit.coefficients[1];
        assert!((report.nde.estimate + report.nie.estimate - total).abs() < 1e-9);
    }

    /// Outcome built without any mediator dependence gives a numerically zero
    /// indirect effect.
    #[test]
    fn zero_mediator_coefficient_gives_zero_nie() {
        let (z, m, _, x) = sim_data(80, 11);
        // Exact linear function of (z, x) only.
        let y: Vec<f64> = z
            .iter()
            .zip(&x.column(0))
            .map(|(&zi, &xi)| 1.0 + 2.0 * f64::from(zi) + 0.5 * xi)
            .collect();
        let report = baron_kenny(&z, &m, &y, &x, false, 0.05).unwrap();
        assert!(report.nie.estimate.abs() < 1e-9);
        assert!((report.nde.estimate - 2.0).abs() < 1e-9);
    }

    /// The delta-method variance of the indirect effect matches a manual
    /// recomputation from the two regression fits.
    #[test]
    fn sobel_variance_oracle() {
        let (z, m, y, x) = sim_data(90, 13);
        let report = baron_kenny(&z, &m, &y, &x, false, 0.05).unwrap();
        let zf: Vec<f64> = z.iter().map(|&zi| f64::from(zi)).collect();
        let med = regress::ols(
            &regress::design_with_intercept(&[zf.clone(), x.column(0)]),
            &m,
        )
        .unwrap();
        let out = regress::ols(
            &regress::design_with_intercept(&[zf, m.clone(), x.column(0)]),
            &y,
        )
        .unwrap();
        let beta = med.coefficients[1];
        let theta = out.coefficients[2];
        let v_beta = med.covariance(CovKind::Hc0)[(1, 1)];
        let v_theta = out.covariance(CovKind::Hc0)[(2, 2)];
        let se = (theta * theta * v_beta + beta * beta * v_theta).sqrt();
        assert!((report.nie.se - se).abs() < 1e-12);
        assert!((report.nie.estimate - theta * beta).abs() < 1e-12);
    }

    /// With a z*m interaction column, the reported effects follow the stated
    /// closed-form combinations of the fitted coefficients.
    #[test]
    fn interaction_formula_oracle() {
        let (z, m, y, x) = sim_data(100, 17);
        let report = baron_kenny(&z, &m, &y, &x, true, 0.05).unwrap();
        let zf: Vec<f64> = z.iter().map(|&zi| f64::from(zi)).collect();
        let zm: Vec<f64> = zf.iter().zip(&m).map(|(&a, &b)| a * b).collect();
        let med = regress::ols(
            &regress::design_with_intercept(&[zf.clone(), x.column(0)]),
            &m,
        )
        .unwrap();
        let out = regress::ols(
            &regress::design_with_intercept(&[zf, m.clone(), zm, x.column(0)]),
            &y,
        )
        .unwrap();
        let xbar = stats::mean(&x.column(0)).unwrap();
        let baseline = med.coefficients[0] + med.coefficients[2] * xbar;
        let nde = out.coefficients[1] + out.coefficients[3] * baseline;
        let nie = (out.coefficients[2] + out.coefficients[3]) * med.coefficients[1];
        assert!((report.nde.estimate - nde).abs() < 1e-12);
        assert!((report.nie.estimate - nie).abs() < 1e-12);
    }

    fn binary_mediation_data(n: usize, seed: u64) -> (Vec<bool>, Vec<bool>, Vec<f64>, Matrix) {
        let mut rng = rng_from_seed(seed);
        let x_col: Vec<f64> = (0..n)
            .map(|_| if rng.gen::<f64>() < 0.5 { 1.0 } else { 0.0 })
            .collect();
        let z: Vec<bool> = (0..n).map(|_| rng.gen::<f64>() < 0.5).collect();
        let m: Vec<bool> = z
            .iter()
            .zip(&x_col)
            .map(|(&zi, &xi)| rng.gen::<f64>() < 0.25 + 0.35 * f64::from(zi) + 0.2 * xi)
            .collect();
        let y: Vec<f64> = z
            .iter()
            .zip(&m)
            .zip(&x_col)
            .map(|((&zi, &mi), &xi)| {
                0.5 + 1.2 * f64::from(zi) + 0.8 * f64::from(mi) + 0.4 * xi + 0.3 * norm(&mut rng)
            })
            .collect();
        (z, m, y, Matrix::from_columns(&[x_col]))
    }

    /// With a single binary covariate every working model is saturated, so
    /// the estimate must match the exhaustive discrete plug-in of the
    /// mediation formula over `(x, m)` cells.
    #[test]
    fn saturated_binary_covariate_matches_brute_force() {
        let (z, m, y, x) = binary_mediation_data(400, 19);
        let (nde, nie) = mediation_formula_points(&z, &m, &y, &x).unwrap();
        let xc = x.column(0);
        let n = z.len();
        let cell_mean = |zv: bool, mv: bool, xv: f64| -> f64 {
            let mut s = 0.0;
            let mut c = 0.0;
            for i in 0..n {
                if z[i] == zv && m[i] == mv && xc[i] == xv {
                    s += y[i];
                    c += 1.0;
                }
            }
            s / c
        };
        let m_prob = |zv: bool, xv: f64| -> f64 {
            let mut s = 0.0;
            let mut c = 0.0;
            for i in 0..n {
                if z[i] == zv && xc[i] == xv {
                    s += f64::from(m[i]);
                    c += 1.0;
                }
            }
            s / c
        };
        let mut brute_nde = 0.0;
        let mut brute_nie = 0.0;
        for i in 0..n {
            let xv = xc[i];
            let p1 = m_prob(true, xv);
            let p0 = m_prob(false, xv);
            brute_nde += (cell_mean(true, true, xv) - cell_mean(false, true, xv)) * p0
                + (cell_mean(true, false, xv) - cell_mean(false, false, xv)) * (1.0 - p0);
            brute_nie += (cell_mean(true, true, xv) - cell_mean(true, false, xv)) * (p1 - p0);
        }
        brute_nde /= n as f64;
        brute_nie /= n as f64;
        assert!((nde - brute_nde).abs() < 1e-8, "{nde} vs {brute_nde}");
        assert!((nie - brute_nie).abs() < 1e-8, "{nie} vs {brute_nie}");
    }

    /// An outcome that depends only on `(m, x)` yields an exactly zero direct
    /// effect (identical per-cell fits in both arms) and an indirect effect
    /// within bootstrap noise of zero when `z` does not move `m`.
    #[test]
    fn null_treatment_effects() {
        let mut rng = rng_from_seed(23);
        let n = 300;
        let x_col: Vec<f64> = (0..n)
            .map(|_| if rng.gen::<f64>() < 0.5 { 1.0 } else { 0.0 })
            .collect();
        let z: Vec<bool> = (0..n).map(|_| rng.gen::<f64>() < 0.5).collect();
        let m: Vec<bool> = x_col
            .iter()
            .map(|&xi| rng.gen::<f64>() < 0.3 + 0.3 * xi)
            .collect();
        let y: Vec<f64> = m
            .iter()
            .zip(&x_col)
            .map(|(&mi, &xi)| 2.0 + 1.5 * f64::from(mi) - 0.7 * xi)
            .collect();
        let x = Matrix::from_columns(&[x_col]);
        let boot = BootConfig { b: 200, seed: 5, alpha: 0.05 };
        let report = mediation_formula_binary_m(&z, &m, &y, &x, &boot).unwrap();
        assert!(report.nde.estimate.abs() < 1e-9, "nde = {}", report.nde.estimate);
        assert!(
            report.nie.estimate.abs() < 3.0 * report.nie.se.max(1e-6),
            "nie = {} se {}",
            report.nie.estimate,
            report.nie.se
        );
    }

    /// Under a data-generating process satisfying the linear-model
    /// assumptions, the nonparametric formula agrees with the
    /// product-of-coefficients method within bootstrap noise.
    #[test]
    fn agrees_with_linear_method_under_linear_truth() {
        let (z, m, y, x) = binary_mediation_data(500, 29);
        let mf: Vec<f64> = m.iter().map(|&mi| f64::from(mi)).collect();
        let boot = BootConfig { b: 200, seed: 31, alpha: 0.05 };
        let formula = mediation_formula_binary_m(&z, &m, &y, &x, &boot).unwrap();
        let linear = baron_kenny(&z, &mf, &y, &x, false, 0.05).unwrap();
        let d_nde = (formula.nde.estimate - linear.nde.estimate).abs();
        let d_nie = (formula.nie.estimate - linear.nie.estimate).abs();
        assert!(d_nde < 3.0 * formula.nde.se, "nde gap {d_nde}");
        assert!(d_nie < 3.0 * formula.nie.se.max(linear.nie.se), "nie gap {d_nie}");
    }

    fn monotone_data(n: usize, seed: u64) -> (Vec<bool>, Vec<bool>, Vec<f64>, Matrix) {
        let mut rng = rng_from_seed(seed);
        let x_col: Vec<f64> = (0..n).map(|_| norm(&mut rng)).collect();
        let z: Vec<bool> = (0..n).map(|_| rng.gen::<f64>() < 0.5).collect();
        let m: Vec<bool> = z
            .iter()
            .zip(&x_col)
            .map(|(&zi, &xi)| zi && rng.gen::<f64>() < 1.0 / (1.0 + (-0.3 - 0.5 * xi).exp()))
            .collect();
        let y: Vec<f64> = z
            .iter()
            .zip(&m)
            .zip(&x_col)
            .map(|((&zi, &mi), &xi)| {
                0.2 * f64::from(zi) + 0.5 * f64::from(mi) + 0.6 * xi + norm(&mut rng)
            })
            .collect();
        (z, m, y, Matrix::from_columns(&[x_col]))
    }

    /// A control unit with `M = 1` contradicts strong monotonicity.
    #[test]
    fn monotonicity_violation_is_an_error() {
        let (z, mut m, y, x) = monotone_data(60, 37);
        let control = z.iter().position(|&zi| !zi).unwrap();
        m[control] = true;
        let err = principal_score_points(&z, &m, &y, &x).unwrap_err();
        assert!(err.to_string().contains("strong monotonicity"), "{err}");
    }

    /// Without covariates the principal score is exactly constant and the
    /// weighting collapses: `tau(1,0)` is the `(Z=1, M=1)` mean minus the
    /// control mean.
    #[test]
    fn constant_score_collapses_to_mean_differences() {
        let (z, m, y, _) = monotone_data(150, 41);
        let x = Matrix::zeros(150, 0);
        let (t10, t00) = principal_score_points(&z, &m, &y, &x).unwrap();
        let keep11: Vec<bool> = z.iter().zip(&m).map(|(&zi, &mi)| zi && mi).collect();
        let control: Vec<bool> = z.iter().map(|&zi| !zi).collect();
        let oracle = stats::mean_where(&y, &keep11).unwrap()
            - stats::mean_where(&y, &control).unwrap();
        assert!((t10.unwrap() - oracle).abs() < 1e-10);
        assert!(t00.is_some());
    }

    /// All treated units taking `M = 1` leaves `tau(0,0)` undefined: the
    /// point function reports `None` with `tau(1,0)` equal to the difference
    /// in means, and the report-level operation errors.
    #[test]
    fn all_compliers_make_tau00_undefined() {
        let (z, _, y, x) = monotone_data(100, 43);
        let m: Vec<bool> = z.clone();
        let (t10, t00) = principal_score_points(&z, &m, &y, &x).unwrap();
        assert!(t00.is_none());
        let treated: Vec<bool> = z.clone();
        let control: Vec<bool> = z.iter().map(|&zi| !zi).collect();
        let diff = stats::mean_where(&y, &treated).unwrap()
            - stats::mean_where(&y, &control).unwrap();
        assert!((t10.unwrap() - diff).abs() < 1e-10);
        let boot = BootConfig { b: 50, seed: 3, alpha: 0.05 };
        let err = principal_score_weighting(&z, &m, &y, &x, &boot).unwrap_err();
        assert!(err.to_string().contains("tau(0,0)"), "{err}");
    }

    /// Bootstrap standard errors come back finite and positive on regular
    /// monotone data.
    #[test]
    fn principal_score_weighting_runs_with_bootstrap() {
        let (z, m, y, x) = monotone_data(250, 47);
        let boot = BootConfig { b: 100, seed: 9, alpha: 0.05 };
        let (r10, r00) = principal_score_weighting(&z, &m, &y, &x, &boot).unwrap();
        assert!(r10.se > 0.0 && r10.se.is_finite());
        assert!(r00.se > 0.0 && r00.se.is_finite());
        assert!(r10.ci[0] < r10.estimate && r10.estimate < r10.ci[1]);
    }

    /// With a constant mediator equal to the requested level, every CDE
    /// estimator reduces exactly to its standard two-arm ATE counterpart.
    #[test]
    fn constant_mediator_reduces_to_ate_estimators() {
        let (z, _, y, x) = sim_data(160, 53);
        let m = vec![true; 160];
        let scores = propensity::fit_pscore(&x, &z).unwrap().scores;
        let (mu1, mu0) =
            propensity::outcome_means(&x, &z, &y, OutcomeFamily::Linear).unwrap();
        let oracles = [
            propensity::reg_point(&mu1, &mu0).unwrap(),
            propensity::ipw_point(&scores, &z, &y, IpwEstimator::Ht).unwrap(),
            propensity::ipw_point(&scores, &z, &y, IpwEstimator::Hajek).unwrap(),
            propensity::dr_point(&scores, &z, &y, &mu1, &mu0).unwrap(),
        ];
        let estimators = [
            CdeEstimator::Reg,
            CdeEstimator::Ht,
            CdeEstimator::Hajek,
            CdeEstimator::Dr,
        ];
        for (est, oracle) in estimators.iter().zip(&oracles) {
            let got = cde_point(&z, &m, &y, &x, true, *est).unwrap();
            assert!((got - oracle).abs() < 1e-10, "{est:?}: {got} vs {oracle}");
        }
    }

    /// With a saturated discrete covariate all four working models are exact,
    /// so the four estimators coincide.
    #[test]
    fn saturated_discrete_estimators_coincide() {
        let (z, m, y, x) = binary_mediation_data(600, 59);
        let values: Vec<f64> = [
            CdeEstimator::Reg,
            CdeEstimator::Ht,
            CdeEstimator::Hajek,
            CdeEstimator::Dr,
        ]
        .iter()
        .map(|&e| cde_point(&z, &m, &y, &x, true, e).unwrap())
        .collect();
        for v in &values[1..] {
            assert!((v - values[0]).abs() < 1e-10, "{values:?}");
        }
    }

    /// Requesting a mediator level observed in neither arm is an error.
    #[test]
    fn empty_cell_is_an_error() {
        let (z, _, y, x) = sim_data(80, 61);
        let m = vec![true; 80];
        let err = cde_point(&z, &m, &y, &x, false, CdeEstimator::Reg).unwrap_err();
        assert!(err.to_string().contains("empty"), "{err}");
    }

    /// Under a linear outcome truth the controlled direct effect equals the
    /// treatment coefficient at every mediator level.
    #[test]
    fn linear_truth_cde_matches_treatment_coefficient() {
        let (z, m, y, x) = binary_mediation_data(500, 67);
        let boot = BootConfig { b: 150, seed: 71, alpha: 0.05 };
        for level in [false, true] {
            let report = cde_estimators(&z, &m, &y, &x, level, CdeEstimator::Dr, &boot).unwrap();
            assert!(
                (report.estimate - 1.2).abs() < 3.0 * report.se,
                "level {level}: {} se {}",
                report.estimate,
                report.se
            );
        }
    }

    /// The Hajek CDE is invariant to an outcome location shift.
    #[test]
    fn hajek_cde_location_invariant() {
        let (z, m, y, x) = binary_mediation_data(300, 73);
        let shifted: Vec<f64> = y.iter().map(|&v| v + 500.0).collect();
        let a = cde_point(&z, &m, &y, &x, true, CdeEstimator::Hajek).unwrap();
        let b = cde_point(&z, &m, &shifted, &x, true, CdeEstimator::Hajek).unwrap();
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }
}
