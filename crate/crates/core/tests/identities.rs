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

//! Exact algebraic-identity suite.
//!
//! Every test here asserts a finite-sample algebraic identity on randomly
//! generated data to machine precision (1e-9 unless noted). These identities
//! hold for any data, so a single seeded draw per test is a complete check.

use causalkit::contingency::{cornfield_bounding_factor, evalue};
use causalkit::design::{self, Population};
use causalkit::iv;
use causalkit::matching::{self, MatchTarget, Metric};
use causalkit::mediation;
use causalkit::propensity::{self, IpwEstimator, WlsTarget};
use causalkit::rdd::{sharp_rdd, RddSpec};
use causalkit::regress::{self, CovKind};
use causalkit::rng::rng_from_seed;
use causalkit::{Matrix, stats};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-9;

fn uniforms(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect()
}

/// Random dataset with a balanced binary treatment and two covariates.
fn random_data(seed: u64, n: usize) -> (Vec<bool>, Vec<f64>, Matrix) {
    let mut rng = rng_from_seed(seed);
    let x1 = uniforms(&mut rng, n);
    let x2 = uniforms(&mut rng, n);
    let z: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
    let y: Vec<f64> = (0..n)
        .map(|i| {
            1.0 + 1.5 * f64::from(z[i]) + 0.8 * x1[i] - 0.6 * x2[i] + 0.5 * rng.gen::<f64>()
        })
        .collect();
    (z, y, Matrix::from_columns(&[x1, x2]))
}

/// Frisch–Waugh–Lovell: the multiple-regression coefficient of a column
/// equals the slope from regressing residualized `y` on the residualized
/// column.
#[test]
fn fwl_partialling_out() {
    let (z, y, x) = random_data(1, 80);
    let zf: Vec<f64> = z.iter().map(|&b| f64::from(b)).collect();
    let full = regress::ols(
        &regress::design_with_intercept(&[zf.clone(), x.column(0), x.column(1)]),
        &y,
    )
    .unwrap();
    let controls = regress::design_with_intercept(&[x.column(0), x.column(1)]);
    let y_res = regress::fwl_residualize(&y, &controls).unwrap();
    let z_res = regress::fwl_residualize(&zf, &controls).unwrap();
    let num: f64 = z_res.iter().zip(&y_res).map(|(a, b)| a * b).sum();
    let den: f64 = z_res.iter().map(|a| a * a).sum();
    assert!((full.coefficients[1] - num / den).abs() < TOL);
    println!("PASS: identity - Frisch-Waugh-Lovell partialling out");
}

/// Cochran's omitted-variable decomposition: short coefficient = long
/// coefficient + (omitted coefficient) x (auxiliary slope of the omitted
/// variable on the kept one).
#[test]
fn cochran_decomposition() {
    let (z, y, x) = random_data(2, 70);
    let zf: Vec<f64> = z.iter().map(|&b| f64::from(b)).collect();
    let w = x.column(0);
    let long = regress::ols(
        &regress::design_with_intercept(&[zf.clone(), w.clone()]),
        &y,
    )
    .unwrap();
    let short = regress::ols(&regress::design_with_intercept(&[zf.clone()]), &y).unwrap();
    let aux = regress::ols(&regress::design_with_intercept(&[zf]), &w).unwrap();
    let reconstructed = long.coefficients[1] + long.coefficients[2] * aux.coefficients[1];
    assert!((short.coefficients[1] - reconstructed).abs() < TOL);
    println!("PASS: identity - Cochran omitted-variable decomposition");
}

/// Total sum of squares splits exactly into within-group and between-group
/// pieces.
#[test]
fn anova_decomposition() {
    let mut rng = rng_from_seed(3);
    let n = 90;
    let groups: Vec<usize> = (0..n).map(|i| i % 3) .collect();
    let y = uniforms(&mut rng, n);
    let total = (n - 1) as f64 * stats::sample_var(&y).unwrap();
    let grand = stats::mean(&y).unwrap();
    let mut within = 0.0;
    let mut between = 0.0;
    for g in 0..3 {
        let yg: Vec<f64> = (0..n).filter(|&i| groups[i] == g).map(|i| y[i]).collect();
        let mg = stats::mean(&yg).unwrap();
        within += (yg.len() - 1) as f64 * stats::sample_var(&yg).unwrap();
        between += yg.len() as f64 * (mg - grand) * (mg - grand);
    }
    assert!((total - within - between).abs() < TOL);
    println!("PASS: identity - ANOVA sum-of-squares decomposition");
}

/// The HC2 variance of the treatment slope in `y ~ (1, z)` equals the Neyman
/// variance estimate `s1^2/n1 + s0^2/n0`.
#[test]
fn hc2_equals_neyman() {
    let (z, y, _) = random_data(4, 60);
    let zf: Vec<f64> = z.iter().map(|&b| f64::from(b)).collect();
    let fit = regress::ols(&regress::design_with_intercept(&[zf]), &y).unwrap();
    let hc2_se = fit.std_errors(CovKind::Hc2)[1];
    let report = design::neyman_cre(&z, &y, 0.05).unwrap();
    assert!((hc2_se - report.se).abs() < TOL);
    println!("PASS: identity - HC2 slope variance equals Neyman variance");
}

/// Covariate-interacted regression on stratum dummies reproduces the
/// post-stratified estimator exactly.
#[test]
fn lin_on_dummies_equals_post_stratification() {
    let mut rng = rng_from_seed(5);
    let n = 96;
    let strata: Vec<usize> = (0..n).map(|i| i % 4).collect();
    // Two treated and two controls per stratum at minimum, by construction.
    let z: Vec<bool> = (0..n).map(|i| (i / 4) % 2 == 0).collect();
    let y: Vec<f64> = (0..n)
        .map(|i| strata[i] as f64 + 2.0 * f64::from(z[i]) + rng.gen::<f64>())
        .collect();
    let dummies: Vec<Vec<f64>> = (1..4)
        .map(|g| strata.iter().map(|&s| f64::from(s == g)).collect())
        .collect();
    let x = Matrix::from_columns(&dummies);
    let lin = design::lin_adjust(&z, &y, &x, Population::Finite, 0.05).unwrap();
    let strat = design::stratified(&z, &y, &strata, 0.05, false).unwrap();
    assert!((lin.estimate - strat.estimate).abs() < TOL);
    println!("PASS: identity - Lin regression on stratum dummies equals post-stratification");
}

/// The Hajek IPW estimator equals the coefficient of `z` in the weighted
/// least squares of `y` on `(1, z)` with inverse-probability weights.
#[test]
fn hajek_equals_wls_coefficient() {
    let (z, y, x) = random_data(6, 100);
    let scores = propensity::fit_pscore(&x, &z).unwrap().scores;
    let hajek = propensity::ipw_point(&scores, &z, &y, IpwEstimator::Hajek).unwrap();
    let wls_coef = propensity::hajek_wls_point(&scores, &z, &y, None, WlsTarget::Ate).unwrap();
    assert!((hajek - wls_coef).abs() < TOL);
    // Treated-population analogue.
    let att = propensity::att_points(&x, &z, &y, None).unwrap();
    let wls_att = propensity::hajek_wls_point(&scores, &z, &y, None, WlsTarget::Att).unwrap();
    assert!((att.hajek - wls_att).abs() < TOL);
    println!("PASS: identity - Hajek estimator equals WLS coefficient (ATE and ATT)");
}

/// With outcome models fitted by WLS under the same inverse-probability
/// weights, the augmentation terms vanish: the doubly robust estimator, the
/// weighted regression-imputation estimator, and the interacted WLS
/// treatment coefficient all coincide, for both estimands.
#[test]
fn wls_outcome_models_collapse_dr_and_regression() {
    let (z, y, x) = random_data(7, 120);
    let n = y.len();
    let scores = propensity::fit_pscore(&x, &z).unwrap().scores;

    let arm_wls = |arm: bool, w: &dyn Fn(usize) -> f64, center: &[f64]| -> Vec<f64> {
        let idx: Vec<usize> = (0..n).filter(|&i| z[i] == arm).collect();
        let mut cols = vec![vec![1.0; idx.len()]];
        for j in 0..x.ncols() {
            cols.push(idx.iter().map(|&i| x[(i, j)] - center[j]).collect());
        }
        let yw: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
        let ws: Vec<f64> = idx.iter().map(|&i| w(i)).collect();
        let fit = regress::wls(&Matrix::from_columns(&cols), &yw, &ws).unwrap();
        (0..n)
            .map(|i| {
                let mut v = fit.coefficients[0];
                for j in 0..x.ncols() {
                    v += fit.coefficients[1 + j] * (x[(i, j)] - center[j]);
                }
                v
            })
            .collect()
    };

    // --- ATE: weights 1/e and 1/(1-e), covariates centered at the grand mean.
    let grand: Vec<f64> = (0..x.ncols())
        .map(|j| stats::mean(&x.column(j)).unwrap())
        .collect();
    let w_ate = |i: usize| if z[i] { 1.0 / scores[i] } else { 1.0 / (1.0 - scores[i]) };
    let mu1 = arm_wls(true, &w_ate, &grand);
    let mu0 = arm_wls(false, &w_ate, &grand);
    let reg = propensity::reg_point(&mu1, &mu0).unwrap();
    let dr = propensity::dr_point(&scores, &z, &y, &mu1, &mu0).unwrap();
    let wls_coef = propensity::hajek_wls_point(&scores, &z, &y, Some(&x), WlsTarget::Ate).unwrap();
    assert!((reg - dr).abs() < TOL, "reg {reg} vs dr {dr}");
    assert!((reg - wls_coef).abs() < TOL, "reg {reg} vs wls {wls_coef}");

    // --- ATT: weights 1 (treated) and odds (controls), centered at the
    // treated covariate mean.
    let treated_mean: Vec<f64> = (0..x.ncols())
        .map(|j| {
            let col = x.column(j);
            let t: Vec<f64> = col.iter().zip(&z).filter(|(_, &zi)| zi).map(|(&v, _)| v).collect();
            stats::mean(&t).unwrap()
        })
        .collect();
    let w_att = |i: usize| if z[i] { 1.0 } else { scores[i] / (1.0 - scores[i]) };
    let mu0_att = arm_wls(false, &w_att, &treated_mean);
    let n1 = z.iter().filter(|&&b| b).count() as f64;
    let ybar1: f64 = y.iter().zip(&z).filter(|(_, &zi)| zi).map(|(&v, _)| v).sum::<f64>() / n1;
    let mu0bar1: f64 = mu0_att
        .iter()
        .zip(&z)
        .filter(|(_, &zi)| zi)
        .map(|(&v, _)| v)
        .sum::<f64>()
        / n1;
    let reg_att = ybar1 - mu0bar1;
    let aug: f64 = (0..n)
        .filter(|&i| !z[i])
        .map(|i| w_att(i) * (y[i] - mu0_att[i]))
        .sum::<f64>()
        / n1;
    let dr_att = reg_att - aug;
    let wls_att = propensity::hajek_wls_point(&scores, &z, &y, Some(&x), WlsTarget::Att).unwrap();
    assert!((reg_att - dr_att).abs() < TOL);
    assert!((reg_att - wls_att).abs() < TOL, "reg {reg_att} vs wls {wls_att}");
    println!("PASS: identity - WLS doubly robust = WLS regression = WLS coefficient (ATE and ATT)");
}

/// Matching estimators rewritten as weighting estimators with weights
/// `1 + K/M`: the uncorrected ATE and ATT estimates equal the explicit
/// weighted means, and the bias-corrected estimate equals the
/// regression-impute-plus-weighted-residual form.
#[test]
fn matching_dr_forms() {
    let (z, y, x) = random_data(8, 60);
    let n = y.len();
    let m = 2;

    // ATE without correction: weighted difference of arms.
    let est = matching::matching_estimate(&x, &z, &y, m, Metric::Euclidean, MatchTarget::Ate, false, 0.05)
        .unwrap();
    let mr = matching::match_nn(&x, &z, m, Metric::Euclidean, MatchTarget::Ate).unwrap();
    let weighted: f64 = (0..n)
        .map(|i| {
            let w = 1.0 + mr.counts[i] as f64 / m as f64;
            if z[i] { w * y[i] } else { -w * y[i] }
        })
        .sum::<f64>()
        / n as f64;
    assert!((est.estimate - weighted).abs() < TOL);

    // ATE with correction: regression imputation plus weighted residuals.
    let bc = matching::matching_estimate(&x, &z, &y, m, Metric::Euclidean, MatchTarget::Ate, true, 0.05)
        .unwrap();
    let (mu1, mu0) =
        propensity::outcome_means(&x, &z, &y, propensity::OutcomeFamily::Linear).unwrap();
    let reg = propensity::reg_point(&mu1, &mu0).unwrap();
    let corr: f64 = (0..n)
        .map(|i| {
            let w = 1.0 + mr.counts[i] as f64 / m as f64;
            let resid = y[i] - if z[i] { mu1[i] } else { mu0[i] };
            if z[i] { w * resid } else { -w * resid }
        })
        .sum::<f64>()
        / n as f64;
    assert!((bc.estimate - (reg + corr)).abs() < TOL);

    // ATT without correction: treated mean minus (K/M)-weighted control mean.
    let att = matching::matching_estimate(&x, &z, &y, m, Metric::Euclidean, MatchTarget::Att, false, 0.05)
        .unwrap();
    let mr_att = matching::match_nn(&x, &z, m, Metric::Euclidean, MatchTarget::Att).unwrap();
    let n1 = z.iter().filter(|&&b| b).count() as f64;
    let t_mean: f64 = y.iter().zip(&z).filter(|(_, &zi)| zi).map(|(&v, _)| v).sum::<f64>() / n1;
    let c_weighted: f64 = (0..n)
        .filter(|&i| !z[i])
        .map(|i| mr_att.counts[i] as f64 / m as f64 * y[i])
        .sum::<f64>()
        / n1;
    assert!((att.estimate - (t_mean - c_weighted)).abs() < TOL);
    println!("PASS: identity - matching weighting/DR forms (ATE and ATT)");
}

/// Indirect least squares (ratio of reduced forms) equals two-stage least
/// squares in the just-identified case.
#[test]
fn ils_equals_tsls() {
    let mut rng = rng_from_seed(9);
    let n = 100;
    let x1 = uniforms(&mut rng, n);
    let zf: Vec<f64> = (0..n).map(|_| f64::from(rng.gen::<f64>() < 0.5)).collect();
    let d: Vec<f64> = (0..n)
        .map(|i| 0.9 * zf[i] + 0.4 * x1[i] + rng.gen::<f64>())
        .collect();
    let y: Vec<f64> = (0..n)
        .map(|i| 1.2 * d[i] - 0.5 * x1[i] + rng.gen::<f64>())
        .collect();
    let x = Matrix::from_columns(&[x1]);
    let d_mat = Matrix::from_columns(&[d.clone()]);
    let z_mat = Matrix::from_columns(&[zf.clone()]);
    let tsls = iv::tsls(&y, &d_mat, &z_mat, &x, 0.05).unwrap();
    let ils = iv::ils(&y, &d, &zf, &x, 0.05).unwrap();
    assert!((tsls[0].estimate - ils.estimate).abs() < TOL);
    println!("PASS: identity - indirect least squares equals TSLS");

    // Control function: OLS of y on (1, d, x, first-stage residual) gives the
    // same coefficient on d.
    let first = regress::ols(
        &regress::design_with_intercept(&[zf.clone(), x1_col(&x)]),
        &d,
    )
    .unwrap();
    let vhat: Vec<f64> = d.iter().zip(&first.fitted).map(|(&a, &b)| a - b).collect();
    let cf = regress::ols(
        &regress::design_with_intercept(&[d.clone(), x1_col(&x), vhat]),
        &y,
    )
    .unwrap();
    assert!((tsls[0].estimate - cf.coefficients[1]).abs() < TOL);
    println!("PASS: identity - control function equals TSLS");
}

fn x1_col(x: &Matrix) -> Vec<f64> {
    x.column(0)
}

/// The difference method equals the product method for mediation under
/// linear models: total-effect coefficient = direct + indirect.
#[test]
fn mediation_difference_equals_product() {
    let mut rng = rng_from_seed(10);
    let n = 90;
    let x1 = uniforms(&mut rng, n);
    let z: Vec<bool> = (0..n).map(|_| rng.gen::<f64>() < 0.5).collect();
    let m: Vec<f64> = (0..n)
        .map(|i| 0.7 * f64::from(z[i]) + 0.3 * x1[i] + rng.gen::<f64>())
        .collect();
    let y: Vec<f64> = (0..n)
        .map(|i| 0.5 * f64::from(z[i]) + 0.9 * m[i] - 0.2 * x1[i] + rng.gen::<f64>())
        .collect();
    let x = Matrix::from_columns(&[x1.clone()]);
    let report = mediation::baron_kenny(&z, &m, &y, &x, false, 0.05).unwrap();
    let zf: Vec<f64> = z.iter().map(|&b| f64::from(b)).collect();
    let total = regress::ols(&regress::design_with_intercept(&[zf, x1]), &y)
        .unwrap()
        .coefficients[1];
    assert!((report.nde.estimate + report.nie.estimate - total).abs() < TOL);
    println!("PASS: identity - mediation difference method equals product method");
}

/// The split-slope regression `y ~ (1, z, r, l)` and the interacted
/// parametrization `y ~ (1, z, x - x0, z(x - x0))` span the same space, so
/// the jump estimate is identical.
#[test]
fn rdd_parametrization_equivalence() {
    let mut rng = rng_from_seed(11);
    let n = 200;
    let x: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect();
    let y: Vec<f64> = x
        .iter()
        .map(|&xi| {
            let jump = if xi >= 0.0 { 1.5 } else { 0.0 };
            jump + 0.8 * xi + rng.gen::<f64>()
        })
        .collect();
    let spec = RddSpec { x0: 0.0, h: 2.5 };
    let report = sharp_rdd(&spec, &x, &y, 0.05).unwrap();

    let centered: Vec<f64> = x.iter().map(|&v| v).collect();
    let zf: Vec<f64> = x.iter().map(|&v| f64::from(v >= 0.0)).collect();
    let inter: Vec<f64> = centered.iter().zip(&zf).map(|(&a, &b)| a * b).collect();
    let alt = regress::ols(
        &regress::design_with_intercept(&[zf, centered, inter]),
        &y,
    )
    .unwrap();
    assert!((report.estimate - alt.coefficients[1]).abs() < TOL);
    println!("PASS: identity - RDD parametrization equivalence");
}

/// The E-value inverts the Cornfield bounding factor: plugging the E-value in
/// for both confounder associations recovers the observed risk ratio.
#[test]
fn evalue_inverts_bounding_factor() {
    for rr in [1.3, 2.0, 10.7298] {
        let e = evalue(rr).unwrap();
        let recovered = cornfield_bounding_factor(e, e).unwrap();
        assert!((recovered - rr).abs() < TOL, "rr {rr}: {recovered}");
    }
    println!("PASS: identity - E-value inverts the bounding factor");
}
