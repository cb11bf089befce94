//! Instrumental-variable estimation: the Wald (complier average) estimator
//! with delta-method or bootstrap standard errors, the binary-instrument
//! mixture decomposition and testable inequalities, two-stage least squares
//! with corrected robust variance, weak-instrument-robust confidence sets,
//! and summary-statistic meta-analysis estimators.

use rayon::prelude::*;
use serde::Serialize;

use crate::bootstrap::{bootstrap, take, take_bool};
use crate::design::{lin_adjust_parts, neyman_cre};
use crate::error::{Error, Result};
use crate::linalg::MatrixOf;
use crate::regress::{ols, wls, CovKind};
use crate::report::EstimateReport;
use crate::special::normal_cdf;
use crate::stats::{mean, sample_var, split_by_arm};

/// Below this first-stage magnitude the ratio estimators refuse to report a
/// Wald-type standard error and point to the weak-instrument-robust set.
pub const WEAK_IV_TOL: f64 = 1e-8;

fn weak_iv_error(tau_d: f64) -> Error {
    Error::degenerate(format!(
        "first-stage effect {tau_d:.3e} is too close to zero; use the weak-instrument-robust confidence set instead"
    ))
}

/// Standard-error method for the Wald estimator.
#[derive(Debug, Clone, Copy)]
pub enum WaldSe {
    /// Delta method through the adjusted outcome `Y - tau_c D`.
    Delta,
    /// Nonparametric bootstrap of the ratio.
    Bootstrap { b: usize, seed: u64 },
}

fn diff_in_means(z: &[bool], v: &[f64]) -> Result<f64> {
    let (t, c) = split_by_arm(v, z);
    Ok(mean(&t)? - mean(&c)?)
}

/// Wald (complier-average) estimator `tau_Y / tau_D` for a binary instrument.
pub fn wald(z: &[bool], d: &[f64], y: &[f64], se: WaldSe, alpha: f64) -> Result<EstimateReport> {
    let n = y.len();
    if z.len() != n || d.len() != n {
        return Err(Error::invalid("input length mismatch"));
    }
    let tau_y = diff_in_means(z, y)?;
    let tau_d = diff_in_means(z, d)?;
    if tau_d.abs() < WEAK_IV_TOL {
        return Err(weak_iv_error(tau_d));
    }
    let tau_c = tau_y / tau_d;
    let se_val = match se {
        WaldSe::Delta => {
            // Neyman variance of the adjusted outcome A = Y - tau_c D.
            let a: Vec<f64> = y.iter().zip(d).map(|(&yi, &di)| yi - tau_c * di).collect();
            let (at, ac) = split_by_arm(&a, z);
            let v = sample_var(&at)? / at.len() as f64 + sample_var(&ac)? / ac.len() as f64;
            v.sqrt() / tau_d.abs()
        }
        WaldSe::Bootstrap { b, seed } => {
            bootstrap(n, b, seed, tau_c, |idx| {
                let zb = take_bool(z, idx);
                let td = diff_in_means(&zb, &take(d, idx))?;
                if td.abs() < WEAK_IV_TOL {
                    return Err(weak_iv_error(td));
                }
                Ok(diff_in_means(&zb, &take(y, idx))? / td)
            })?
            .se
        }
    };
    Ok(
        EstimateReport::wald("wald", "cace", tau_c, se_val, alpha, n)
            .with_diag("first_stage", tau_d)
            .with_diag("itt", tau_y),
    )
}

/// Covariate-adjusted Wald estimator: the ratio of regression-adjusted
/// instrument effects on `y` and on `d`, with a bootstrap standard error.
pub fn wald_adjusted(
    z: &[bool],
    d: &[f64],
    y: &[f64],
    x: &MatrixOf<f64>,
    b: usize,
    seed: u64,
    alpha: f64,
) -> Result<EstimateReport> {
    let n = y.len();
    let point_fn = |z: &[bool], d: &[f64], y: &[f64], x: &MatrixOf<f64>| -> Result<f64> {
        let (ty, _) = lin_adjust_parts(z, y, x)?;
        let (td, _) = lin_adjust_parts(z, d, x)?;
        if td.abs() < WEAK_IV_TOL {
            return Err(weak_iv_error(td));
        }
        Ok(ty / td)
    };
    let point = point_fn(z, d, y, x)?;
    let boot = bootstrap(n, b, seed, point, |idx| {
        point_fn(
            &take_bool(z, idx),
            &take(d, idx),
            &take(y, idx),
            &crate::propensity::take_rows(x, idx),
        )
    })?;
    Ok(
        EstimateReport::wald("wald_adjusted", "cace", point, boot.se, alpha, n)
            .with_diag("bootstrap_b", b),
    )
}

/// Counts `n_{zdy}` for a binary instrument, treatment, and outcome, in the
/// order `(n111, n110, n101, n100, n011, n010, n001, n000)`.
#[derive(Debug, Clone, Copy)]
pub struct BinaryIvCounts {
    pub n111: u64,
    pub n110: u64,
    pub n101: u64,
    pub n100: u64,
    pub n011: u64,
    pub n010: u64,
    pub n001: u64,
    pub n000: u64,
}

impl BinaryIvCounts {
    /// Construct from the eight counts in `n_{zdy}` order.
    pub fn from_array(c: [u64; 8]) -> Self {
        BinaryIvCounts {
            n111: c[0],
            n110: c[1],
            n101: c[2],
            n100: c[3],
            n011: c[4],
            n010: c[5],
            n001: c[6],
            n000: c[7],
        }
    }

    fn n1(&self) -> f64 {
        (self.n111 + self.n110 + self.n101 + self.n100) as f64
    }

    fn n0(&self) -> f64 {
        (self.n011 + self.n010 + self.n001 + self.n000) as f64
    }

    /// Expand to per-unit `(z, d, y)` records.
    pub fn to_records(&self) -> (Vec<bool>, Vec<f64>, Vec<f64>) {
        let mut z = Vec::new();
        let mut d = Vec::new();
        let mut y = Vec::new();
        let mut push = |count: u64, zi: bool, di: f64, yi: f64| {
            for _ in 0..count {
                z.push(zi);
                d.push(di);
                y.push(yi);
            }
        };
        push(self.n111, true, 1.0, 1.0);
        push(self.n110, true, 1.0, 0.0);
        push(self.n101, true, 0.0, 1.0);
        push(self.n100, true, 0.0, 0.0);
        push(self.n011, false, 1.0, 1.0);
        push(self.n010, false, 1.0, 0.0);
        push(self.n001, false, 0.0, 1.0);
        push(self.n000, false, 0.0, 0.0);
        (z, d, y)
    }
}

/// Mixture decomposition of a binary-instrument experiment into compliance
/// strata under randomization, monotonicity, and exclusion restrictions.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IvBinarySummary {
    /// Complier proportion.
    pub pi_c: f64,
    /// Never-taker proportion.
    pub pi_n: f64,
    /// Always-taker proportion.
    pub pi_a: f64,
    /// Complier mean outcome under treatment.
    pub mu_c1: f64,
    /// Complier mean outcome under control.
    pub mu_c0: f64,
    /// Never-taker mean outcome.
    pub mu_n: f64,
    /// Always-taker mean outcome.
    pub mu_a: f64,
    /// Complier average causal effect `mu_c1 - mu_c0`.
    pub tau_c: f64,
    /// True when an estimated mean falls outside `[0, 1]` for binary data,
    /// indicating a violation of the identifying assumptions.
    pub violation: bool,
}

/// Decompose the eight counts into compliance-stratum proportions and means.
pub fn binary_iv_decompose(counts: &BinaryIvCounts) -> Result<IvBinarySummary> {
    let n1 = counts.n1();
    let n0 = counts.n0();
    if n1 == 0.0 || n0 == 0.0 {
        return Err(Error::invalid("both instrument arms must be nonempty"));
    }
    let pi_n = (counts.n101 + counts.n100) as f64 / n1;
    let pi_a = (counts.n011 + counts.n010) as f64 / n0;
    let pi_c = 1.0 - pi_n - pi_a;
    if pi_c <= 0.0 {
        return Err(Error::degenerate(format!(
            "estimated complier proportion {pi_c:.4} is not positive; the instrument does not move the treatment"
        )));
    }
    let frac = |num: u64, den: u64| -> f64 {
        if den == 0 {
            f64::NAN
        } else {
            num as f64 / den as f64
        }
    };
    // Exclusion restriction: never-takers have one mean, always-takers one.
    let mu_n = frac(counts.n101, counts.n101 + counts.n100);
    let mu_a = frac(counts.n011, counts.n011 + counts.n010);
    let mean_y_z1d1 = frac(counts.n111, counts.n111 + counts.n110);
    let mean_y_z0d0 = frac(counts.n001, counts.n001 + counts.n000);
    // With no always-takers (or never-takers) the corresponding correction
    // term vanishes; avoid 0 * NaN from the undefined stratum mean.
    let a_term = if pi_a > 0.0 { pi_a * mu_a } else { 0.0 };
    let n_term = if pi_n > 0.0 { pi_n * mu_n } else { 0.0 };
    let mu_c1 = ((pi_c + pi_a) * mean_y_z1d1 - a_term) / pi_c;
    let mu_c0 = ((pi_c + pi_n) * mean_y_z0d0 - n_term) / pi_c;
    let tau_c = mu_c1 - mu_c0;
    let in01 = |v: f64| v.is_nan() || (-1e-12..=1.0 + 1e-12).contains(&v);
    let violation = !(in01(mu_c1) && in01(mu_c0));
    Ok(IvBinarySummary {
        pi_c,
        pi_n,
        pi_a,
        mu_c1,
        mu_c0,
        mu_n,
        mu_a,
        tau_c,
        violation,
    })
}

/// One testable instrumental-variable inequality.
#[derive(Debug, Clone, Serialize)]
pub struct IvInequality {
    /// Name of the transformed outcome `Q`.
    pub name: String,
    /// Estimated `E(Q | Z=1) - E(Q | Z=0)`; nonnegative under the IV
    /// assumptions.
    pub estimate: f64,
    /// True when the estimate is negative.
    pub violated: bool,
}

/// The four testable inequalities for a binary instrument, treatment, and
/// outcome: `E(Q|Z=1) >= E(Q|Z=0)` for `Q` in `{DY, D(1-Y), (D-1)Y,
/// D+Y-DY}`.
pub fn iv_inequalities(counts: &BinaryIvCounts) -> Result<Vec<IvInequality>> {
    let (z, d, y) = counts.to_records();
    let qs: [(&str, Box<dyn Fn(f64, f64) -> f64>); 4] = [
        ("d*y", Box::new(|di, yi| di * yi)),
        ("d*(1-y)", Box::new(|di, yi| di * (1.0 - yi))),
        ("(d-1)*y", Box::new(|di, yi| (di - 1.0) * yi)),
        ("d+y-d*y", Box::new(|di, yi| di + yi - di * yi)),
    ];
    qs.iter()
        .map(|(name, f)| {
            let q: Vec<f64> = d.iter().zip(&y).map(|(&di, &yi)| f(di, yi)).collect();
            let est = diff_in_means(&z, &q)?;
            Ok(IvInequality {
                name: (*name).to_string(),
                estimate: est,
                violated: est < 0.0,
            })
        })
        .collect()
}

/// Two-stage least squares of `y` on endogenous columns `d` with instruments
/// `z` and exogenous columns `x` (intercept added to both stages).
///
/// Returns one report per endogenous coefficient. The robust variance uses
/// residuals recomputed from the actual regressors, `Y - beta' D`, not the
/// second-stage residuals.
pub fn tsls(
    y: &[f64],
    d: &MatrixOf<f64>,
    z: &MatrixOf<f64>,
    x: &MatrixOf<f64>,
    alpha: f64,
) -> Result<Vec<EstimateReport>> {
    let n = y.len();
    let k = d.ncols();
    if z.ncols() < k {
        return Err(Error::invalid(format!(
            "under-identified: {} instruments for {k} endogenous regressors",
            z.ncols()
        )));
    }
    if d.nrows() != n || z.nrows() != n || x.nrows() != n {
        return Err(Error::invalid("input length mismatch"));
    }
    // Regressor matrix W = (1, D, X) and instrument matrix V = (1, Z, X).
    let mut wcols = vec![vec![1.0; n]];
    for j in 0..k {
        wcols.push(d.column(j));
    }
    for j in 0..x.ncols() {
        wcols.push(x.column(j));
    }
    let w = MatrixOf::from_columns(&wcols);
    let mut vcols = vec![vec![1.0; n]];
    for j in 0..z.ncols() {
        vcols.push(z.column(j));
    }
    for j in 0..x.ncols() {
        vcols.push(x.column(j));
    }
    let v = MatrixOf::from_columns(&vcols);

    // First stage: project every regressor column on the instruments.
    let mut what_cols = Vec::with_capacity(w.ncols());
    for j in 0..w.ncols() {
        let col = w.column(j);
        let fit = ols(&v, &col)?;
        what_cols.push(fit.fitted);
    }
    let what = MatrixOf::from_columns(&what_cols);

    // Second stage.
    let second = ols(&what, y)?;
    let beta = &second.coefficients;

    // Corrected residuals and sandwich.
    let resid: Vec<f64> = (0..n)
        .map(|i| {
            y[i]
                - w.row(i)
                    .iter()
                    .zip(beta)
                    .map(|(&a, &b)| a * b)
                    .sum::<f64>()
        })
        .collect();
    let p = what.ncols();
    let mut meat: MatrixOf<f64> = MatrixOf::zeros(p, p);
    for i in 0..n {
        let row = what.row(i);
        let r2 = resid[i] * resid[i];
        for a in 0..p {
            for b in 0..p {
                meat[(a, b)] += r2 * row[a] * row[b];
            }
        }
    }
    let bread = second.xtx_inverse.clone();
    let cov = bread.matmul(&meat).matmul(&bread);

    let mut reports = Vec::with_capacity(k);
    for j in 0..k {
        let idx = 1 + j;
        let se = cov[(idx, idx)].max(0.0).sqrt();
        reports.push(
            EstimateReport::wald("tsls", "endogenous_coefficient", beta[idx], se, alpha, n)
                .with_diag("column", j)
                .with_normal_p(),
        );
    }
    Ok(reports)
}

/// Indirect least squares for a single endogenous regressor and single
/// instrument: the ratio of the reduced-form instrument coefficients for `y`
/// and for `d`. Numerically identical to the TSLS coefficient.
pub fn ils(y: &[f64], d: &[f64], z: &[f64], x: &MatrixOf<f64>, alpha: f64) -> Result<EstimateReport> {
    let n = y.len();
    let mut cols = vec![vec![1.0; n], z.to_vec()];
    for j in 0..x.ncols() {
        cols.push(x.column(j));
    }
    let design = MatrixOf::from_columns(&cols);
    let gamma1 = ols(&design, d)?.coefficients[1];
    if gamma1.abs() < WEAK_IV_TOL {
        return Err(weak_iv_error(gamma1));
    }
    let big_gamma1 = ols(&design, y)?.coefficients[1];
    let estimate = big_gamma1 / gamma1;
    // SE via the TSLS corrected sandwich for the same fit.
    let dm = MatrixOf::from_columns(&[d.to_vec()]);
    let zm = MatrixOf::from_columns(&[z.to_vec()]);
    let report = tsls(y, &dm, &zm, x, alpha)?.remove(0);
    Ok(EstimateReport::wald("ils", "endogenous_coefficient", estimate, report.se, alpha, n)
        .with_diag("first_stage", gamma1))
}

/// Estimation mode for the weak-instrument-robust confidence set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FarMode {
    /// Difference in means of the adjusted outcome with the Neyman variance.
    Cre,
    /// Covariate-adjusted (interacted regression) estimator.
    CreCovariates,
    /// Coefficient of the instrument in an OLS of the adjusted outcome on
    /// `(1, Z, X)` with a robust standard error.
    LinearIv,
}

/// Shape of the confidence set on the evaluated grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FarShape {
    Interval,
    TwoIntervals,
    Empty,
    WholeLine,
}

/// A grid-evaluated weak-instrument-robust confidence set.
#[derive(Debug, Clone, Serialize)]
pub struct FarSet {
    /// Candidate effect values.
    pub grid: Vec<f64>,
    /// Two-sided p-value for zero instrument effect on `Y - bD` at each `b`.
    pub p_values: Vec<f64>,
    /// Maximal runs of grid points with `p >= alpha`, as `(lo, hi)` pairs.
    pub set: Vec<(f64, f64)>,
    /// Qualitative shape of the set.
    pub shape: FarShape,
    /// Grid point maximizing the p-value.
    pub point_estimate: f64,
}

/// Default grid for the robust confidence set: the Wald estimate plus/minus
/// ten delta-method standard errors, 401 points.
pub fn far_default_grid(z: &[bool], d: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let report = wald(z, d, y, WaldSe::Delta, 0.05)?;
    let half = 10.0 * report.se;
    let lo = report.estimate - half;
    let step = 2.0 * half / 400.0;
    Ok((0..401).map(|i| lo + step * i as f64).collect())
}

/// Weak-instrument-robust confidence set: invert the test of zero instrument
/// effect on the adjusted outcome `Y - bD` over the grid of `b`.
pub fn far_confidence_set(
    z: &[bool],
    d: &[f64],
    y: &[f64],
    x: Option<&MatrixOf<f64>>,
    grid: &[f64],
    alpha: f64,
    mode: FarMode,
) -> Result<FarSet> {
    if grid.is_empty() {
        return Err(Error::invalid("empty grid"));
    }
    let n = y.len();
    let p_values: Vec<f64> = grid
        .par_iter()
        .map(|&b| -> Result<f64> {
            let a: Vec<f64> = y.iter().zip(d).map(|(&yi, &di)| yi - b * di).collect();
            let (est, se) = match mode {
                FarMode::Cre => {
                    let r = neyman_cre(z, &a, alpha)?;
                    (r.estimate, r.se)
                }
                FarMode::CreCovariates => {
                    let xm = x.ok_or_else(|| Error::invalid("covariate mode needs X"))?;
                    lin_adjust_parts(z, &a, xm)?
                }
                FarMode::LinearIv => {
                    let zf: Vec<f64> = z.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
                    let mut cols = vec![vec![1.0; n], zf];
                    if let Some(xm) = x {
                        for j in 0..xm.ncols() {
                            cols.push(xm.column(j));
                        }
                    }
                    let fit = ols(&MatrixOf::from_columns(&cols), &a)?;
                    let se = fit.std_errors(CovKind::Hc0)[1];
                    (fit.coefficients[1], se)
                }
            };
            if se <= 0.0 {
                return Err(Error::degenerate("zero standard error in grid test"));
            }
            Ok(2.0 * (1.0 - normal_cdf((est / se).abs())))
        })
        .collect::<Result<_>>()?;

    let inside: Vec<bool> = p_values.iter().map(|&p| p >= alpha).collect();
    let mut set = Vec::new();
    let mut start: Option<usize> = None;
    for i in 0..grid.len() {
        match (inside[i], start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                set.push((grid[s], grid[i - 1]));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        set.push((grid[s], grid[grid.len() - 1]));
    }
    let shape = match set.len() {
        0 => FarShape::Empty,
        1 => {
            if inside.iter().all(|&b| b) {
                FarShape::WholeLine
            } else {
                FarShape::Interval
            }
        }
        2 => FarShape::TwoIntervals,
        _ => FarShape::TwoIntervals,
    };
    let best = p_values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| grid[i])
        .unwrap();
    Ok(FarSet {
        grid: grid.to_vec(),
        p_values,
        set,
        shape,
        point_estimate: best,
    })
}

/// Weighting variant for the fixed-effect meta-analysis estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MrVariant {
    /// Weights `1/se_j^2` with `se_j^2 = (se_Yj^2 + beta_j^2 se_Dj^2) /
    /// gamma_j^2`.
    Full,
    /// Weights `gamma_j^2 / se_Yj^2` (ignores first-stage uncertainty).
    OutcomeSeOnly,
}

/// Fixed-effect (inverse-variance weighted) combination of per-instrument
/// ratio estimates from summary statistics.
pub fn mr_fixed_effect(
    gamma: &[f64],
    se_d: &[f64],
    big_gamma: &[f64],
    se_y: &[f64],
    variant: MrVariant,
    alpha: f64,
) -> Result<EstimateReport> {
    let j = gamma.len();
    if se_d.len() != j || big_gamma.len() != j || se_y.len() != j || j == 0 {
        return Err(Error::invalid("summary vectors must share a positive length"));
    }
    if se_d.iter().chain(se_y).any(|&s| s <= 0.0) {
        return Err(Error::invalid("standard errors must be positive"));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..j {
        if gamma[i] == 0.0 {
            return Err(Error::degenerate("a per-instrument association with the treatment is zero"));
        }
        let beta_i = big_gamma[i] / gamma[i];
        let w = match variant {
            MrVariant::Full => {
                let se2 = (se_y[i].powi(2) + beta_i.powi(2) * se_d[i].powi(2)) / gamma[i].powi(2);
                1.0 / se2
            }
            MrVariant::OutcomeSeOnly => gamma[i].powi(2) / se_y[i].powi(2),
        };
        num += w * beta_i;
        den += w;
    }
    let estimate = num / den;
    let se = den.powf(-0.5);
    Ok(EstimateReport::wald(
        match variant {
            MrVariant::Full => "mr_fixed_effect",
            MrVariant::OutcomeSeOnly => "mr_fixed_effect_outcome_se",
        },
        "ratio_effect",
        estimate,
        se,
        alpha,
        j,
    )
    .with_normal_p())
}

/// Weighted regression of the per-instrument outcome associations on the
/// treatment associations, through the origin or with an intercept to absorb
/// directional pleiotropy. Default weights are `1/se_Y^2`.
pub fn mr_egger(
    gamma: &[f64],
    big_gamma: &[f64],
    weights: &[f64],
    with_intercept: bool,
    alpha: f64,
) -> Result<(EstimateReport, Option<EstimateReport>)> {
    let j = gamma.len();
    if big_gamma.len() != j || weights.len() != j {
        return Err(Error::invalid("summary vectors must share a length"));
    }
    if with_intercept && j < 2 {
        return Err(Error::invalid("the intercept variant needs at least two instruments"));
    }
    let cols: Vec<Vec<f64>> = if with_intercept {
        vec![vec![1.0; j], gamma.to_vec()]
    } else {
        vec![gamma.to_vec()]
    };
    let fit = wls(&MatrixOf::from_columns(&cols), big_gamma, weights)?;
    let ses = fit.std_errors(CovKind::Model);
    let slope_idx = usize::from(with_intercept);
    let slope = EstimateReport::wald(
        "mr_egger",
        "ratio_effect",
        fit.coefficients[slope_idx],
        ses[slope_idx],
        alpha,
        j,
    )
    .with_normal_p();
    let intercept = with_intercept.then(|| {
        EstimateReport::wald(
            "mr_egger_intercept",
            "directional_pleiotropy",
            fit.coefficients[0],
            ses[0],
            alpha,
            j,
        )
        .with_normal_p()
    });
    Ok((slope, intercept))
}
