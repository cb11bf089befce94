//! Partial identification and sensitivity analysis: worst-case bounds on the
//! average effect for a bounded outcome, survivor-average bounds under
//! monotonicity with interval-type confidence limits, worst-case p-values
//! under a bounded odds of hidden bias, and ratio-parameterized sensitivity
//! for the propensity-score estimators.

use serde::Serialize;

use crate::bootstrap::{bootstrap_ses, take, take_bool};
use crate::error::{Error, Result};
use crate::linalg::MatrixOf;
use crate::propensity::{
    fit_pscore, outcome_means, take_rows, BootConfig, OutcomeFamily, PsModel,
};
use crate::report::EstimateReport;
use crate::special::{normal_cdf, normal_quantile};
use crate::stats::midranks;

/// Lower and upper bounds on a partially identified effect, with optional
/// bootstrap standard errors and an interval-type confidence region.
#[derive(Debug, Clone, Serialize)]
pub struct BoundsReport {
    /// Estimated lower bound.
    pub lower: f64,
    /// Estimated upper bound.
    pub upper: f64,
    /// Bootstrap standard error of the lower bound.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub se_lower: Option<f64>,
    /// Bootstrap standard error of the upper bound.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub se_upper: Option<f64>,
    /// Confidence interval `[lower - z se_l, upper + z se_u]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci: Option<(f64, f64)>,
}

/// Worst-case bounds on the average effect when the outcome is known to lie
/// in `[y_min, y_max]`.
pub fn manski_bounds(z: &[bool], y: &[f64], y_min: f64, y_max: f64) -> Result<BoundsReport> {
    let n = y.len();
    if n == 0 || z.len() != n {
        return Err(Error::invalid("empty data or length mismatch"));
    }
    if y_min >= y_max {
        return Err(Error::invalid("need y_min < y_max"));
    }
    for &v in y {
        if v < y_min || v > y_max {
            return Err(Error::invalid(format!(
                "outcome {v} outside the stated range [{y_min}, {y_max}]"
            )));
        }
    }
    let n1 = z.iter().filter(|&&b| b).count();
    let p1 = n1 as f64 / n as f64;
    let p0 = 1.0 - p1;
    let mean_arm = |arm: bool| -> f64 {
        let vals: Vec<f64> = y
            .iter()
            .zip(z)
            .filter(|(_, &zi)| zi == arm)
            .map(|(&v, _)| v)
            .collect();
        if vals.is_empty() {
            0.0
        } else {
            vals.iter().sum::<f64>() / vals.len() as f64
        }
    };
    let m1 = mean_arm(true);
    let m0 = mean_arm(false);
    let lower = m1 * p1 + y_min * p0 - y_max * p1 - m0 * p0;
    let upper = m1 * p1 + y_max * p0 - y_min * p1 - m0 * p0;
    Ok(BoundsReport {
        lower,
        upper,
        se_lower: None,
        se_upper: None,
        ci: None,
    })
}

/// Counts for a treatment × survival × binary-outcome table where the outcome
/// is observed only for survivors.
#[derive(Debug, Clone, Copy)]
pub struct SurvivorTable {
    /// Treated, survived, outcome 1.
    pub z1_m1_y1: u64,
    /// Treated, survived, outcome 0.
    pub z1_m1_y0: u64,
    /// Treated, died.
    pub z1_m0: u64,
    /// Control, survived, outcome 1.
    pub z0_m1_y1: u64,
    /// Control, survived, outcome 0.
    pub z0_m1_y0: u64,
    /// Control, died.
    pub z0_m0: u64,
}

impl SurvivorTable {
    /// Total sample size.
    pub fn n(&self) -> u64 {
        self.z1_m1_y1 + self.z1_m1_y0 + self.z1_m0 + self.z0_m1_y1 + self.z0_m1_y0 + self.z0_m0
    }

    /// Expand the counts into per-unit records `(z, m, y)`; `y` is zero for
    /// units whose outcome is unobserved.
    pub fn to_records(&self) -> (Vec<bool>, Vec<bool>, Vec<f64>) {
        let mut z = Vec::new();
        let mut m = Vec::new();
        let mut y = Vec::new();
        let mut push = |count: u64, zi: bool, mi: bool, yi: f64| {
            for _ in 0..count {
                z.push(zi);
                m.push(mi);
                y.push(yi);
            }
        };
        push(self.z1_m1_y1, true, true, 1.0);
        push(self.z1_m1_y0, true, true, 0.0);
        push(self.z1_m0, true, false, 0.0);
        push(self.z0_m1_y1, false, true, 1.0);
        push(self.z0_m1_y0, false, true, 0.0);
        push(self.z0_m0, false, false, 0.0);
        (z, m, y)
    }
}

/// Stratum proportions and bound components for the survivor-average effect.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SurvivorDecomposition {
    /// Always-survivor proportion `pr(M=1 | Z=0)`.
    pub pi_11: f64,
    /// Never-survivor proportion `pr(M=0 | Z=1)`.
    pub pi_00: f64,
    /// Protected proportion (the remainder).
    pub pi_10: f64,
    /// Bounds on the treated-arm mean among always-survivors.
    pub mean1_bounds: (f64, f64),
    /// Observed control-arm survivor mean.
    pub mean0: f64,
}

fn survivor_pieces(z: &[bool], m: &[bool], y: &[f64]) -> Result<(f64, f64)> {
    // Returns (lower, upper) bounds on the survivor-average effect.
    let d = survivor_decompose(z, m, y)?;
    Ok((d.mean1_bounds.0 - d.mean0, d.mean1_bounds.1 - d.mean0))
}

/// Decompose unit records into principal-stratum proportions and bounds.
pub fn survivor_decompose(z: &[bool], m: &[bool], y: &[f64]) -> Result<SurvivorDecomposition> {
    let n = z.len();
    let count = |f: &dyn Fn(usize) -> bool| (0..n).filter(|&i| f(i)).count() as f64;
    let n1 = count(&|i| z[i]);
    let n0 = count(&|i| !z[i]);
    if n1 == 0.0 || n0 == 0.0 {
        return Err(Error::degenerate("an arm is empty"));
    }
    let surv1 = count(&|i| z[i] && m[i]);
    let surv0 = count(&|i| !z[i] && m[i]);
    if surv1 == 0.0 || surv0 == 0.0 {
        return Err(Error::degenerate("no survivors in an arm"));
    }
    let pi_11 = surv0 / n0;
    let pi_00 = (n1 - surv1) / n1;
    let pi_10 = 1.0 - pi_11 - pi_00;
    if pi_10 < 0.0 {
        return Err(Error::invalid(format!(
            "monotonicity violated: survival rate under treatment {:.4} is below the control rate {:.4}",
            surv1 / n1,
            pi_11
        )));
    }
    let mean_surv = |arm: bool| -> f64 {
        let (mut s, mut c) = (0.0, 0.0);
        for i in 0..n {
            if z[i] == arm && m[i] {
                s += y[i];
                c += 1.0;
            }
        }
        s / c
    };
    let e1 = mean_surv(true);
    let mean0 = mean_surv(false);
    let upper = (pi_11 + pi_10) * e1 / pi_11;
    let lower = upper - pi_10 / pi_11;
    Ok(SurvivorDecomposition {
        pi_11,
        pi_00,
        pi_10,
        mean1_bounds: (lower, upper),
        mean0,
    })
}

/// Bounds on the survivor-average effect for a binary outcome truncated by
/// death, assuming survival monotonicity, with a bootstrap interval of the
/// form `[lower - z se_l, upper + z se_u]`.
pub fn survivor_bounds(
    table: &SurvivorTable,
    alpha: f64,
    boot: Option<(usize, u64)>,
) -> Result<(BoundsReport, SurvivorDecomposition)> {
    let (z, m, y) = table.to_records();
    let decomp = survivor_decompose(&z, &m, &y)?;
    let (lower, upper) = survivor_pieces(&z, &m, &y)?;
    let mut report = BoundsReport {
        lower,
        upper,
        se_lower: None,
        se_upper: None,
        ci: None,
    };
    if let Some((b, seed)) = boot {
        let ses = bootstrap_ses(z.len(), b, seed, |idx| {
            let (l, u) = survivor_pieces(&take_bool(&z, idx), &take_bool(&m, idx), &take(&y, idx))?;
            Ok(vec![l, u])
        })?;
        let zq = normal_quantile(1.0 - alpha);
        report.se_lower = Some(ses[0]);
        report.se_upper = Some(ses[1]);
        report.ci = Some((lower - zq * ses[0], upper + zq * ses[1]));
    }
    Ok((report, decomp))
}

/// Pair statistic for the worst-case (bounded hidden bias) p-value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RosenbaumStat {
    /// Scores are the absolute pair differences.
    PairTAbs,
    /// Scores are the ranks of the absolute pair differences.
    SignedRank,
    /// Unit scores (sign test).
    Sign,
}

fn rosenbaum_scores(diffs: &[f64], stat: RosenbaumStat) -> Result<(Vec<f64>, Vec<bool>)> {
    let nonzero: Vec<f64> = diffs.iter().copied().filter(|&d| d != 0.0).collect();
    if nonzero.is_empty() {
        return Err(Error::degenerate("all pair differences are zero"));
    }
    let abs: Vec<f64> = nonzero.iter().map(|d| d.abs()).collect();
    let q = match stat {
        RosenbaumStat::PairTAbs => abs,
        RosenbaumStat::SignedRank => midranks(&abs),
        RosenbaumStat::Sign => vec![1.0; nonzero.len()],
    };
    let positive: Vec<bool> = nonzero.iter().map(|&d| d > 0.0).collect();
    Ok((q, positive))
}

/// Worst-case upper-tail p-value for the hypothesis of no effect when the
/// odds of treatment within a matched pair differ by at most `gamma`.
pub fn rosenbaum_pvalue(diffs: &[f64], gamma: f64, stat: RosenbaumStat) -> Result<f64> {
    if gamma < 1.0 {
        return Err(Error::invalid("gamma must be at least 1"));
    }
    let (q, positive) = rosenbaum_scores(diffs, stat)?;
    let t: f64 = q
        .iter()
        .zip(&positive)
        .filter(|(_, &p)| p)
        .map(|(&qi, _)| qi)
        .sum();
    let p_plus = gamma / (1.0 + gamma);
    let mean: f64 = p_plus * q.iter().sum::<f64>();
    let var: f64 = p_plus * (1.0 - p_plus) * q.iter().map(|&qi| qi * qi).sum::<f64>();
    if var <= 0.0 {
        return Err(Error::degenerate("zero variance"));
    }
    Ok(1.0 - normal_cdf((t - mean) / var.sqrt()))
}

/// A grid of sensitivity-parameter values with the associated p-values or
/// estimates.
#[derive(Debug, Clone, Serialize)]
pub struct SensitivityCurve {
    /// Strictly increasing parameter grid.
    pub grid: Vec<f64>,
    /// Value (p-value or estimate) at each grid point.
    pub values: Vec<f64>,
    /// The largest parameter at which the result stays significant, when it
    /// exists.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_star: Option<f64>,
}

/// Worst-case p-value curve over a grid of `gamma` values, plus the changepoint
/// `gamma* = sup{gamma : p(gamma) < alpha}` located by bisection.
pub fn gamma_curve(
    diffs: &[f64],
    grid: &[f64],
    stat: RosenbaumStat,
    alpha: f64,
) -> Result<SensitivityCurve> {
    if grid.is_empty() {
        return Err(Error::invalid("empty gamma grid"));
    }
    for w in grid.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::invalid("gamma grid must be strictly increasing"));
        }
    }
    let values: Vec<f64> = grid
        .iter()
        .map(|&g| rosenbaum_pvalue(diffs, g, stat))
        .collect::<Result<_>>()?;

    let gamma_star = if rosenbaum_pvalue(diffs, 1.0, stat)? >= alpha {
        None
    } else {
        // Find an upper bracket, then bisect; p(gamma) is continuous and
        // nondecreasing in gamma.
        let mut hi = 2.0;
        let cap = 1e8;
        while rosenbaum_pvalue(diffs, hi, stat)? < alpha && hi < cap {
            hi *= 2.0;
        }
        if hi >= cap {
            Some(cap)
        } else {
            let mut lo = 1.0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if rosenbaum_pvalue(diffs, mid, stat)? < alpha {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Some(0.5 * (lo + hi))
        }
    };
    Ok(SensitivityCurve {
        grid: grid.to_vec(),
        values,
        gamma_star,
    })
}

/// Estimator used in the ratio-parameterized sensitivity analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpsEstimator {
    /// Outcome-model predictive estimator.
    Pred,
    /// Weighted Horvitz–Thompson estimator.
    Ht,
    /// Normalized (Hajek) weighting estimator.
    Hajek,
    /// Doubly robust combination.
    Dr,
}

/// Point estimate of the average effect when the treated/control outcome
/// ratios `eps1 = E{Y(1)|Z=1,X} / E{Y(1)|Z=0,X}` and the analogous `eps0` are
/// fixed constants.
pub fn epsilon_point(
    ps: &PsModel,
    z: &[bool],
    y: &[f64],
    mu1: &[f64],
    mu0: &[f64],
    eps1: f64,
    eps0: f64,
    estimator: EpsEstimator,
) -> Result<f64> {
    if eps1 <= 0.0 || eps0 <= 0.0 {
        return Err(Error::invalid("sensitivity ratios must be positive"));
    }
    let n = y.len();
    let nf = n as f64;
    let e = &ps.scores;
    match estimator {
        EpsEstimator::Pred => {
            let mut acc = 0.0;
            for i in 0..n {
                if z[i] {
                    acc += y[i] - mu0[i] * eps0;
                } else {
                    acc += mu1[i] / eps1 - y[i];
                }
            }
            Ok(acc / nf)
        }
        EpsEstimator::Ht | EpsEstimator::Dr => {
            let mut acc = 0.0;
            for i in 0..n {
                let w1 = e[i] + (1.0 - e[i]) / eps1;
                let w0 = e[i] * eps0 + 1.0 - e[i];
                if z[i] {
                    acc += w1 * y[i] / e[i];
                } else {
                    acc -= w0 * y[i] / (1.0 - e[i]);
                }
            }
            let ht = acc / nf;
            if estimator == EpsEstimator::Ht {
                return Ok(ht);
            }
            let mut aug = 0.0;
            for i in 0..n {
                let zi = if z[i] { 1.0 } else { 0.0 };
                aug += (zi - e[i])
                    * (mu1[i] / (e[i] * eps1) + mu0[i] * eps0 / (1.0 - e[i]));
            }
            Ok(ht - aug / nf)
        }
        EpsEstimator::Hajek => {
            let (mut num1, mut den1, mut num0, mut den0) = (0.0, 0.0, 0.0, 0.0);
            for i in 0..n {
                if z[i] {
                    let w1 = e[i] + (1.0 - e[i]) / eps1;
                    num1 += w1 * y[i] / e[i];
                    den1 += 1.0 / e[i];
                } else {
                    let w0 = e[i] * eps0 + 1.0 - e[i];
                    num0 += w0 * y[i] / (1.0 - e[i]);
                    den0 += 1.0 / (1.0 - e[i]);
                }
            }
            if den1 <= 0.0 || den0 <= 0.0 {
                return Err(Error::degenerate("an arm has no weight"));
            }
            Ok(num1 / den1 - num0 / den0)
        }
    }
}

/// Full sensitivity pipeline: fit the propensity and outcome models, compute
/// the requested estimator at `(eps1, eps0)`, and bootstrap the whole
/// procedure for a standard error.
pub fn epsilon_sensitivity(
    x: &MatrixOf<f64>,
    z: &[bool],
    y: &[f64],
    eps1: f64,
    eps0: f64,
    estimator: EpsEstimator,
    family: OutcomeFamily,
    cfg: BootConfig,
) -> Result<EstimateReport> {
    let point_fn = |x: &MatrixOf<f64>, z: &[bool], y: &[f64]| -> Result<f64> {
        let ps = fit_pscore(x, z)?;
        let (mu1, mu0) = outcome_means(x, z, y, family)?;
        epsilon_point(&ps, z, y, &mu1, &mu0, eps1, eps0, estimator)
    };
    let point = point_fn(x, z, y)?;
    let boot = crate::bootstrap::bootstrap(y.len(), cfg.b, cfg.seed, point, |idx| {
        point_fn(&take_rows(x, idx), &take_bool(z, idx), &take(y, idx))
    })?;
    let name = match estimator {
        EpsEstimator::Pred => "eps_pred",
        EpsEstimator::Ht => "eps_ht",
        EpsEstimator::Hajek => "eps_hajek",
        EpsEstimator::Dr => "eps_dr",
    };
    Ok(
        EstimateReport::wald(name, "ate", point, boot.se, cfg.alpha, y.len())
            .with_diag("eps1", eps1)
            .with_diag("eps0", eps0)
            .with_diag("bootstrap_b", cfg.b),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propensity::{dr_point, ipw_point, IpwEstimator};
    use crate::rng::rng_from_seed;
    use rand::Rng;

    #[test]
    fn manski_symmetric_binary_case() {
        // Equal arms, both means 1/2, outcome in [0, 1]: bounds are [-1/2, 1/2].
        let z = vec![true, true, false, false];
        let y = vec![1.0, 0.0, 1.0, 0.0];
        let b = manski_bounds(&z, &y, 0.0, 1.0).unwrap();
        assert!((b.lower + 0.5).abs() < 1e-12);
        assert!((b.upper - 0.5).abs() < 1e-12);
    }

    #[test]
    fn manski_width_is_range() {
        let mut rng = rng_from_seed(5);
        let z: Vec<bool> = (0..50).map(|_| rng.gen()).collect();
        let y: Vec<f64> = (0..50).map(|_| f64::from(rng.gen::<bool>())).collect();
        let b = manski_bounds(&z, &y, 0.0, 1.0).unwrap();
        assert!((b.upper - b.lower - 1.0).abs() < 1e-12);
    }

    #[test]
    fn manski_all_treated_specialization() {
        let z = vec![true; 4];
        let y = vec![0.2, 0.4, 0.6, 0.8];
        let b = manski_bounds(&z, &y, 0.0, 1.0).unwrap();
        // Brute force: lower = E(Y|Z=1) - y_max, upper = E(Y|Z=1) - y_min.
        assert!((b.lower - (0.5 - 1.0)).abs() < 1e-12);
        assert!((b.upper - 0.5).abs() < 1e-12);
    }

    #[test]
    fn manski_rejects_out_of_range() {
        assert!(manski_bounds(&[true, false], &[0.5, 1.5], 0.0, 1.0).is_err());
    }

    #[test]
    fn survivor_point_identified_without_protected_stratum() {
        // Survival rates equal in both arms: pi_10 = 0, bounds collapse.
        let t = SurvivorTable {
            z1_m1_y1: 30,
            z1_m1_y0: 20,
            z1_m0: 50,
            z0_m1_y1: 10,
            z0_m1_y0: 40,
            z0_m0: 50,
        };
        let (b, d) = survivor_bounds(&t, 0.05, None).unwrap();
        assert!(d.pi_10.abs() < 1e-12);
        assert!((b.upper - b.lower).abs() < 1e-12);
        assert!((b.lower - (0.6 - 0.2)).abs() < 1e-12);
    }

    #[test]
    fn survivor_monotonicity_violation_rejected() {
        let t = SurvivorTable {
            z1_m1_y1: 10,
            z1_m1_y0: 10,
            z1_m0: 80,
            z0_m1_y1: 40,
            z0_m1_y0: 40,
            z0_m0: 20,
        };
        assert!(survivor_bounds(&t, 0.05, None).is_err());
    }

    #[test]
    fn rosenbaum_sign_at_gamma_one_is_binomial_normal() {
        let diffs = vec![1.5, 2.0, -0.5, 3.0, 1.0, -2.0, 0.5, 4.0];
        let p = rosenbaum_pvalue(&diffs, 1.0, RosenbaumStat::Sign).unwrap();
        let n = 8.0;
        let t = 6.0; // positives
        let expect = 1.0 - normal_cdf((t - n / 2.0) / (n / 4.0f64).sqrt());
        assert!((p - expect).abs() < 1e-9);
    }

    #[test]
    fn rosenbaum_signed_rank_classical_moments() {
        // Distinct magnitudes: at gamma = 1 the moments are the classical
        // sign-rank ones, m(m+1)/4 and m(m+1)(2m+1)/24.
        let diffs = vec![0.3, -1.2, 2.1, 0.7, -0.9, 1.8, 2.5];
        let m = diffs.len() as f64;
        let t: f64 = {
            let abs: Vec<f64> = diffs.iter().map(|d: &f64| d.abs()).collect();
            let ranks = midranks(&abs);
            diffs
                .iter()
                .zip(&ranks)
                .filter(|(&d, _)| d > 0.0)
                .map(|(_, &r)| r)
                .sum()
        };
        let mean = m * (m + 1.0) / 4.0;
        let var = m * (m + 1.0) * (2.0 * m + 1.0) / 24.0;
        let expect = 1.0 - normal_cdf((t - mean) / var.sqrt());
        let p = rosenbaum_pvalue(&diffs, 1.0, RosenbaumStat::SignedRank).unwrap();
        assert!((p - expect).abs() < 1e-9);
    }

    #[test]
    fn rosenbaum_p_monotone_in_gamma() {
        let diffs = vec![1.0, 2.0, 3.0, -0.5, 1.5, 2.5, 0.8, 1.2];
        for stat in [
            RosenbaumStat::PairTAbs,
            RosenbaumStat::SignedRank,
            RosenbaumStat::Sign,
        ] {
            let mut last = 0.0;
            for g in [1.0, 1.5, 2.0, 3.0, 5.0, 10.0] {
                let p = rosenbaum_pvalue(&diffs, g, stat).unwrap();
                assert!(p >= last - 1e-12, "p({g}) = {p} below {last}");
                last = p;
            }
        }
    }

    #[test]
    fn rosenbaum_rejects_gamma_below_one() {
        assert!(rosenbaum_pvalue(&[1.0, 2.0], 0.5, RosenbaumStat::Sign).is_err());
    }

    #[test]
    fn gamma_curve_strong_effect_exceeds_two() {
        // Large uniform shift: every difference positive and big.
        let diffs: Vec<f64> = (0..40).map(|i| 5.0 + 0.1 * i as f64).collect();
        let c = gamma_curve(&diffs, &[1.0, 2.0, 3.0], RosenbaumStat::PairTAbs, 0.05).unwrap();
        let gs = c.gamma_star.unwrap();
        assert!(gs > 2.0, "gamma* = {gs}");
        // Cross-check the changepoint by direct evaluation.
        assert!(rosenbaum_pvalue(&diffs, gs - 1e-4, RosenbaumStat::PairTAbs).unwrap() < 0.05);
        assert!(rosenbaum_pvalue(&diffs, gs + 1e-4, RosenbaumStat::PairTAbs).unwrap() >= 0.05);
    }

    #[test]
    fn gamma_curve_single_point_grid() {
        let diffs = vec![1.0, -2.0, 3.0, 0.5, 1.5];
        let c = gamma_curve(&diffs, &[1.0], RosenbaumStat::Sign, 0.05).unwrap();
        assert_eq!(c.values.len(), 1);
        let direct = rosenbaum_pvalue(&diffs, 1.0, RosenbaumStat::Sign).unwrap();
        assert_eq!(c.values[0], direct);
    }

    fn toy() -> (MatrixOf<f64>, Vec<bool>, Vec<f64>) {
        let mut rng = rng_from_seed(77);
        let n = 150;
        let x1: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        let z: Vec<bool> = x1
            .iter()
            .map(|&v| rng.gen::<f64>() < 1.0 / (1.0 + (-v).exp()))
            .collect();
        let y: Vec<f64> = x1
            .iter()
            .zip(&z)
            .map(|(&v, &zi)| 3.0 + v + if zi { 1.0 } else { 0.0 } + rng.gen::<f64>())
            .collect();
        (MatrixOf::from_columns(&[x1]), z, y)
    }

    #[test]
    fn epsilon_one_reduces_to_standard_estimators() {
        let (x, z, y) = toy();
        let ps = fit_pscore(&x, &z).unwrap();
        let (mu1, mu0) = outcome_means(&x, &z, &y, OutcomeFamily::Linear).unwrap();
        let ht = epsilon_point(&ps, &z, &y, &mu1, &mu0, 1.0, 1.0, EpsEstimator::Ht).unwrap();
        assert!((ht - ipw_point(&ps.scores, &z, &y, IpwEstimator::Ht).unwrap()).abs() < 1e-12);
        let hj = epsilon_point(&ps, &z, &y, &mu1, &mu0, 1.0, 1.0, EpsEstimator::Hajek).unwrap();
        assert!((hj - ipw_point(&ps.scores, &z, &y, IpwEstimator::Hajek).unwrap()).abs() < 1e-12);
        let dr = epsilon_point(&ps, &z, &y, &mu1, &mu0, 1.0, 1.0, EpsEstimator::Dr).unwrap();
        assert!((dr - dr_point(&ps.scores, &z, &y, &mu1, &mu0).unwrap()).abs() < 1e-10);
        // Predictive form at eps = 1.
        let pred = epsilon_point(&ps, &z, &y, &mu1, &mu0, 1.0, 1.0, EpsEstimator::Pred).unwrap();
        let n = y.len() as f64;
        let mut expect = 0.0;
        for i in 0..y.len() {
            expect += if z[i] { y[i] - mu0[i] } else { mu1[i] - y[i] };
        }
        assert!((pred - expect / n).abs() < 1e-12);
    }

    #[test]
    fn epsilon_estimate_decreasing_in_eps0() {
        // Positive control means: raising eps0 raises the imputed control
        // mean, so the estimate falls.
        let (x, z, y) = toy();
        let ps = fit_pscore(&x, &z).unwrap();
        let (mu1, mu0) = outcome_means(&x, &z, &y, OutcomeFamily::Linear).unwrap();
        for est in [EpsEstimator::Pred, EpsEstimator::Ht, EpsEstimator::Hajek] {
            let mut last = f64::INFINITY;
            for e0 in [0.5, 1.0, 1.5, 2.0] {
                let v = epsilon_point(&ps, &z, &y, &mu1, &mu0, 1.0, e0, est).unwrap();
                assert!(v < last, "{est:?} not decreasing at eps0 = {e0}");
                last = v;
            }
        }
    }
}
