//! Regression core: ordinary and weighted least squares with model-based and
//! heteroskedasticity-robust covariances, logistic regression by Newton's
//! method with step halving, and Frisch–Waugh–Lovell residualization.
//!
//! Validated against R: coefficient paths match `lm`/`glm(family = binomial)`
//! and the HC covariances match `sandwich::vcovHC` types HC0–HC3.

use crate::error::{Error, Result};
use crate::linalg::{householder_lstsq, MatrixOf};
use crate::scalar::Real;
use crate::stats::mean;

/// Which covariance estimator to report for a least-squares fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovKind {
    /// Classical model-based `sigma^2 (X'X)^{-1}` with `sigma^2 = RSS/(n-p)`.
    Model,
    /// Sandwich with squared residuals.
    Hc0,
    /// HC0 scaled by `n/(n-p)`.
    Hc1,
    /// Squared residuals inflated by `1/(1-h_ii)`.
    Hc2,
    /// Squared residuals inflated by `1/(1-h_ii)^2`.
    Hc3,
}

/// A fitted (possibly weighted) least-squares regression.
#[derive(Debug, Clone)]
pub struct LinearFit<F> {
    /// Coefficient vector.
    pub coefficients: Vec<F>,
    /// Fitted values on the original (unweighted) scale.
    pub fitted: Vec<F>,
    /// Residuals on the original (unweighted) scale.
    pub residuals: Vec<F>,
    /// `(X'WX)^{-1}` (with `W = I` for OLS).
    pub xtx_inverse: MatrixOf<F>,
    // Weight-scaled design sqrt(w_i) x_i and residuals sqrt(w_i) e_i, from
    // which every covariance estimator is assembled.
    scaled_design: MatrixOf<F>,
    scaled_residuals: Vec<F>,
}

impl<F: Real> LinearFit<F> {
    /// Number of observations.
    pub fn n(&self) -> usize {
        self.scaled_design.nrows()
    }

    /// Number of design columns.
    pub fn p(&self) -> usize {
        self.scaled_design.ncols()
    }

    /// Leverages `h_ii` of the (weight-scaled) design.
    pub fn leverages(&self) -> Vec<F> {
        (0..self.n())
            .map(|i| {
                let xi = self.scaled_design.row(i);
                let ax = self.xtx_inverse.matvec(xi);
                xi.iter().zip(&ax).fold(F::zero(), |s, (&a, &b)| s + a * b)
            })
            .collect()
    }

    /// Residual variance estimate `RSS/(n - p)` on the weighted scale.
    pub fn sigma2(&self) -> F {
        let rss: F = self.scaled_residuals.iter().map(|&e| e * e).sum();
        rss / F::of_usize(self.n() - self.p())
    }

    /// Covariance matrix of the coefficients under the requested estimator.
    pub fn covariance(&self, kind: CovKind) -> MatrixOf<F> {
        let p = self.p();
        let n = self.n();
        if let CovKind::Model = kind {
            let s2 = self.sigma2();
            let mut out = self.xtx_inverse.clone();
            for i in 0..p {
                for j in 0..p {
                    out[(i, j)] = out[(i, j)] * s2;
                }
            }
            return out;
        }
        let lev = match kind {
            CovKind::Hc2 | CovKind::Hc3 => self.leverages(),
            _ => Vec::new(),
        };
        // Meat: sum of omega_i x_i x_i' over the scaled design.
        let mut meat = MatrixOf::zeros(p, p);
        for i in 0..n {
            let e2 = self.scaled_residuals[i] * self.scaled_residuals[i];
            let omega = match kind {
                CovKind::Hc0 => e2,
                CovKind::Hc1 => e2 * F::of_usize(n) / F::of_usize(n - p),
                CovKind::Hc2 => e2 / (F::one() - lev[i]),
                CovKind::Hc3 => {
                    let d = F::one() - lev[i];
                    e2 / (d * d)
                }
                CovKind::Model => unreachable!(),
            };
            let xi = self.scaled_design.row(i);
            for a in 0..p {
                for b in 0..p {
                    meat[(a, b)] = meat[(a, b)] + omega * xi[a] * xi[b];
                }
            }
        }
        self.xtx_inverse.matmul(&meat).matmul(&self.xtx_inverse)
    }

    /// Standard errors (square roots of the covariance diagonal).
    pub fn std_errors(&self, kind: CovKind) -> Vec<F> {
        let cov = self.covariance(kind);
        (0..self.p()).map(|j| cov[(j, j)].sqrt()).collect()
    }
}

/// Ordinary least squares of `y` on the columns of `x`.
pub fn ols<F: Real>(x: &MatrixOf<F>, y: &[F]) -> Result<LinearFit<F>> {
    let fit = householder_lstsq(x, y)?;
    let fitted = x.matvec(&fit.coefficients);
    let residuals: Vec<F> = y.iter().zip(&fitted).map(|(&yi, &fi)| yi - fi).collect();
    Ok(LinearFit {
        xtx_inverse: fit.xtx_inverse(),
        coefficients: fit.coefficients,
        fitted: fitted.clone(),
        scaled_design: x.clone(),
        scaled_residuals: residuals.clone(),
        residuals,
    })
}

/// Weighted least squares of `y` on the columns of `x` with nonnegative
/// weights `w`, solved through the square-root-weight-scaled design.
pub fn wls<F: Real>(x: &MatrixOf<F>, y: &[F], w: &[F]) -> Result<LinearFit<F>> {
    let n = x.nrows();
    if w.len() != n || y.len() != n {
        return Err(Error::invalid("weight/response length mismatch"));
    }
    if w.iter().any(|&wi| wi < F::zero() || !wi.is_finite()) {
        return Err(Error::invalid("weights must be finite and nonnegative"));
    }
    let sw: Vec<F> = w.iter().map(|&wi| wi.sqrt()).collect();
    let mut xs = MatrixOf::zeros(n, x.ncols());
    let mut ys = vec![F::zero(); n];
    for i in 0..n {
        for j in 0..x.ncols() {
            xs[(i, j)] = x[(i, j)] * sw[i];
        }
        ys[i] = y[i] * sw[i];
    }
    let fit = householder_lstsq(&xs, &ys)?;
    let fitted = x.matvec(&fit.coefficients);
    let residuals: Vec<F> = y.iter().zip(&fitted).map(|(&yi, &fi)| yi - fi).collect();
    let scaled_residuals: Vec<F> = residuals.iter().zip(&sw).map(|(&e, &s)| e * s).collect();
    Ok(LinearFit {
        xtx_inverse: fit.xtx_inverse(),
        coefficients: fit.coefficients,
        fitted,
        scaled_design: xs,
        scaled_residuals,
        residuals,
    })
}

/// Maximum Newton iterations for the logistic fit.
pub const LOGISTIC_MAX_ITER: usize = 100;
/// Convergence tolerance on the largest score component.
pub const LOGISTIC_SCORE_TOL: f64 = 1e-10;
/// Maximum step halvings per Newton iteration.
pub const LOGISTIC_MAX_HALVINGS: usize = 30;
/// Coefficient magnitude at which a still-improving fit is declared separated.
pub const LOGISTIC_SEPARATION_BOUND: f64 = 1e4;

/// A fitted logistic regression.
#[derive(Debug, Clone)]
pub struct LogisticFit<F> {
    /// Coefficient vector.
    pub coefficients: Vec<F>,
    /// Fitted probabilities.
    pub fitted: Vec<F>,
    /// Inverse observed information `(sum pi(1-pi) x x')^{-1}`.
    pub covariance: MatrixOf<F>,
    /// Newton iterations used.
    pub iterations: usize,
}

impl<F: Real> LogisticFit<F> {
    /// Standard errors from the inverse information.
    pub fn std_errors(&self) -> Vec<F> {
        (0..self.coefficients.len())
            .map(|j| self.covariance[(j, j)].sqrt())
            .collect()
    }

    /// Predicted probability for a covariate row.
    pub fn predict(&self, row: &[F]) -> F {
        let eta = row
            .iter()
            .zip(&self.coefficients)
            .fold(F::zero(), |s, (&a, &b)| s + a * b);
        F::one() / (F::one() + (-eta).exp())
    }
}

fn logistic_deviance<F: Real>(y: &[F], pi: &[F]) -> F {
    let eps = F::of(1e-300);
    let mut d = F::zero();
    for (&yi, &pii) in y.iter().zip(pi) {
        let p = pii.max(eps).min(F::one() - F::of(1e-16));
        d = d - F::of(2.0) * (yi * p.ln() + (F::one() - yi) * (F::one() - p).ln());
    }
    d
}

/// Logistic regression of a 0/1 response on the columns of `x` by Newton's
/// method with step halving.
///
/// Converges when the largest score component falls below
/// [`LOGISTIC_SCORE_TOL`] (raised to the scalar's achievable precision,
/// `8 n epsilon`, when that is larger); errors with [`Error::Separation`] when the deviance
/// keeps improving while a coefficient exceeds [`LOGISTIC_SEPARATION_BOUND`],
/// and with [`Error::NoConvergence`] after [`LOGISTIC_MAX_ITER`] iterations.
pub fn logistic_fit<F: Real>(x: &MatrixOf<F>, y: &[F]) -> Result<LogisticFit<F>> {
    let n = x.nrows();
    let p = x.ncols();
    if y.len() != n {
        return Err(Error::invalid("response length mismatch"));
    }
    if y.iter().any(|&v| v != F::zero() && v != F::one()) {
        return Err(Error::invalid("logistic response must be 0/1"));
    }
    let mut beta = vec![F::zero(); p];
    let mut pi: Vec<F> = vec![F::of(0.5); n];
    let mut dev = logistic_deviance(y, &pi);
    let mut iterations = 0;
    let weight_floor = F::of(1e-10);
    // The score is a sum of n O(1) terms, so its rounding noise is of order
    // n * epsilon; at f32 that floor exceeds the nominal f64 tolerance.
    let score_tol = LOGISTIC_SCORE_TOL.max(8.0 * n as f64 * F::epsilon().to64());

    loop {
        // Score X'(y - pi); check convergence.
        let score: Vec<F> = {
            let diff: Vec<F> = y.iter().zip(&pi).map(|(&a, &b)| a - b).collect();
            x.t_matvec(&diff)
        };
        let max_score = score
            .iter()
            .map(|s| s.abs())
            .fold(F::zero(), |m, s| if s > m { s } else { m });
        if max_score.to64() < score_tol {
            break;
        }
        if iterations >= LOGISTIC_MAX_ITER {
            return Err(Error::NoConvergence {
                iterations,
                last_score: max_score.to64(),
            });
        }
        let max_beta = beta
            .iter()
            .map(|b| b.abs())
            .fold(F::zero(), |m, b| if b > m { b } else { m });
        // Separation: the likelihood keeps improving while either a
        // coefficient diverges or the fit classifies every observation
        // perfectly (all fitted probabilities within 1e-8 of the labels), in
        // which case no finite maximizer exists.
        let max_resid = y
            .iter()
            .zip(&pi)
            .map(|(&a, &b)| (a - b).abs())
            .fold(F::zero(), |m, r| if r > m { r } else { m });
        if max_beta.to64() > LOGISTIC_SEPARATION_BOUND
            || (iterations > 0 && max_resid.to64() < 1e-8)
        {
            return Err(Error::Separation {
                iterations,
                max_abs_coef: max_beta.to64(),
            });
        }

        // Newton direction: solve (X' Pi X) delta = score via weighted least
        // squares on the working residual (y - pi)/w.
        let w: Vec<F> = pi
            .iter()
            .map(|&pii| (pii * (F::one() - pii)).max(weight_floor))
            .collect();
        let working: Vec<F> = y
            .iter()
            .zip(&pi)
            .zip(&w)
            .map(|((&yi, &pii), &wi)| (yi - pii) / wi)
            .collect();
        let delta = wls(x, &working, &w)?.coefficients;

        // Step halving on the deviance.
        let mut step = F::one();
        let mut accepted = false;
        for _ in 0..=LOGISTIC_MAX_HALVINGS {
            let cand: Vec<F> = beta
                .iter()
                .zip(&delta)
                .map(|(&b, &d)| b + step * d)
                .collect();
            let cand_pi: Vec<F> = (0..n)
                .map(|i| {
                    let eta = x
                        .row(i)
                        .iter()
                        .zip(&cand)
                        .fold(F::zero(), |s, (&a, &b)| s + a * b);
                    F::one() / (F::one() + (-eta).exp())
                })
                .collect();
            let cand_dev = logistic_deviance(y, &cand_pi);
            // Allow rounding-level deviance increases so the iteration does
            // not stall on a plateau just above the score tolerance.
            let slack = F::of(1e-12) * (F::one() + dev.abs());
            if cand_dev <= dev + slack || !dev.is_finite() {
                beta = cand;
                pi = cand_pi;
                dev = cand_dev;
                accepted = true;
                break;
            }
            step = step / F::of(2.0);
        }
        iterations += 1;
        if !accepted {
            return Err(Error::NoConvergence {
                iterations,
                last_score: max_score.to64(),
            });
        }
    }

    // Inverse observed information for standard errors.
    let w: Vec<F> = pi.iter().map(|&pii| pii * (F::one() - pii)).collect();
    let sw: Vec<F> = w.iter().map(|&wi| wi.sqrt()).collect();
    let mut xs = MatrixOf::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            xs[(i, j)] = x[(i, j)] * sw[i];
        }
    }
    let zeros = vec![F::zero(); n];
    let covariance = householder_lstsq(&xs, &zeros)?.xtx_inverse();

    Ok(LogisticFit {
        coefficients: beta,
        fitted: pi,
        covariance,
        iterations,
    })
}

/// Frisch–Waugh–Lovell residualization: residuals of the OLS regression of
/// `target` on the columns of `controls`.
pub fn fwl_residualize<F: Real>(target: &[F], controls: &MatrixOf<F>) -> Result<Vec<F>> {
    Ok(ols(controls, target)?.residuals)
}

/// Build a design matrix with a leading intercept column.
pub fn design_with_intercept<F: Real>(columns: &[Vec<F>]) -> MatrixOf<F> {
    let n = columns.first().map_or(0, |c| c.len());
    let mut cols: Vec<Vec<F>> = vec![vec![F::one(); n]];
    cols.extend(columns.iter().cloned());
    MatrixOf::from_columns(&cols)
}

/// Center each column at its grand mean; returns the centered columns and the
/// vector of means.
pub fn center_columns<F: Real>(columns: &[Vec<F>]) -> Result<(Vec<Vec<F>>, Vec<F>)> {
    let mut centered = Vec::with_capacity(columns.len());
    let mut means = Vec::with_capacity(columns.len());
    for col in columns {
        let m = mean(col)?;
        means.push(m);
        centered.push(col.iter().map(|&v| v - m).collect());
    }
    Ok((centered, means))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_design() -> (MatrixOf<f64>, Vec<f64>) {
        let x = MatrixOf::from_rows(&[
            vec![1.0, 0.2],
            vec![1.0, 1.4],
            vec![1.0, -0.7],
            vec![1.0, 2.3],
            vec![1.0, 0.9],
            vec![1.0, -1.2],
        ]);
        let y = vec![0.5, 2.9, -1.1, 5.2, 1.7, -2.4];
        (x, y)
    }

    #[test]
    fn ols_matches_normal_equations() {
        let (x, y) = toy_design();
        let fit = ols(&x, &y).unwrap();
        // Normal-equation oracle computed by direct 2x2 inversion.
        let n = 6.0;
        let sx: f64 = x.column(1).iter().sum();
        let sxx: f64 = x.column(1).iter().map(|v| v * v).sum();
        let sy: f64 = y.iter().sum();
        let sxy: f64 = x.column(1).iter().zip(&y).map(|(a, b)| a * b).sum();
        let det = n * sxx - sx * sx;
        let b1 = (n * sxy - sx * sy) / det;
        let b0 = (sy - b1 * sx) / n;
        assert!((fit.coefficients[0] - b0).abs() < 1e-12);
        assert!((fit.coefficients[1] - b1).abs() < 1e-12);
    }

    #[test]
    fn hc_variants_order_and_model_se() {
        let (x, y) = toy_design();
        let fit = ols(&x, &y).unwrap();
        let se_model = fit.std_errors(CovKind::Model);
        assert!(se_model.iter().all(|s| s.is_finite() && *s > 0.0));
        let v0 = fit.covariance(CovKind::Hc0)[(1, 1)];
        let v1 = fit.covariance(CovKind::Hc1)[(1, 1)];
        let v2 = fit.covariance(CovKind::Hc2)[(1, 1)];
        let v3 = fit.covariance(CovKind::Hc3)[(1, 1)];
        // HC1 = HC0 * n/(n-p); HC2 and HC3 inflate progressively.
        assert!((v1 - v0 * 6.0 / 4.0).abs() < 1e-12);
        assert!(v2 > v0 && v3 > v2);
    }

    #[test]
    fn wls_with_unit_weights_equals_ols() {
        let (x, y) = toy_design();
        let f1 = ols(&x, &y).unwrap();
        let f2 = wls(&x, &y, &vec![1.0; 6]).unwrap();
        for j in 0..2 {
            assert!((f1.coefficients[j] - f2.coefficients[j]).abs() < 1e-12);
        }
        let c1 = f1.covariance(CovKind::Hc2);
        let c2 = f2.covariance(CovKind::Hc2);
        assert!((c1[(1, 1)] - c2[(1, 1)]).abs() < 1e-14);
    }

    #[test]
    fn wls_matches_replication_oracle() {
        // Integer weights: WLS coefficients equal OLS on replicated rows.
        let (x, y) = toy_design();
        let w = vec![2.0, 1.0, 3.0, 1.0, 2.0, 1.0];
        let f = wls(&x, &y, &w).unwrap();
        let mut rows = Vec::new();
        let mut yy = Vec::new();
        for i in 0..6 {
            for _ in 0..w[i] as usize {
                rows.push(x.row(i).to_vec());
                yy.push(y[i]);
            }
        }
        let f2 = ols(&MatrixOf::from_rows(&rows), &yy).unwrap();
        for j in 0..2 {
            assert!((f.coefficients[j] - f2.coefficients[j]).abs() < 1e-10);
        }
    }

    #[test]
    fn logistic_recovers_balanced_intercept() {
        // Intercept-only fit: pi-hat must equal the sample proportion.
        let x = MatrixOf::from_rows(&(0..10).map(|_| vec![1.0]).collect::<Vec<_>>());
        let y = vec![1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0];
        let fit = logistic_fit(&x, &y).unwrap();
        let phat = 0.6f64;
        assert!((fit.coefficients[0] - (phat / (1.0 - phat)).ln()).abs() < 1e-8);
        // Information for intercept-only: n p (1-p); se = 1/sqrt of that.
        let se = fit.std_errors()[0];
        assert!((se - 1.0 / (10.0 * phat * (1.0 - phat)).sqrt()).abs() < 1e-8);
    }

    #[test]
    fn logistic_flags_separation() {
        // Perfectly separated data.
        let x = MatrixOf::from_rows(
            &(-5..=5)
                .map(|v| vec![1.0, v as f64])
                .collect::<Vec<_>>(),
        );
        let y: Vec<f64> = (-5..=5).map(|v| if v > 0 { 1.0 } else { 0.0 }).collect();
        match logistic_fit(&x, &y) {
            Err(Error::Separation { .. }) => {}
            other => panic!("expected separation, got {other:?}"),
        }
    }

    #[test]
    fn fwl_matches_long_regression() {
        let (x, y) = toy_design();
        let z = vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0];
        // Long regression of y on (1, x1, z).
        let long = ols(
            &MatrixOf::from_columns(&[vec![1.0; 6], x.column(1), z.clone()]),
            &y,
        )
        .unwrap();
        // FWL: residualize y and z on (1, x1), regress residual on residual.
        let ry = fwl_residualize(&y, &x).unwrap();
        let rz = fwl_residualize(&z, &x).unwrap();
        let short = ols(&MatrixOf::from_columns(&[rz]), &ry).unwrap();
        assert!((long.coefficients[2] - short.coefficients[0]).abs() < 1e-10);
    }
}
