//! Nearest-neighbor matching with replacement, bias correction through
//! per-arm outcome regressions, and the linear-expansion variance estimator
//! for both the average effect and the effect on the treated.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::MatrixOf;
use crate::propensity::{outcome_means, OutcomeFamily};
use crate::report::EstimateReport;
use crate::stats::sample_cov;

/// Covariate distance used for matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// Squared Euclidean distance.
    Euclidean,
    /// Squared Mahalanobis distance with the whole-sample covariance scale.
    Mahalanobis,
}

/// Which estimand the match sets serve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchTarget {
    /// Every unit matched into the opposite arm.
    Ate,
    /// Treated units matched to controls only.
    Att,
}

/// Match sets and usage counts from nearest-neighbor matching.
#[derive(Debug, Clone)]
pub struct MatchResult {
    /// Per-unit matched indices in the opposite arm (empty for control units
    /// under the treated-only target).
    pub sets: Vec<Vec<usize>>,
    /// `K_i`: the number of times unit `i` is used as a match.
    pub counts: Vec<usize>,
    /// Matches per unit.
    pub m: usize,
    /// Distance metric used.
    pub metric: Metric,
    /// Estimand the match sets serve.
    pub target: MatchTarget,
}

/// Inverse of the whole-sample covariance matrix of the columns of `x`.
fn covariance_inverse(x: &MatrixOf<f64>) -> Result<MatrixOf<f64>> {
    let p = x.ncols();
    let mut omega: MatrixOf<f64> = MatrixOf::zeros(p, p);
    let cols: Vec<Vec<f64>> = (0..p).map(|j| x.column(j)).collect();
    for j in 0..p {
        for k in j..p {
            let c = sample_cov(&cols[j], &cols[k])?;
            omega[(j, k)] = c;
            omega[(k, j)] = c;
        }
    }
    // Invert column by column; a singular covariance surfaces as a
    // rank-deficiency error from the solver.
    let mut inv_cols = Vec::with_capacity(p);
    for j in 0..p {
        let mut e = vec![0.0; p];
        e[j] = 1.0;
        inv_cols.push(crate::linalg::solve(&omega, &e).map_err(|_| {
            Error::degenerate("covariate covariance matrix is singular; Mahalanobis matching needs linearly independent covariates")
        })?);
    }
    Ok(MatrixOf::from_columns(&inv_cols))
}

fn pair_distance(x: &MatrixOf<f64>, i: usize, k: usize, scale: Option<&MatrixOf<f64>>) -> f64 {
    let xi = x.row(i);
    let xk = x.row(k);
    let v: Vec<f64> = xi.iter().zip(xk).map(|(&a, &b)| a - b).collect();
    match scale {
        None => v.iter().map(|d| d * d).sum(),
        Some(w) => {
            let wv = w.matvec(&v);
            v.iter().zip(&wv).map(|(&a, &b)| a * b).sum()
        }
    }
}

/// Nearest-neighbor matching with replacement: the `m` smallest distances per
/// unit, ties broken by lowest index.
pub fn match_nn(
    x: &MatrixOf<f64>,
    z: &[bool],
    m: usize,
    metric: Metric,
    target: MatchTarget,
) -> Result<MatchResult> {
    let n = z.len();
    if x.nrows() != n {
        return Err(Error::invalid("covariate/treatment length mismatch"));
    }
    if m == 0 {
        return Err(Error::invalid("matches per unit must be at least 1"));
    }
    let treated: Vec<usize> = (0..n).filter(|&i| z[i]).collect();
    let controls: Vec<usize> = (0..n).filter(|&i| !z[i]).collect();
    if controls.len() < m {
        return Err(Error::invalid(format!(
            "control arm has {} units, fewer than M = {m}",
            controls.len()
        )));
    }
    if target == MatchTarget::Ate && treated.len() < m {
        return Err(Error::invalid(format!(
            "treated arm has {} units, fewer than M = {m}",
            treated.len()
        )));
    }
    let scale = match metric {
        Metric::Euclidean => None,
        Metric::Mahalanobis => Some(covariance_inverse(x)?),
    };

    let nearest = |i: usize, pool: &[usize]| -> Vec<usize> {
        let mut dists: Vec<(f64, usize)> = pool
            .iter()
            .map(|&k| (pair_distance(x, i, k, scale.as_ref()), k))
            .collect();
        dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
        dists.iter().take(m).map(|&(_, k)| k).collect()
    };

    let sets: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| match target {
            MatchTarget::Ate => {
                if z[i] {
                    nearest(i, &controls)
                } else {
                    nearest(i, &treated)
                }
            }
            MatchTarget::Att => {
                if z[i] {
                    nearest(i, &controls)
                } else {
                    Vec::new()
                }
            }
        })
        .collect();

    let mut counts = vec![0usize; n];
    for set in &sets {
        for &k in set {
            counts[k] += 1;
        }
    }
    Ok(MatchResult {
        sets,
        counts,
        m,
        metric,
        target,
    })
}

/// Per-unit linear-expansion terms.
///
/// For the average effect, `psi_i = mu1(X_i) - mu0(X_i)
/// + (2Z_i - 1)(1 + K_i/M){Y_i - mu_{Z_i}(X_i)}`; without bias correction the
/// outcome means are identically zero. For the effect on the treated,
/// `psi_i = Z_i{Y_i - mu0(X_i)} - (1 - Z_i)(K_i/M){Y_i - mu0(X_i)}`.
pub fn expansion_terms(
    mr: &MatchResult,
    z: &[bool],
    y: &[f64],
    mu1: &[f64],
    mu0: &[f64],
) -> Vec<f64> {
    let m = mr.m as f64;
    (0..y.len())
        .map(|i| {
            let k = mr.counts[i] as f64;
            match mr.target {
                MatchTarget::Ate => {
                    let sign = if z[i] { 1.0 } else { -1.0 };
                    let mu_own = if z[i] { mu1[i] } else { mu0[i] };
                    mu1[i] - mu0[i] + sign * (1.0 + k / m) * (y[i] - mu_own)
                }
                MatchTarget::Att => {
                    let r0 = y[i] - mu0[i];
                    if z[i] {
                        r0
                    } else {
                        -(k / m) * r0
                    }
                }
            }
        })
        .collect()
}

/// Matching point estimate, bias correction, and linear-expansion variance.
pub fn matching_estimate(
    x: &MatrixOf<f64>,
    z: &[bool],
    y: &[f64],
    m: usize,
    metric: Metric,
    target: MatchTarget,
    bias_correct: bool,
    alpha: f64,
) -> Result<EstimateReport> {
    let n = y.len();
    let mr = match_nn(x, z, m, metric, target)?;
    let (mu1, mu0) = if bias_correct {
        outcome_means(x, z, y, OutcomeFamily::Linear)?
    } else {
        (vec![0.0; n], vec![0.0; n])
    };
    let psi = expansion_terms(&mr, z, y, &mu1, &mu0);
    let n1 = z.iter().filter(|&&b| b).count();
    let (estimate, variance, estimand, denom) = match target {
        MatchTarget::Ate => {
            let tau = psi.iter().sum::<f64>() / n as f64;
            let v = psi.iter().map(|p| (p - tau).powi(2)).sum::<f64>() / (n as f64).powi(2);
            (tau, v, "ate", n)
        }
        MatchTarget::Att => {
            if n1 == 0 {
                return Err(Error::degenerate("no treated units"));
            }
            let tau = psi.iter().sum::<f64>() / n1 as f64;
            let center = tau * n1 as f64 / n as f64;
            let v = psi.iter().map(|p| (p - center).powi(2)).sum::<f64>() / (n1 as f64).powi(2);
            (tau, v, "att", n)
        }
    };
    let se = variance.sqrt();
    let mean_k = mr.counts.iter().sum::<usize>() as f64
        / match target {
            MatchTarget::Ate => n as f64,
            MatchTarget::Att => (n - n1) as f64,
        };
    Ok(
        EstimateReport::wald(
            if bias_correct { "matching_bc" } else { "matching" },
            estimand,
            estimate,
            se,
            alpha,
            denom,
        )
        .with_diag("m", m)
        .with_diag("mean_match_usage", mean_k)
        .with_diag(
            "metric",
            match metric {
                Metric::Euclidean => "euclidean",
                Metric::Mahalanobis => "mahalanobis",
            },
        ),
    )
}
