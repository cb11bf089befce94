//! Two-by-two contingency tables: risk difference/ratio/odds ratio with
//! delta-method intervals, stratified (Simpson-style) decomposition, the
//! hypergeometric exact test, and E-value / Cornfield-style sensitivity
//! quantities.
//!
//! Validated against R: measures match `epitools`-style hand computation and
//! the exact p-values match `fisher.test`'s minimum-likelihood convention.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::special::{hypergeometric_ln_pmf, normal_quantile};

/// Counts for binary treatment (rows 1/0) by binary outcome (columns 1/0).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TwoByTwo {
    /// Treated with outcome 1.
    pub n11: u64,
    /// Treated with outcome 0.
    pub n10: u64,
    /// Control with outcome 1.
    pub n01: u64,
    /// Control with outcome 0.
    pub n00: u64,
}

impl TwoByTwo {
    /// Build a table; errors if every cell is zero.
    pub fn new(n11: u64, n10: u64, n01: u64, n00: u64) -> Result<Self> {
        if n11 + n10 + n01 + n00 == 0 {
            return Err(Error::invalid("empty 2x2 table"));
        }
        Ok(TwoByTwo { n11, n10, n01, n00 })
    }

    /// Total count.
    pub fn n(&self) -> u64 {
        self.n11 + self.n10 + self.n01 + self.n00
    }

    /// Treated-row total.
    pub fn n_treated(&self) -> u64 {
        self.n11 + self.n10
    }

    /// Control-row total.
    pub fn n_control(&self) -> u64 {
        self.n01 + self.n00
    }

    /// Outcome-1 column total.
    pub fn n_outcome(&self) -> u64 {
        self.n11 + self.n01
    }

    /// Element-wise sum (pooling strata).
    pub fn pooled(tables: &[TwoByTwo]) -> Result<TwoByTwo> {
        if tables.is_empty() {
            return Err(Error::invalid("no tables to pool"));
        }
        let mut t = TwoByTwo { n11: 0, n10: 0, n01: 0, n00: 0 };
        for s in tables {
            t.n11 += s.n11;
            t.n10 += s.n10;
            t.n01 += s.n01;
            t.n00 += s.n00;
        }
        Ok(t)
    }
}

/// Association measures for a 2x2 table with delta-method intervals.
///
/// Standard errors are `None` when a zero cell makes them undefined (flagged,
/// never fabricated).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskMeasures {
    /// Risk difference `p1 - p0`.
    pub rd: f64,
    /// Risk ratio `p1 / p0`.
    pub rr: f64,
    /// Sample odds ratio (cross-product ratio).
    pub or_: f64,
    /// SE of the risk difference.
    pub se_rd: Option<f64>,
    /// SE of `log(rr)`.
    pub se_log_rr: Option<f64>,
    /// SE of `log(or)`.
    pub se_log_or: Option<f64>,
    /// Wald interval for the risk difference.
    pub ci_rd: Option<[f64; 2]>,
    /// Interval for the risk ratio (log scale, exponentiated).
    pub ci_rr: Option<[f64; 2]>,
    /// Interval for the odds ratio (log scale, exponentiated).
    pub ci_or: Option<[f64; 2]>,
}

/// Risk difference, risk ratio, and odds ratio with delta-method `1 - alpha`
/// intervals (log scale for the ratios).
pub fn risk_measures(t: &TwoByTwo, alpha: f64) -> Result<RiskMeasures> {
    if t.n_treated() == 0 || t.n_control() == 0 {
        return Err(Error::degenerate("a treatment arm is empty"));
    }
    let n1 = t.n_treated() as f64;
    let n0 = t.n_control() as f64;
    let p1 = t.n11 as f64 / n1;
    let p0 = t.n01 as f64 / n0;
    let rd = p1 - p0;
    let rr = p1 / p0;
    let or_ = (t.n11 as f64 * t.n00 as f64) / (t.n10 as f64 * t.n01 as f64);
    let z = normal_quantile(1.0 - alpha / 2.0);

    let all_cells_positive = t.n11 > 0 && t.n10 > 0 && t.n01 > 0 && t.n00 > 0;
    let (se_rd, ci_rd) = {
        let se = (p1 * (1.0 - p1) / n1 + p0 * (1.0 - p0) / n0).sqrt();
        (Some(se), Some([rd - z * se, rd + z * se]))
    };
    let (se_log_rr, ci_rr) = if t.n11 > 0 && t.n01 > 0 {
        let se = ((1.0 - p1) / (n1 * p1) + (1.0 - p0) / (n0 * p0)).sqrt();
        let l = rr.ln();
        (Some(se), Some([(l - z * se).exp(), (l + z * se).exp()]))
    } else {
        (None, None)
    };
    let (se_log_or, ci_or) = if all_cells_positive {
        let se = (1.0 / t.n11 as f64
            + 1.0 / t.n10 as f64
            + 1.0 / t.n01 as f64
            + 1.0 / t.n00 as f64)
            .sqrt();
        let l = or_.ln();
        (Some(se), Some([(l - z * se).exp(), (l + z * se).exp()]))
    } else {
        (None, None)
    };

    Ok(RiskMeasures {
        rd,
        rr,
        or_,
        se_rd,
        se_log_rr,
        se_log_or,
        ci_rd,
        ci_rr,
        ci_or,
    })
}

/// Stratified decomposition: per-stratum and pooled measures, with a flag for
/// the aggregation paradox (every stratum's risk difference on one side of
/// zero while the pooled risk difference lies on the other).
#[derive(Debug, Clone, Serialize)]
pub struct SimpsonDecomposition {
    /// Per-stratum measures in input order.
    pub strata: Vec<RiskMeasures>,
    /// Measures on the element-wise pooled table.
    pub pooled: RiskMeasures,
    /// True when the pooled sign contradicts a unanimous stratum sign.
    pub sign_flip: bool,
}

/// Decompose a stratified collection of 2x2 tables.
pub fn simpson_decompose(tables: &[TwoByTwo], alpha: f64) -> Result<SimpsonDecomposition> {
    if tables.len() < 2 {
        return Err(Error::invalid("stratified decomposition needs >= 2 strata"));
    }
    let strata: Vec<RiskMeasures> = tables
        .iter()
        .map(|t| risk_measures(t, alpha))
        .collect::<Result<_>>()?;
    let pooled = risk_measures(&TwoByTwo::pooled(tables)?, alpha)?;
    let sign_flip = (strata.iter().all(|m| m.rd >= 0.0) && pooled.rd < 0.0)
        || (strata.iter().all(|m| m.rd <= 0.0) && pooled.rd > 0.0);
    Ok(SimpsonDecomposition {
        strata,
        pooled,
        sign_flip,
    })
}

/// Sidedness of the exact test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sided {
    /// Upper tail at the observed `n11` (positive association).
    One,
    /// Minimum-likelihood: sum of pmf values not exceeding the observed pmf
    /// (with `1e-7` relative slack).
    Two,
}

/// Exact hypergeometric test conditioning on both margins.
pub fn hypergeom_exact(t: &TwoByTwo, sided: Sided) -> Result<f64> {
    let n = t.n();
    let n1 = t.n_treated();
    let m1 = t.n_outcome();
    if n == 0 {
        return Err(Error::invalid("empty table"));
    }
    let lo = n1.saturating_sub(n - m1);
    let hi = n1.min(m1);
    let obs_ln = hypergeometric_ln_pmf(n, m1, n1, t.n11);
    let p = match sided {
        Sided::One => (t.n11..=hi)
            .map(|k| hypergeometric_ln_pmf(n, m1, n1, k).exp())
            .sum(),
        Sided::Two => {
            let cutoff = obs_ln + 1e-7_f64.ln_1p();
            (lo..=hi)
                .filter(|&k| hypergeometric_ln_pmf(n, m1, n1, k) <= cutoff)
                .map(|k| hypergeometric_ln_pmf(n, m1, n1, k).exp())
                .sum()
        }
    };
    Ok(f64::min(p, 1.0))
}

/// E-value of an observed risk ratio: the minimum strength of association a
/// confounder must have with both treatment and outcome to explain it away.
///
/// Protective ratios (`rr < 1`) are inverted first.
pub fn evalue(rr_obs: f64) -> Result<f64> {
    if !(rr_obs > 0.0) {
        return Err(Error::invalid(format!("risk ratio must be positive, got {rr_obs}")));
    }
    let rr = if rr_obs < 1.0 { 1.0 / rr_obs } else { rr_obs };
    Ok(rr + (rr * (rr - 1.0)).sqrt())
}

/// Cornfield-style bounding factor `beta(w1, w2) = w1 w2 / (w1 + w2 - 1)`:
/// the largest ratio by which confounding of strengths `(w1, w2)` can distort
/// an observed risk ratio.
pub fn cornfield_bounding_factor(rr_zu: f64, rr_uy: f64) -> Result<f64> {
    if rr_zu <= 1.0 || rr_uy <= 1.0 {
        return Err(Error::invalid("bounding factor needs both ratios > 1"));
    }
    Ok(rr_zu * rr_uy / (rr_zu + rr_uy - 1.0))
}

/// E-values for a point estimate and the confidence limit closer to the null.
///
/// When the interval crosses the null in the estimate's direction, the
/// confidence-limit E-value is 1 (no confounding needed).
pub fn evalue_report(point_rr: f64, ci_bound_rr: f64) -> Result<(f64, f64)> {
    let e_point = evalue(point_rr)?;
    let crosses = (point_rr >= 1.0 && ci_bound_rr <= 1.0)
        || (point_rr < 1.0 && ci_bound_rr >= 1.0);
    let e_ci = if crosses { 1.0 } else { evalue(ci_bound_rr)? };
    Ok((e_point, e_ci))
}
