//! Machine-readable result types shared by every analysis and the CLI.
//!
//! JSON serialization is deterministic: diagnostics live in a sorted map and
//! numbers use the shortest round-trip decimal form, so identical inputs and
//! seeds produce byte-identical output.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::special::normal_quantile;

/// A point estimate with normal-approximation uncertainty.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EstimateReport {
    /// Estimator used (e.g. `"neyman"`, `"hajek"`, `"tsls"`).
    pub method: String,
    /// What is being estimated (e.g. `"ate"`, `"att"`, `"cace"`).
    pub estimand: String,
    /// Point estimate.
    pub estimate: f64,
    /// Standard error.
    pub se: f64,
    /// Wald confidence interval `[lo, hi]` built with normal quantiles.
    pub ci: [f64; 2],
    /// Optional p-value (present for tests, absent for pure estimation).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
    /// Number of observations used.
    pub n: usize,
    /// Method-specific extras, sorted by key for deterministic output.
    pub diagnostics: BTreeMap<String, serde_json::Value>,
}

impl EstimateReport {
    /// Build a report with a two-sided level-`1 - alpha` Wald interval.
    pub fn wald(
        method: impl Into<String>,
        estimand: impl Into<String>,
        estimate: f64,
        se: f64,
        alpha: f64,
        n: usize,
    ) -> Self {
        let z = normal_quantile(1.0 - alpha / 2.0);
        EstimateReport {
            method: method.into(),
            estimand: estimand.into(),
            estimate,
            se,
            ci: [estimate - z * se, estimate + z * se],
            p_value: None,
            n,
            diagnostics: BTreeMap::new(),
        }
    }

    /// Attach a diagnostic value (builder style).
    pub fn with_diag(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.diagnostics.insert(key.to_string(), value.into());
        self
    }

    /// Attach a two-sided normal-approximation p-value for `estimate/se`.
    pub fn with_normal_p(mut self) -> Self {
        if self.se > 0.0 {
            let z = (self.estimate / self.se).abs();
            self.p_value = Some(2.0 * (1.0 - crate::special::normal_cdf(z)));
        }
        self
    }
}

/// How a randomization p-value was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PValueMode {
    /// Full enumeration of the assignment distribution.
    Exact,
    /// Monte Carlo over `replications` draws.
    MonteCarlo,
}

/// Result of a randomization (permutation) test.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RandInferenceResult {
    /// Test statistic evaluated on the observed assignment.
    pub observed: f64,
    /// Number of assignments evaluated (support size when exact).
    pub replications: u64,
    /// Exact enumeration or Monte Carlo.
    pub mode: PValueMode,
    /// Plain p-value: share of replicates at least as extreme (exact), or
    /// `count/R` (Monte Carlo).
    pub p_value: f64,
    /// Finite-sample valid Monte Carlo p-value `(1 + count)/(1 + R)`;
    /// equals `p_value` in exact mode.
    pub p_value_valid: f64,
    /// Monte Carlo standard error of `p_value` (0 in exact mode).
    pub mc_se: f64,
}
