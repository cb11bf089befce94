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

//! Closed-form demonstrations of covariate-adjustment bias.
//!
//! Two classic cautionary tales about adjusting for the wrong covariate,
//! each implemented as a Monte Carlo experiment compared against the exact
//! population regression coefficients:
//!
//! * **M-bias** — collider structure `Z <- U1 -> X <- U2 -> Y`. The true
//!   effect of `Z` on `Y` is zero and the unadjusted coefficient is unbiased,
//!   but conditioning on the collider `X` opens a backdoor path and biases
//!   the adjusted coefficient by `-abcd / (a^2 + b^2 + c^2 + b^2 c^2 + 1)`.
//! * **Z-bias** (instrument bias) — `X -> Z <- U -> Y` with `Z -> Y`.
//!   Adjusting for the instrument-like covariate `X` amplifies the
//!   unmeasured-confounding bias from `bc/(a^2 + b^2 + 1)` to `bc/(b^2 + 1)`.

use rand::distributions::Distribution;
use serde::Serialize;
use statrs::distribution::Normal;

use crate::error::{Error, Result};
use crate::regress::{self, CovKind};
use crate::report::EstimateReport;
use crate::rng::rng_from_seed;

/// Minimum simulation size; below this the Monte Carlo noise swamps the
/// biases being demonstrated.
pub const MIN_DEMO_N: usize = 10_000;

/// Side-by-side comparison of the unadjusted and covariate-adjusted
/// regression coefficients of the treatment, each carrying its analytic
/// population target as a diagnostic.
#[derive(Debug, Clone, Serialize)]
pub struct BiasDemo {
    /// OLS coefficient of the treatment from `y ~ (1, z)`.
    pub unadjusted: EstimateReport,
    /// OLS coefficient of the treatment from `y ~ (1, z, x)`.
    pub adjusted: EstimateReport,
}

/// Analytic population coefficients `(unadjusted, adjusted)` for the M-bias
/// structural model `X = aU1 + bU2 + e`, `Z = cU1 + e`, `Y = dU2 + e`.
pub fn m_bias_targets(a: f64, b: f64, c: f64, d: f64) -> (f64, f64) {
    let denom = a * a + b * b + c * c + b * b * c * c + 1.0;
    (0.0, -a * b * c * d / denom)
}

/// Analytic population coefficients `(unadjusted, adjusted)` for the Z-bias
/// structural model `Z = aX + bU + e`, `Y = tau Z + cU + e`.
pub fn z_bias_targets(a: f64, b: f64, c: f64, tau: f64) -> (f64, f64) {
    (
        tau + b * c / (a * a + b * b + 1.0),
        tau + b * c / (b * b + 1.0),
    )
}

fn check_n(n: usize) -> Result<()> {
    if n < MIN_DEMO_N {
        return Err(Error::invalid(format!(
            "bias demonstrations need n >= {MIN_DEMO_N} (got {n})"
        )));
    }
    Ok(())
}

/// Run both regressions and package them with their analytic targets.
fn demo_reports(
    kind: &str,
    z: Vec<f64>,
    x: Vec<f64>,
    y: &[f64],
    targets: (f64, f64),
    alpha: f64,
) -> Result<BiasDemo> {
    let n = y.len();
    let short = regress::ols(&regress::design_with_intercept(&[z.clone()]), y)?;
    let long = regress::ols(&regress::design_with_intercept(&[z, x]), y)?;
    let report = |label: &str, fit: &regress::LinearFit<f64>, target: f64| {
        let se = fit.std_errors(CovKind::Hc0)[1];
        EstimateReport::wald(format!("{kind}_{label}"), "projection_coefficient",
            fit.coefficients[1], se, alpha, n)
            .with_diag("target", target)
    };
    Ok(BiasDemo {
        unadjusted: report("unadjusted", &short, targets.0),
        adjusted: report("adjusted", &long, targets.1),
    })
}

/// Simulate the M-bias (collider) structure and contrast unadjusted vs
/// collider-adjusted coefficients with their closed-form targets.
pub fn m_bias_demo(a: f64, b: f64, c: f64, d: f64, n: usize, seed: u64, alpha: f64) -> Result<BiasDemo> {
    check_n(n)?;
    let mut rng = rng_from_seed(seed);
    let norm = Normal::new(0.0, 1.0).expect("standard normal");
    let mut draw = move || norm.sample(&mut rng);
    let mut z = Vec::with_capacity(n);
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let u1 = draw();
        let u2 = draw();
        x.push(a * u1 + b * u2 + draw());
        z.push(c * u1 + draw());
        y.push(d * u2 + draw());
    }
    demo_reports("m_bias", z, x, &y, m_bias_targets(a, b, c, d), alpha)
}

/// Simulate the Z-bias (instrument) structure and contrast unadjusted vs
/// instrument-adjusted coefficients with their closed-form targets.
pub fn z_bias_demo(a: f64, b: f64, c: f64, tau: f64, n: usize, seed: u64, alpha: f64) -> Result<BiasDemo> {
    check_n(n)?;
    let mut rng = rng_from_seed(seed);
    let norm = Normal::new(0.0, 1.0).expect("standard normal");
    let mut draw = move || norm.sample(&mut rng);
    let mut z = Vec::with_capacity(n);
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let xi = draw();
        let u = draw();
        let zi = a * xi + b * u + draw();
        x.push(xi);
        z.push(zi);
        y.push(tau * zi + c * u + draw());
    }
    demo_reports("z_bias", z, x, &y, z_bias_targets(a, b, c, tau), alpha)
}
