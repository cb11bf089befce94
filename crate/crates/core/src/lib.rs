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

//! Design-based causal inference: contingency-table analysis, randomization
//! tests, design-based estimators, propensity-score methods, matching,
//! instrumental variables, regression discontinuity, mediation, bounds, and
//! sensitivity analysis.
//!
//! The numerics core (linear algebra, regression, resampling) is generic over
//! the floating-point scalar via [`scalar::Real`]; the `f64` instantiations
//! re-exported at the crate root are what the estimator layer and the CLI use.

pub mod bias;
pub mod bootstrap;
pub mod contingency;
pub mod dataset;
pub mod design;
pub mod error;
pub mod iv;
pub mod randomization;
pub mod rdd;
pub mod linalg;
pub mod matching;
pub mod mediation;
pub mod propensity;
pub mod report;
pub mod regress;
pub mod rng;
pub mod scalar;
pub mod sensitivity;
pub mod special;
pub mod stats;
pub mod tables;

pub use error::{Error, Result};
pub use scalar::Real;

/// Dense `f64` matrix (the common instantiation of [`linalg::MatrixOf`]).
pub type Matrix = linalg::MatrixOf<f64>;
/// `f64` least-squares fit.
pub type Fit = regress::LinearFit<f64>;
/// `f64` logistic fit.
pub type Logit = regress::LogisticFit<f64>;
