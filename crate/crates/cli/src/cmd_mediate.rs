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

//! `mediate`: direct/indirect-effect decompositions and principal
//! stratification.

use causalkit::dataset::ColumnRole;
use causalkit::mediation::{
    self, CdeEstimator,
};
use causalkit::propensity::BootConfig;
use causalkit::{Error, Result};
use clap::{Args, ValueEnum};
use serde_json::{json, Value};

use crate::data::{bool_column, DataArgs};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MediateMethod {
    /// Linear mediator/outcome models (product of coefficients).
    Bk,
    /// Nonparametric mediation formula for a binary mediator (bootstrap).
    Formula,
    /// Principal-score weighting under strong monotonicity (bootstrap).
    Pscore,
    /// Controlled direct effect at a fixed mediator level (bootstrap).
    Cde,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CdeEstimatorArg {
    Reg,
    Ht,
    Hajek,
    Dr,
}

#[derive(Debug, Args)]
pub struct MediateArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum)]
    method: MediateMethod,
    /// Add a treatment-by-mediator interaction to the outcome model.
    #[arg(long)]
    interaction: bool,
    /// Mediator level (0/1) at which the controlled direct effect is taken.
    #[arg(long, default_value_t = 1)]
    m_level: u8,
    #[arg(long, value_enum, default_value_t = CdeEstimatorArg::Dr)]
    estimator: CdeEstimatorArg,
    /// Bootstrap replications.
    #[arg(long, default_value_t = 200)]
    boot: usize,
    /// Bootstrap seed (required for bootstrap methods).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
}

fn cfg(a: &MediateArgs) -> Result<BootConfig> {
    let seed = a
        .seed
        .ok_or_else(|| Error::invalid("this method bootstraps; a --seed is required"))?;
    Ok(BootConfig {
        b: a.boot,
        seed,
        alpha: a.alpha,
    })
}

pub fn run(a: &MediateArgs) -> Result<Value> {
    let ds = a.data.load()?;
    let z = bool_column(&ds, ColumnRole::Treatment)?;
    let y = ds.column_with_role(ColumnRole::Outcome)?.to_vec();
    let x = a.data.covariate_matrix(&ds)?;
    match a.method {
        MediateMethod::Bk => {
            let m = ds.column_with_role(ColumnRole::Mediator)?.to_vec();
            let report = mediation::baron_kenny(&z, &m, &y, &x, a.interaction, a.alpha)?;
            Ok(serde_json::to_value(&report).expect("report serializes"))
        }
        MediateMethod::Formula => {
            let m = bool_column(&ds, ColumnRole::Mediator)?;
            let report = mediation::mediation_formula_binary_m(&z, &m, &y, &x, &cfg(a)?)?;
            Ok(serde_json::to_value(&report).expect("report serializes"))
        }
        MediateMethod::Pscore => {
            let m = bool_column(&ds, ColumnRole::Mediator)?;
            let (t10, t00) = mediation::principal_score_weighting(&z, &m, &y, &x, &cfg(a)?)?;
            Ok(json!({ "method": "principal_score_weighting", "tau_1_0": t10, "tau_0_0": t00 }))
        }
        MediateMethod::Cde => {
            let m = bool_column(&ds, ColumnRole::Mediator)?;
            let m_level = match a.m_level {
                0 => false,
                1 => true,
                v => return Err(Error::invalid(format!("--m-level must be 0 or 1, got {v}"))),
            };
            let estimator = match a.estimator {
                CdeEstimatorArg::Reg => CdeEstimator::Reg,
                CdeEstimatorArg::Ht => CdeEstimator::Ht,
                CdeEstimatorArg::Hajek => CdeEstimator::Hajek,
                CdeEstimatorArg::Dr => CdeEstimator::Dr,
            };
            let report = mediation::cde_estimators(&z, &m, &y, &x, m_level, estimator, &cfg(a)?)?;
            Ok(serde_json::to_value(&report).expect("report serializes"))
        }
    }
}
