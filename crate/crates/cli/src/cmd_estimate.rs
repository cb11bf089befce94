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

//! `estimate`: estimators for randomized experiments.

use causalkit::dataset::ColumnRole;
use causalkit::design::{self, Population};
use causalkit::randomization::pair_differences;
use causalkit::{Error, Result};
use clap::{Args, ValueEnum};
use serde_json::Value;

use crate::data::{bool_column, index_column, DataArgs};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EstimateMethod {
    /// Difference in means with the conservative variance.
    Neyman,
    /// Stratified (post-stratified) estimator (needs --strata).
    Stratified,
    /// Covariate-interacted regression estimator (needs --covariates).
    Lin,
    /// Difference-in-means of outcome minus lagged outcome (needs --lagged).
    Gain,
    /// Matched-pairs estimator (needs --pair-id; covariates adjust the pair
    /// differences).
    Mpe,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum)]
    method: EstimateMethod,
    /// Inference population for the covariate-adjusted estimator.
    #[arg(long, value_enum, default_value_t = PopulationArg::Finite)]
    population: PopulationArg,
    /// Drop strata whose arms cannot support a variance instead of erroring.
    #[arg(long)]
    drop_small: bool,
    /// Lagged-outcome column for the gain-score estimator.
    #[arg(long)]
    lagged: Option<String>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PopulationArg {
    Finite,
    Super,
}

pub fn run(a: &EstimateArgs) -> Result<Value> {
    let ds = a.data.load()?;
    let z = bool_column(&ds, ColumnRole::Treatment)?;
    let y = ds.column_with_role(ColumnRole::Outcome)?.to_vec();
    let report = match a.method {
        EstimateMethod::Neyman => design::neyman_cre(&z, &y, a.alpha)?,
        EstimateMethod::Stratified => {
            let strata = index_column(&ds, ColumnRole::Stratum)?;
            design::stratified(&z, &y, &strata, a.alpha, a.drop_small)?
        }
        EstimateMethod::Lin => {
            let x = a.data.covariate_matrix(&ds)?;
            if x.ncols() == 0 {
                return Err(Error::invalid("the adjusted estimator needs --covariates"));
            }
            let pop = match a.population {
                PopulationArg::Finite => Population::Finite,
                PopulationArg::Super => Population::Super,
            };
            design::lin_adjust(&z, &y, &x, pop, a.alpha)?
        }
        EstimateMethod::Gain => {
            let lag = a
                .lagged
                .as_ref()
                .ok_or_else(|| Error::invalid("the gain-score estimator needs --lagged"))?;
            design::gain_score(&z, &y, ds.column(lag)?, a.alpha)?
        }
        EstimateMethod::Mpe => {
            let pairs = index_column(&ds, ColumnRole::PairId)?;
            let diffs = pair_differences(&z, &y, &pairs)?;
            if a.data.covariates.is_empty() {
                design::mpe(&diffs, a.alpha)?
            } else {
                let x = a.data.covariate_matrix(&ds)?;
                let mut xdiffs = vec![vec![0.0; x.ncols()]; diffs.len()];
                for j in 0..x.ncols() {
                    let col_diffs = pair_differences(&z, &x.column(j), &pairs)?;
                    for (i, &d) in col_diffs.iter().enumerate() {
                        xdiffs[i][j] = d;
                    }
                }
                design::mpe_adjusted(&diffs, &xdiffs, a.alpha)?
            }
        }
    };
    Ok(serde_json::to_value(&report).expect("report serializes"))
}
