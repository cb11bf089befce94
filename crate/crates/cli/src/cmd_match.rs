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

//! `match`: nearest-neighbor matching estimator (deterministic; ties broken
//! by unit order).

use causalkit::dataset::ColumnRole;
use causalkit::matching::{matching_estimate, MatchTarget, Metric};
use causalkit::{Error, Result};
use clap::{Args, ValueEnum};
use serde_json::Value;

use crate::data::{bool_column, DataArgs};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MetricArg {
    Euclidean,
    Mahalanobis,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MatchTargetArg {
    Ate,
    Att,
}

#[derive(Debug, Args)]
pub struct MatchArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Matches per unit.
    #[arg(long, default_value_t = 1)]
    m: usize,
    #[arg(long, value_enum, default_value_t = MetricArg::Mahalanobis)]
    metric: MetricArg,
    #[arg(long, value_enum, default_value_t = MatchTargetArg::Ate)]
    target: MatchTargetArg,
    /// Apply the regression bias correction.
    #[arg(long)]
    bias_correct: bool,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
}

pub fn run(a: &MatchArgs) -> Result<Value> {
    let ds = a.data.load()?;
    let z = bool_column(&ds, ColumnRole::Treatment)?;
    let y = ds.column_with_role(ColumnRole::Outcome)?.to_vec();
    let x = a.data.covariate_matrix(&ds)?;
    if x.ncols() == 0 {
        return Err(Error::invalid("matching needs --covariates"));
    }
    let metric = match a.metric {
        MetricArg::Euclidean => Metric::Euclidean,
        MetricArg::Mahalanobis => Metric::Mahalanobis,
    };
    let target = match a.target {
        MatchTargetArg::Ate => MatchTarget::Ate,
        MatchTargetArg::Att => MatchTarget::Att,
    };
    let report = matching_estimate(&x, &z, &y, a.m, metric, target, a.bias_correct, a.alpha)?;
    Ok(serde_json::to_value(&report).expect("report serializes"))
}
