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

//! `iv`: instrumental-variable analyses.

use std::path::PathBuf;

use causalkit::dataset::{ColumnRole, Dataset};
use causalkit::iv::{
    self, BinaryIvCounts, FarMode, MrVariant, WaldSe,
};
use causalkit::{Error, Matrix, Result};
use clap::{Args, ValueEnum};
use serde_json::{json, Value};

use crate::data::{bool_column, parse_grid, write_curve_csv, DataArgs};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum IvMethod {
    /// Ratio of instrument effects on outcome and on uptake (complier
    /// average); --adjusted uses the covariate-adjusted ratio.
    Wald,
    /// Compliance-stratum decomposition for all-binary data (--counts).
    Binary,
    /// Testable instrument inequalities for all-binary data (--counts).
    Ineq,
    /// Two-stage least squares (--endogenous, --instruments).
    Tsls,
    /// Weak-instrument-robust confidence set by test inversion.
    Far,
    /// Fixed-effect combination of per-instrument summary ratios.
    MrFe,
    /// Weighted regression of outcome on treatment associations.
    MrEgger,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum WaldSeArg {
    Delta,
    Boot,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FarModeArg {
    /// Difference in means of the adjusted outcome.
    Cre,
    /// Covariate-adjusted difference.
    CreCovariates,
    /// Instrument coefficient in a robust OLS.
    LinearIv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MrVariantArg {
    /// Full delta-method weights.
    Full,
    /// Outcome-standard-error weights only.
    OutcomeSe,
}

#[derive(Debug, Args)]
pub struct IvArgs {
    /// Input data (not needed when --counts is given).
    #[command(flatten)]
    data: Option<DataArgs>,
    #[arg(long, value_enum)]
    method: IvMethod,
    /// Binary counts in instrument x treatment x outcome order:
    /// n111,n110,n101,n100,n011,n010,n001,n000.
    #[arg(long, value_name = "8 COUNTS")]
    counts: Option<String>,
    #[arg(long, value_enum, default_value_t = WaldSeArg::Delta)]
    se: WaldSeArg,
    /// Use the covariate-adjusted ratio (bootstrap standard error).
    #[arg(long)]
    adjusted: bool,
    /// Comma-separated endogenous regressor columns.
    #[arg(long, value_delimiter = ',')]
    endogenous: Vec<String>,
    /// Comma-separated instrument columns (two-stage least squares).
    #[arg(long, value_delimiter = ',')]
    instruments: Vec<String>,
    /// Candidate-effect grid `lo,hi,step` for the robust confidence set
    /// (default: ratio estimate plus/minus ten standard errors).
    #[arg(long)]
    grid: Option<String>,
    #[arg(long, value_enum, default_value_t = FarModeArg::Cre)]
    far_mode: FarModeArg,
    /// Write the p-value curve to this CSV file (with a header).
    #[arg(long)]
    curve_out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = MrVariantArg::Full)]
    variant: MrVariantArg,
    /// Include an intercept to absorb directional pleiotropy.
    #[arg(long)]
    intercept: bool,
    /// Bootstrap replications.
    #[arg(long, default_value_t = 200)]
    boot: usize,
    /// Bootstrap seed (required when a bootstrap is requested).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
}

fn need_data(a: &IvArgs) -> Result<Dataset> {
    a.data
        .as_ref()
        .ok_or_else(|| Error::invalid("this method needs --data"))?
        .load()
}

fn need_seed(a: &IvArgs) -> Result<u64> {
    a.seed
        .ok_or_else(|| Error::invalid("this method bootstraps; a --seed is required"))
}

/// `(z, d, y)` for ratio-type methods: instrument, treatment received,
/// outcome.
fn zdy(a: &IvArgs, ds: &Dataset) -> Result<(Vec<bool>, Vec<f64>, Vec<f64>)> {
    let z = bool_column(ds, ColumnRole::Instrument)?;
    let d = ds.column_with_role(ColumnRole::TreatmentReceived)?.to_vec();
    let y = ds.column_with_role(ColumnRole::Outcome)?.to_vec();
    let _ = a;
    Ok((z, d, y))
}

fn parse_counts(s: &str) -> Result<BinaryIvCounts> {
    let parts: Vec<u64> = s
        .split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| Error::invalid(format!("unparseable count '{p}'")))
        })
        .collect::<Result<_>>()?;
    if parts.len() != 8 {
        return Err(Error::invalid("--counts needs exactly eight values"));
    }
    let mut c = [0u64; 8];
    c.copy_from_slice(&parts);
    Ok(BinaryIvCounts::from_array(c))
}

fn counts_of(a: &IvArgs) -> Result<BinaryIvCounts> {
    if let Some(s) = &a.counts {
        return parse_counts(s);
    }
    let ds = need_data(a)?;
    let (z, d, y) = zdy(a, &ds)?;
    let mut c = [0u64; 8];
    for i in 0..z.len() {
        let di = match d[i] {
            v if v == 0.0 => false,
            v if v == 1.0 => true,
            v => return Err(Error::invalid(format!("treatment received must be 0/1, found {v}"))),
        };
        let yi = match y[i] {
            v if v == 0.0 => false,
            v if v == 1.0 => true,
            v => return Err(Error::invalid(format!("outcome must be 0/1, found {v}"))),
        };
        let idx = (usize::from(!z[i]) << 2) | (usize::from(!di) << 1) | usize::from(!yi);
        c[idx] += 1;
    }
    Ok(BinaryIvCounts::from_array(c))
}

fn columns(ds: &Dataset, names: &[String]) -> Result<Matrix> {
    let cols: Vec<Vec<f64>> = names
        .iter()
        .map(|n| ds.column(n).map(<[f64]>::to_vec))
        .collect::<Result<_>>()?;
    Ok(Matrix::from_columns(&cols))
}

pub fn run(a: &IvArgs) -> Result<Value> {
    match a.method {
        IvMethod::Wald => {
            let ds = need_data(a)?;
            let (z, d, y) = zdy(a, &ds)?;
            let report = if a.adjusted {
                let x = a
                    .data
                    .as_ref()
                    .expect("checked by need_data")
                    .covariate_matrix(&ds)?;
                if x.ncols() == 0 {
                    return Err(Error::invalid("--adjusted needs --covariates"));
                }
                iv::wald_adjusted(&z, &d, &y, &x, a.boot, need_seed(a)?, a.alpha)?
            } else {
                let se = match a.se {
                    WaldSeArg::Delta => WaldSe::Delta,
                    WaldSeArg::Boot => WaldSe::Bootstrap {
                        b: a.boot,
                        seed: need_seed(a)?,
                    },
                };
                iv::wald(&z, &d, &y, se, a.alpha)?
            };
            Ok(serde_json::to_value(&report).expect("report serializes"))
        }
        IvMethod::Binary => {
            let summary = iv::binary_iv_decompose(&counts_of(a)?)?;
            Ok(json!({ "method": "binary_iv_decompose", "result": summary }))
        }
        IvMethod::Ineq => {
            let checks = iv::iv_inequalities(&counts_of(a)?)?;
            let any = checks.iter().any(|c| c.violated);
            Ok(json!({ "method": "iv_inequalities", "any_violated": any, "result": checks }))
        }
        IvMethod::Tsls => {
            let ds = need_data(a)?;
            let y = ds.column_with_role(ColumnRole::Outcome)?.to_vec();
            if a.endogenous.is_empty() || a.instruments.is_empty() {
                return Err(Error::invalid(
                    "two-stage least squares needs --endogenous and --instruments",
                ));
            }
            let d = columns(&ds, &a.endogenous)?;
            let z = columns(&ds, &a.instruments)?;
            let x = a
                .data
                .as_ref()
                .expect("checked by need_data")
                .covariate_matrix(&ds)?;
            let reports = iv::tsls(&y, &d, &z, &x, a.alpha)?;
            let items: Vec<Value> = reports
                .iter()
                .map(|r| serde_json::to_value(r).expect("report serializes"))
                .collect();
            Ok(json!({ "method": "tsls", "endogenous": a.endogenous, "result": items }))
        }
        IvMethod::Far => {
            let ds = need_data(a)?;
            let (z, d, y) = zdy(a, &ds)?;
            let x = a
                .data
                .as_ref()
                .expect("checked by need_data")
                .covariate_matrix(&ds)?;
            let xopt = (x.ncols() > 0).then_some(&x);
            let grid = match &a.grid {
                Some(s) => parse_grid(s, "--grid")?,
                None => iv::far_default_grid(&z, &d, &y)?,
            };
            let mode = match a.far_mode {
                FarModeArg::Cre => FarMode::Cre,
                FarModeArg::CreCovariates => FarMode::CreCovariates,
                FarModeArg::LinearIv => FarMode::LinearIv,
            };
            let set = iv::far_confidence_set(&z, &d, &y, xopt, &grid, a.alpha, mode)?;
            if let Some(path) = &a.curve_out {
                let rows: Vec<(f64, f64)> = set
                    .grid
                    .iter()
                    .zip(&set.p_values)
                    .map(|(&g, &p)| (g, p))
                    .collect();
                write_curve_csv(path, ("effect", "p_value"), &rows)?;
            }
            Ok(json!({ "method": "far_confidence_set", "result": set }))
        }
        IvMethod::MrFe | IvMethod::MrEgger => {
            let ds = need_data(a)?;
            let gamma = ds.column("gamma")?.to_vec();
            let big_gamma = ds.column("big_gamma")?.to_vec();
            let se_y = ds.column("se_big_gamma")?.to_vec();
            if let IvMethod::MrFe = a.method {
                let se_d = ds.column("se_gamma")?.to_vec();
                let variant = match a.variant {
                    MrVariantArg::Full => MrVariant::Full,
                    MrVariantArg::OutcomeSe => MrVariant::OutcomeSeOnly,
                };
                let report = iv::mr_fixed_effect(&gamma, &se_d, &big_gamma, &se_y, variant, a.alpha)?;
                Ok(serde_json::to_value(&report).expect("report serializes"))
            } else {
                let weights: Vec<f64> = se_y.iter().map(|s| 1.0 / (s * s)).collect();
                let (slope, intercept) =
                    iv::mr_egger(&gamma, &big_gamma, &weights, a.intercept, a.alpha)?;
                let mut out = json!({ "method": "mr_egger", "slope": slope });
                if let Some(ic) = intercept {
                    out["intercept"] = serde_json::to_value(&ic).expect("report serializes");
                }
                Ok(out)
            }
        }
    }
}
