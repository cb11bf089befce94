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

//! `sens`: partial-identification bounds and sensitivity analysis.

use std::path::PathBuf;

use causalkit::dataset::ColumnRole;
use causalkit::propensity::{fit_pscore, outcome_means, BootConfig, OutcomeFamily};
use causalkit::randomization::pair_differences;
use causalkit::sensitivity::{
    self, EpsEstimator, RosenbaumStat, SurvivorTable,
};
use causalkit::{Error, Result};
use clap::{Args, ValueEnum};
use serde_json::{json, Value};

use crate::data::{bool_column, index_column, parse_grid, write_curve_csv, DataArgs};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SensMethod {
    /// Worst-case bounds for a bounded outcome (--ymin, --ymax).
    Manski,
    /// Survivor-average bounds for an outcome truncated by death
    /// (--counts or --mediator as the survival indicator).
    Survivor,
    /// Worst-case p-value under bounded hidden bias in matched pairs
    /// (--gamma-grid).
    Gamma,
    /// Ratio-parameterized sensitivity for score-based estimators
    /// (--eps1/--eps0 or a grid).
    Epsilon,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GammaStatArg {
    /// Absolute pair differences as scores.
    PairTAbs,
    /// Signed-rank scores.
    SignedRank,
    /// Sign test.
    Sign,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EpsEstimatorArg {
    Pred,
    Ht,
    Hajek,
    Dr,
}

#[derive(Debug, Args)]
pub struct SensArgs {
    /// Input data (not needed when --counts is given).
    #[command(flatten)]
    data: Option<DataArgs>,
    #[arg(long, value_enum)]
    method: SensMethod,
    /// Known outcome range, lower end.
    #[arg(long)]
    ymin: Option<f64>,
    /// Known outcome range, upper end.
    #[arg(long)]
    ymax: Option<f64>,
    /// Survivor table counts: treated-survived-1, treated-survived-0,
    /// treated-died, control-survived-1, control-survived-0, control-died.
    #[arg(long, value_name = "C1,C2,C3,C4,C5,C6")]
    counts: Option<String>,
    /// Hidden-bias odds grid `lo,hi,step`.
    #[arg(long)]
    gamma_grid: Option<String>,
    #[arg(long, value_enum, default_value_t = GammaStatArg::PairTAbs)]
    stat: GammaStatArg,
    /// Treated-arm outcome ratio.
    #[arg(long, default_value_t = 1.0)]
    eps1: f64,
    /// Control-arm outcome ratio.
    #[arg(long, default_value_t = 1.0)]
    eps0: f64,
    /// Grid `lo,hi,step` over eps1 (eps0 held at --eps0).
    #[arg(long, conflicts_with = "eps0_grid")]
    eps1_grid: Option<String>,
    /// Grid `lo,hi,step` over eps0 (eps1 held at --eps1).
    #[arg(long)]
    eps0_grid: Option<String>,
    #[arg(long, value_enum, default_value_t = EpsEstimatorArg::Dr)]
    estimator: EpsEstimatorArg,
    /// Bootstrap replications (single-point epsilon and survivor methods).
    #[arg(long)]
    boot: Option<usize>,
    /// Bootstrap seed (required when --boot is given).
    #[arg(long)]
    seed: Option<u64>,
    /// Write the sensitivity curve to this CSV file (with a header).
    #[arg(long)]
    curve_out: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
}

fn need_data(a: &SensArgs) -> Result<&DataArgs> {
    a.data
        .as_ref()
        .ok_or_else(|| Error::invalid("this method needs --data"))
}

fn boot_pair(a: &SensArgs) -> Result<Option<(usize, u64)>> {
    match (a.boot, a.seed) {
        (None, _) => Ok(None),
        (Some(b), Some(seed)) => Ok(Some((b, seed))),
        (Some(_), None) => Err(Error::invalid("--boot needs a --seed")),
    }
}

pub fn run(a: &SensArgs) -> Result<Value> {
    match a.method {
        SensMethod::Manski => {
            let da = need_data(a)?;
            let ds = da.load()?;
            let z = bool_column(&ds, ColumnRole::Treatment)?;
            let y = ds.column_with_role(ColumnRole::Outcome)?.to_vec();
            let ymin = a.ymin.ok_or_else(|| Error::invalid("--ymin is required"))?;
            let ymax = a.ymax.ok_or_else(|| Error::invalid("--ymax is required"))?;
            let b = sensitivity::manski_bounds(&z, &y, ymin, ymax)?;
            Ok(json!({ "method": "manski_bounds", "result": b }))
        }
        SensMethod::Survivor => {
            let table = match &a.counts {
                Some(s) => {
                    let parts: Vec<u64> = s
                        .split(',')
                        .map(|p| {
                            p.trim()
                                .parse()
                                .map_err(|_| Error::invalid(format!("unparseable count '{p}'")))
                        })
                        .collect::<Result<_>>()?;
                    if parts.len() != 6 {
                        return Err(Error::invalid("--counts needs exactly six values"));
                    }
                    SurvivorTable {
                        z1_m1_y1: parts[0],
                        z1_m1_y0: parts[1],
                        z1_m0: parts[2],
                        z0_m1_y1: parts[3],
                        z0_m1_y0: parts[4],
                        z0_m0: parts[5],
                    }
                }
                None => {
                    let da = need_data(a)?;
                    let ds = da.load()?;
                    let z = bool_column(&ds, ColumnRole::Treatment)?;
                    let m = bool_column(&ds, ColumnRole::Mediator)?;
                    let y = ds.column_with_role(ColumnRole::Outcome)?;
                    let mut t = SurvivorTable {
                        z1_m1_y1: 0,
                        z1_m1_y0: 0,
                        z1_m0: 0,
                        z0_m1_y1: 0,
                        z0_m1_y0: 0,
                        z0_m0: 0,
                    };
                    for i in 0..y.len() {
                        let slot = match (z[i], m[i], y[i]) {
                            (true, false, _) => &mut t.z1_m0,
                            (false, false, _) => &mut t.z0_m0,
                            (true, true, v) if v == 1.0 => &mut t.z1_m1_y1,
                            (true, true, v) if v == 0.0 => &mut t.z1_m1_y0,
                            (false, true, v) if v == 1.0 => &mut t.z0_m1_y1,
                            (false, true, v) if v == 0.0 => &mut t.z0_m1_y0,
                            (_, true, v) => {
                                return Err(Error::invalid(format!(
                                    "survivor outcomes must be 0/1, found {v}"
                                )))
                            }
                        };
                        *slot += 1;
                    }
                    t
                }
            };
            let (bounds, decomp) = sensitivity::survivor_bounds(&table, a.alpha, boot_pair(a)?)?;
            Ok(json!({
                "method": "survivor_bounds",
                "n": table.n(),
                "bounds": bounds,
                "decomposition": decomp,
            }))
        }
        SensMethod::Gamma => {
            let da = need_data(a)?;
            let ds = da.load()?;
            let z = bool_column(&ds, ColumnRole::Treatment)?;
            let y = ds.column_with_role(ColumnRole::Outcome)?;
            let pairs = index_column(&ds, ColumnRole::PairId)?;
            let diffs = pair_differences(&z, y, &pairs)?;
            let grid_str = a
                .gamma_grid
                .as_deref()
                .ok_or_else(|| Error::invalid("--gamma-grid lo,hi,step is required"))?;
            let grid = parse_grid(grid_str, "--gamma-grid")?;
            let stat = match a.stat {
                GammaStatArg::PairTAbs => RosenbaumStat::PairTAbs,
                GammaStatArg::SignedRank => RosenbaumStat::SignedRank,
                GammaStatArg::Sign => RosenbaumStat::Sign,
            };
            let curve = sensitivity::gamma_curve(&diffs, &grid, stat, a.alpha)?;
            if let Some(path) = &a.curve_out {
                let rows: Vec<(f64, f64)> = curve
                    .grid
                    .iter()
                    .zip(&curve.values)
                    .map(|(&g, &p)| (g, p))
                    .collect();
                write_curve_csv(path, ("gamma", "p_value"), &rows)?;
            }
            Ok(json!({ "method": "gamma_sensitivity", "n_pairs": diffs.len(), "result": curve }))
        }
        SensMethod::Epsilon => {
            let da = need_data(a)?;
            let ds = da.load()?;
            let z = bool_column(&ds, ColumnRole::Treatment)?;
            let y = ds.column_with_role(ColumnRole::Outcome)?.to_vec();
            let x = da.covariate_matrix(&ds)?;
            if x.ncols() == 0 {
                return Err(Error::invalid("epsilon sensitivity needs --covariates"));
            }
            let estimator = match a.estimator {
                EpsEstimatorArg::Pred => EpsEstimator::Pred,
                EpsEstimatorArg::Ht => EpsEstimator::Ht,
                EpsEstimatorArg::Hajek => EpsEstimator::Hajek,
                EpsEstimatorArg::Dr => EpsEstimator::Dr,
            };
            let grid_flag = a.eps1_grid.as_deref().or(a.eps0_grid.as_deref());
            if let Some(grid_str) = grid_flag {
                let over_eps1 = a.eps1_grid.is_some();
                let grid = parse_grid(
                    grid_str,
                    if over_eps1 { "--eps1-grid" } else { "--eps0-grid" },
                )?;
                // Fit once; the grid only changes the fixed ratios.
                let ps = fit_pscore(&x, &z)?;
                let (mu1, mu0) = outcome_means(&x, &z, &y, OutcomeFamily::Linear)?;
                let values: Vec<f64> = grid
                    .iter()
                    .map(|&eps| {
                        let (e1, e0) = if over_eps1 { (eps, a.eps0) } else { (a.eps1, eps) };
                        sensitivity::epsilon_point(&ps, &z, &y, &mu1, &mu0, e1, e0, estimator)
                    })
                    .collect::<Result<_>>()?;
                if let Some(path) = &a.curve_out {
                    let rows: Vec<(f64, f64)> =
                        grid.iter().zip(&values).map(|(&g, &v)| (g, v)).collect();
                    let label = if over_eps1 { "eps1" } else { "eps0" };
                    write_curve_csv(path, (label, "estimate"), &rows)?;
                }
                Ok(json!({
                    "method": "epsilon_sensitivity_curve",
                    "varying": if over_eps1 { "eps1" } else { "eps0" },
                    "fixed": if over_eps1 { a.eps0 } else { a.eps1 },
                    "grid": grid,
                    "values": values,
                }))
            } else {
                let (b, seed) = boot_pair(a)?
                    .ok_or_else(|| Error::invalid("single-point epsilon needs --boot and --seed"))?;
                let cfg = BootConfig {
                    b,
                    seed,
                    alpha: a.alpha,
                };
                let report = sensitivity::epsilon_sensitivity(
                    &x,
                    &z,
                    &y,
                    a.eps1,
                    a.eps0,
                    estimator,
                    OutcomeFamily::Linear,
                    cfg,
                )?;
                Ok(serde_json::to_value(&report).expect("report serializes"))
            }
        }
    }
}
