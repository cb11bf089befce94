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

//! `rdd`: regression discontinuity at a cutoff on the running variable.

use std::path::PathBuf;

use causalkit::dataset::ColumnRole;
use causalkit::rdd::{bandwidth_sweep, fuzzy_rdd, sharp_rdd, RddSpec};
use causalkit::{Error, Result};
use clap::Args;
use serde_json::{json, Value};

use crate::data::{parse_grid, write_curve_csv, DataArgs};

#[derive(Debug, Args)]
pub struct RddArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Cutoff on the running variable; treatment is crossing the cutoff.
    #[arg(long)]
    cutoff: f64,
    /// Bandwidth: fit within `|running - cutoff| <= h`.
    #[arg(long, conflicts_with = "h_grid")]
    h: Option<f64>,
    /// Bandwidth grid `lo,hi,step` for a sensitivity sweep.
    #[arg(long)]
    h_grid: Option<String>,
    /// Fuzzy design: instrument the received treatment (--received) with the
    /// cutoff indicator.
    #[arg(long)]
    fuzzy: bool,
    /// Write the bandwidth sweep curve `(h, estimate)` to this CSV file.
    #[arg(long)]
    curve_out: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
}

pub fn run(a: &RddArgs) -> Result<Value> {
    let ds = a.data.load()?;
    let x = ds.column_with_role(ColumnRole::Running)?.to_vec();
    let y = ds.column_with_role(ColumnRole::Outcome)?.to_vec();
    let d = if a.fuzzy {
        Some(ds.column_with_role(ColumnRole::TreatmentReceived)?.to_vec())
    } else {
        None
    };
    match (&a.h, &a.h_grid) {
        (Some(h), None) => {
            let spec = RddSpec { x0: a.cutoff, h: **h };
            let report = match &d {
                None => sharp_rdd(&spec, &x, &y, a.alpha)?,
                Some(d) => fuzzy_rdd(&spec, &x, d, &y, a.alpha)?,
            };
            Ok(serde_json::to_value(&report).expect("report serializes"))
        }
        (None, Some(grid_str)) => {
            let grid = parse_grid(grid_str, "--h-grid")?;
            let sweep = bandwidth_sweep(a.cutoff, &grid, &x, d.as_deref(), &y, a.alpha)?;
            if let Some(path) = &a.curve_out {
                let rows: Vec<(f64, f64)> = sweep
                    .iter()
                    .filter_map(|p| p.report.as_ref().map(|r| (p.h, r.estimate)))
                    .collect();
                write_curve_csv(path, ("h", "estimate"), &rows)?;
            }
            Ok(json!({ "method": "bandwidth_sweep", "cutoff": a.cutoff, "result": sweep }))
        }
        (None, None) => Err(Error::invalid("one of --h or --h-grid is required")),
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    }
}
