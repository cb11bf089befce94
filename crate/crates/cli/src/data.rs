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

//! CSV loading plus role-flag plumbing shared by the data-driven
//! subcommands.

use std::path::PathBuf;

use causalkit::dataset::{load_csv, ColumnRole, Dataset};
use causalkit::{Error, Matrix, Result};
use clap::Args;

/// Input file and column-role flags.
#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Column with the binary treatment assignment.
    #[arg(long)]
    pub treatment: Option<String>,
    /// Column with the outcome.
    #[arg(long)]
    pub outcome: Option<String>,
    /// Comma-separated covariate columns.
    #[arg(long, value_delimiter = ',')]
    pub covariates: Vec<String>,
    /// Column with the stratum label.
    #[arg(long)]
    pub strata: Option<String>,
    /// Column with the matched-pair identifier.
    #[arg(long)]
    pub pair_id: Option<String>,
    /// Column with the mediator.
    #[arg(long)]
    pub mediator: Option<String>,
    /// Column with the treatment actually received.
    #[arg(long)]
    pub received: Option<String>,
    /// Column with the instrument.
    #[arg(long)]
    pub instrument: Option<String>,
    /// Column with the running variable (regression discontinuity).
    #[arg(long)]
    pub running: Option<String>,
}

impl DataArgs {
    /// Load the file, assign the requested roles, and refuse role columns
    /// with missing values.
    pub fn load(&self) -> Result<Dataset> {
        let mut ds = load_csv(&self.data)?;
        let singles = [
            (&self.treatment, ColumnRole::Treatment),
            (&self.outcome, ColumnRole::Outcome),
            (&self.strata, ColumnRole::Stratum),
            (&self.pair_id, ColumnRole::PairId),
            (&self.mediator, ColumnRole::Mediator),
            (&self.received, ColumnRole::TreatmentReceived),
            (&self.instrument, ColumnRole::Instrument),
            (&self.running, ColumnRole::Running),
        ];
        for (col, role) in singles {
            if let Some(name) = col {
                ds.assign_role(name, role)?;
            }
        }
        for name in &self.covariates {
            ds.assign_role(name, ColumnRole::Covariate)?;
        }
        let findings = ds.validate();
        if let Some(f) = findings.first() {
            return Err(Error::invalid(format!(
                "{} (rows {:?}{})",
                f.message,
                &f.rows[..f.rows.len().min(10)],
                if f.rows.len() > 10 { ", ..." } else { "" }
            )));
        }
        Ok(ds)
    }

    /// Covariate matrix in flag order (possibly zero columns).
    pub fn covariate_matrix(&self, ds: &Dataset) -> Result<Matrix> {
        let cols: Vec<Vec<f64>> = self
            .covariates
            .iter()
            .map(|name| ds.column(name).map(<[f64]>::to_vec))
            .collect::<Result<_>>()?;
        Ok(Matrix::from_columns(&cols))
    }
}

/// A `0/1` column as booleans.
pub fn bool_column(ds: &Dataset, role: ColumnRole) -> Result<Vec<bool>> {
    let raw = ds.column_with_role(role)?;
    raw.iter()
        .map(|&v| match v {
            v if v == 0.0 => Ok(false),
            v if v == 1.0 => Ok(true),
            v => Err(Error::invalid(format!(
                "column with role '{}' must be 0/1, found {v}",
                role.name()
            ))),
        })
        .collect()
}

/// A label column as dense 0-based indices (values relabeled in first-seen
/// order of their sorted distinct values).
pub fn index_column(ds: &Dataset, role: ColumnRole) -> Result<Vec<usize>> {
    let raw = ds.column_with_role(role)?;
    let mut distinct: Vec<f64> = raw.to_vec();
    distinct.sort_by(|a, b| a.partial_cmp(b).expect("validated non-NaN"));
    distinct.dedup();
    Ok(raw
        .iter()
        .map(|v| distinct.partition_point(|d| d < v))
        .collect())
}

/// Parse `lo,hi` into a pair.
pub fn parse_pair(s: &str, what: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(Error::invalid(format!("{what} must be 'lo,hi', got '{s}'")));
    }
    let lo: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| Error::invalid(format!("{what}: unparseable '{}'", parts[0])))?;
    let hi: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| Error::invalid(format!("{what}: unparseable '{}'", parts[1])))?;
    Ok((lo, hi))
}

/// Parse `lo,hi,step` into an inclusive grid.
pub fn parse_grid(s: &str, what: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(Error::invalid(format!(
            "{what} must be 'lo,hi,step', got '{s}'"
        )));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| Error::invalid(format!("{what}: unparseable '{p}'")))
        })
        .collect::<Result<_>>()?;
    let (lo, hi, step) = (nums[0], nums[1], nums[2]);
    if step <= 0.0 || hi < lo {
        return Err(Error::invalid(format!("{what} needs lo <= hi and step > 0")));
    }
    let mut grid = Vec::new();
    let mut v = lo;
    let mut k = 0u64;
    while v <= hi + 1e-12 * step {
        grid.push(v);
        k += 1;
        v = lo + step * k as f64;
    }
    Ok(grid)
}

/// Write a two-column curve CSV with a header.
pub fn write_curve_csv(
    path: &std::path::Path,
    header: (&str, &str),
    rows: &[(f64, f64)],
) -> Result<()> {
    use std::io::Write;
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "{},{}", header.0, header.1)?;
    for (a, b) in rows {
        writeln!(f, "{a},{b}")?;
    }
    Ok(())
}
