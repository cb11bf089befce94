//! Tabular input handling: CSV loading with explicit column roles, validation
//! findings, and typed accessors for the analysis modules.
//!
//! Missing cells (empty string or `NA`) parse to `NaN` and are reported by
//! [`Dataset::validate`]; analyses refuse role columns containing missings
//! rather than imputing silently.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

/// The role a column plays in an analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ColumnRole {
    /// Binary treatment assignment `Z`.
    Treatment,
    /// Observed outcome `Y`.
    Outcome,
    /// Pre-treatment covariate (several columns may carry this role).
    Covariate,
    /// Mediator `M`.
    Mediator,
    /// Treatment received `D` (for instrumental-variable analyses).
    TreatmentReceived,
    /// Instrument.
    Instrument,
    /// Stratum label.
    Stratum,
    /// Matched-pair identifier.
    PairId,
    /// Running variable (regression discontinuity).
    Running,
    /// Sampling or design weight.
    Weight,
}

impl ColumnRole {
    /// Human-readable role name matching the CLI flag vocabulary.
    pub fn name(self) -> &'static str {
        match self {
            ColumnRole::Treatment => "treatment",
            ColumnRole::Outcome => "outcome",
            ColumnRole::Covariate => "covariate",
            ColumnRole::Mediator => "mediator",
            ColumnRole::TreatmentReceived => "treatment_received",
            ColumnRole::Instrument => "instrument",
            ColumnRole::Stratum => "stratum",
            ColumnRole::PairId => "pair_id",
            ColumnRole::Running => "running",
            ColumnRole::Weight => "weight",
        }
    }
}

/// A validation finding: a human-readable message with the rows involved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    /// What is wrong.
    pub message: String,
    /// Zero-based row indices exhibiting the problem (possibly truncated).
    pub rows: Vec<usize>,
}

/// A column-typed table of numeric data.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    roles: BTreeMap<String, ColumnRole>,
    rows: usize,
}

impl Dataset {
    /// Build a dataset from named columns (all the same length).
    pub fn from_columns(cols: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let rows = cols.first().map_or(0, |(_, c)| c.len());
        let mut names = Vec::new();
        let mut columns = Vec::new();
        for (name, col) in cols {
            if col.len() != rows {
                return Err(Error::invalid(format!(
                    "column '{name}' has {} rows, expected {rows}",
                    col.len()
                )));
            }
            if names.contains(&name) {
                return Err(Error::DuplicateHeader(name));
            }
            names.push(name);
            columns.push(col);
        }
        Ok(Dataset {
            names,
            columns,
            roles: BTreeMap::new(),
            rows,
        })
    }

    /// Number of rows.
    pub fn nrows(&self) -> usize {
        self.rows
    }

    /// Column names in file order.
    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Assign a role to a column; errors if the column does not exist.
    pub fn assign_role(&mut self, column: &str, role: ColumnRole) -> Result<()> {
        if !self.names.iter().any(|n| n == column) {
            return Err(Error::MissingColumn(column.to_string()));
        }
        self.roles.insert(column.to_string(), role);
        Ok(())
    }

    /// The role assigned to a column, if any.
    pub fn role_of(&self, column: &str) -> Option<ColumnRole> {
        self.roles.get(column).copied()
    }

    /// Borrow a column by name.
    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    /// The unique column carrying `role`; errors when absent or ambiguous.
    pub fn column_with_role(&self, role: ColumnRole) -> Result<&[f64]> {
        let matches: Vec<&String> = self
            .roles
            .iter()
            .filter(|(_, &r)| r == role)
            .map(|(n, _)| n)
            .collect();
        match matches.len() {
            0 => Err(Error::invalid(format!("no column has role '{}'", role.name()))),
            1 => self.column(matches[0]),
            _ => Err(Error::invalid(format!(
                "role '{}' assigned to multiple columns",
                role.name()
            ))),
        }
    }

    /// All columns carrying `role`, in file order.
    pub fn columns_with_role(&self, role: ColumnRole) -> Vec<(&str, &[f64])> {
        self.names
            .iter()
            .enumerate()
            .filter(|(_, n)| self.roles.get(*n) == Some(&role))
            .map(|(i, n)| (n.as_str(), self.columns[i].as_slice()))
            .collect()
    }

    /// Treatment column as booleans; errors if not binary 0/1.
    pub fn treatment(&self) -> Result<Vec<bool>> {
        let z = self.column_with_role(ColumnRole::Treatment)?;
        z.iter()
            .map(|&v| match v {
                v if v == 0.0 => Ok(false),
                v if v == 1.0 => Ok(true),
                v => Err(Error::invalid(format!("non-binary treatment value {v}"))),
            })
            .collect()
    }

    /// Check every declared invariant and report findings (never panics).
    pub fn validate(&self) -> Vec<Finding> {
        let mut findings = Vec::new();
        // Missing values in role-assigned columns.
        for (name, _) in self.roles.iter() {
            if let Ok(col) = self.column(name) {
                let rows: Vec<usize> = col
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| v.is_nan())
                    .map(|(i, _)| i)
                    .collect();
                if !rows.is_empty() {
                    findings.push(Finding {
                        message: format!("missing values in role column '{name}'"),
                        rows,
                    });
                }
            }
        }
        // Binary treatment.
        for (name, col) in self.columns_with_role(ColumnRole::Treatment) {
            let rows: Vec<usize> = col
                .iter()
                .enumerate()
                .filter(|(_, &v)| !v.is_nan() && v != 0.0 && v != 1.0)
                .map(|(i, _)| i)
                .collect();
            if !rows.is_empty() {
                findings.push(Finding {
                    message: format!("non-binary treatment in column '{name}'"),
                    rows,
                });
            }
        }
        // Pair groups of size >= 2.
        for (name, col) in self.columns_with_role(ColumnRole::PairId) {
            let mut counts: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
            for (i, &v) in col.iter().enumerate() {
                if !v.is_nan() {
                    counts.entry(v.to_bits()).or_default().push(i);
                }
            }
            let singles: Vec<usize> = counts
                .values()
                .filter(|v| v.len() < 2)
                .flatten()
                .copied()
                .collect();
            if !singles.is_empty() {
                findings.push(Finding {
                    message: format!("singleton pair group(s) in column '{name}'"),
                    rows: singles,
                });
            }
        }
        findings
    }

    /// Write back out as CSV (used by the round-trip test and curve outputs).
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.names)?;
        for i in 0..self.rows {
            let record: Vec<String> = self
                .columns
                .iter()
                .map(|c| {
                    if c[i].is_nan() {
                        "NA".to_string()
                    } else {
                        format!("{}", c[i])
                    }
                })
                .collect();
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Load a CSV file with a header row; all cells parsed as numbers, with empty
/// string and `NA` mapped to `NaN` (flagged later by validation).
pub fn load_csv(path: &Path) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    for (i, h) in headers.iter().enumerate() {
        if headers[..i].contains(h) {
            return Err(Error::DuplicateHeader(h.clone()));
        }
    }
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); headers.len()];
    for (row_idx, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != headers.len() {
            return Err(Error::invalid(format!(
                "row {row_idx} has {} fields, expected {}",
                record.len(),
                headers.len()
            )));
        }
        for (j, cell) in record.iter().enumerate() {
            let cell = cell.trim();
            let v = if cell.is_empty() || cell == "NA" {
                f64::NAN
            } else {
                cell.parse::<f64>().map_err(|_| Error::ParseCell {
                    row: row_idx,
                    column: headers[j].clone(),
                    value: cell.to_string(),
                })?
            };
            columns[j].push(v);
        }
    }
    Dataset::from_columns(headers.into_iter().zip(columns).collect())
}
