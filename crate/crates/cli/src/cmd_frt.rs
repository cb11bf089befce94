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

//! `frt`: Fisher randomization test of the sharp null.

use causalkit::dataset::ColumnRole;
use causalkit::randomization::{
    frt, AssignmentDesign, FrtContext, FrtMode, FrtSide, Statistic, StratKsVariant,
    VanElterenWeight,
};
use causalkit::{Error, Result};
use clap::{Args, ValueEnum};
use serde_json::Value;

use crate::data::{bool_column, index_column, DataArgs};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DesignArg {
    /// Completely randomized (fixed treated count).
    Cre,
    /// Independent Bernoulli coins with the observed treated share.
    Bernoulli,
    /// Stratified randomization (needs --strata).
    Sre,
    /// Matched pairs (needs --pair-id).
    Mpe,
    /// Rerandomized with a Mahalanobis threshold (needs --covariates and
    /// --rem-threshold).
    Rem,
}

#[derive(Debug, Args)]
pub struct FrtArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Assignment design to enumerate or sample from.
    #[arg(long, value_enum)]
    design: DesignArg,
    /// Test statistic, e.g. diff-means, student-t, wilcoxon, ks, strat-diff,
    /// strat-t, van-elteren, aligned-rank, strat-ks, pair-mean, pair-t,
    /// sign-rank, sign, mcnemar, butler-ks, lin-t, regression-coef; prefix
    /// with `pseudo:` to residualize the outcome on the covariates first.
    #[arg(long)]
    stat: String,
    /// Monte Carlo replications (exact enumeration when --exact is set;
    /// automatic choice when neither is given).
    #[arg(long)]
    reps: Option<u64>,
    /// Force full enumeration of the assignment support.
    #[arg(long)]
    exact: bool,
    /// Two-sided p-value (default is the upper tail).
    #[arg(long)]
    two_sided: bool,
    /// Seed (required unless --exact).
    #[arg(long)]
    seed: Option<u64>,
    /// Acceptance threshold on the Mahalanobis distance (rerandomized
    /// design).
    #[arg(long)]
    rem_threshold: Option<f64>,
}

fn parse_stat(name: &str) -> Result<Statistic> {
    if let Some(inner) = name.strip_prefix("pseudo:") {
        return Ok(Statistic::PseudoOutcome(Box::new(parse_stat(inner)?)));
    }
    Ok(match name {
        "diff-means" => Statistic::DiffMeans,
        "student-t" => Statistic::StudentT,
        "wilcoxon" => Statistic::Wilcoxon,
        "ks" => Statistic::Ks,
        "strat-diff" => Statistic::StratDiff,
        "strat-t" => Statistic::StratT,
        "van-elteren" => Statistic::VanElteren(VanElterenWeight::InverseProduct),
        "van-elteren-size" => Statistic::VanElteren(VanElterenWeight::InverseSizePlusOne),
        "aligned-rank" => Statistic::AlignedRank,
        "strat-ks" => Statistic::StratKs(StratKsVariant::WeightedSum),
        "strat-ks-max" => Statistic::StratKs(StratKsVariant::Max),
        "strat-ks-pooled" => Statistic::StratKs(StratKsVariant::Pooled),
        "pair-mean" => Statistic::PairMean,
        "pair-t" => Statistic::PairT,
        "sign-rank" => Statistic::SignRank,
        "sign" => Statistic::Sign,
        "mcnemar" => Statistic::McNemar,
        "butler-ks" => Statistic::ButlerKs,
        "lin-t" => Statistic::LinT,
        "regression-coef" => Statistic::RegressionCoef,
        other => return Err(Error::invalid(format!("unknown statistic '{other}'"))),
    })
}

pub fn run(a: &FrtArgs) -> Result<Value> {
    let ds = a.data.load()?;
    let z = bool_column(&ds, ColumnRole::Treatment)?;
    let y = ds.column_with_role(ColumnRole::Outcome)?.to_vec();
    let n = y.len();
    let n1 = z.iter().filter(|&&b| b).count();

    let strata = if a.data.strata.is_some() {
        Some(index_column(&ds, ColumnRole::Stratum)?)
    } else {
        None
    };
    let pairs = if a.data.pair_id.is_some() {
        Some(index_column(&ds, ColumnRole::PairId)?)
    } else {
        None
    };
    let x = a.data.covariate_matrix(&ds)?;
    let xopt = (x.ncols() > 0).then_some(&x);

    let design = match a.design {
        DesignArg::Cre => AssignmentDesign::Cre { n1, n0: n - n1 },
        DesignArg::Bernoulli => AssignmentDesign::Bernoulli {
            n,
            p: n1 as f64 / n as f64,
        },
        DesignArg::Sre => {
            let membership = strata
                .clone()
                .ok_or_else(|| Error::invalid("the stratified design needs --strata"))?;
            let k = membership.iter().max().map_or(0, |m| m + 1);
            let mut treated = vec![0usize; k];
            for (i, &s) in membership.iter().enumerate() {
                if z[i] {
                    treated[s] += 1;
                }
            }
            AssignmentDesign::Sre { membership, treated }
        }
        DesignArg::Mpe => AssignmentDesign::Mpe {
            pairs: pairs
                .clone()
                .ok_or_else(|| Error::invalid("the matched-pairs design needs --pair-id"))?,
        },
        DesignArg::Rem => AssignmentDesign::Rem {
            n1,
            n0: n - n1,
            x: xopt
                .cloned()
                .ok_or_else(|| Error::invalid("the rerandomized design needs --covariates"))?,
            threshold: a
                .rem_threshold
                .ok_or_else(|| Error::invalid("the rerandomized design needs --rem-threshold"))?,
        },
    };

    let mode = match (a.exact, a.reps) {
        (true, None) => FrtMode::Exact,
        (true, Some(_)) => {
            return Err(Error::invalid("--exact and --reps are mutually exclusive"))
        }
        (false, Some(r)) => FrtMode::MonteCarlo { r },
        (false, None) => FrtMode::Auto,
    };
    if !a.exact && a.seed.is_none() {
        return Err(Error::invalid(
            "a --seed is required whenever the test may run Monte Carlo",
        ));
    }

    let ctx = FrtContext {
        y: &y,
        x: xopt,
        strata: strata.as_deref(),
        pairs: pairs.as_deref(),
    };
    let side = if a.two_sided {
        FrtSide::TwoSided
    } else {
        FrtSide::UpperTail
    };
    let result = frt(&design, &parse_stat(&a.stat)?, &z, &ctx, mode, side, a.seed)?;
    let mut out = serde_json::to_value(&result).expect("result serializes");
    out["statistic"] = Value::String(a.stat.clone());
    Ok(out)
}
