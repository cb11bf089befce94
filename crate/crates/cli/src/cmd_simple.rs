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

//! Count-based subcommands: `twobytwo`, `evalue`, and `bias-demo`.

use causalkit::contingency::{self, Sided, TwoByTwo};
use causalkit::{bias, Error, Result};
use clap::{Args, ValueEnum};
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SidedArg {
    /// Upper tail at the observed count.
    One,
    /// Minimum-likelihood two-sided.
    Two,
}

#[derive(Debug, Args)]
pub struct TwoByTwoArgs {
    /// Counts: treated successes, treated failures, control successes,
    /// control failures.
    #[arg(num_args = 4, value_names = ["N11", "N10", "N01", "N00"])]
    counts: Vec<u64>,
    /// Additional stratum tables `n11,n10,n01,n00` (repeat the flag); two or
    /// more trigger the stratified decomposition with the pooled table
    /// computed from the strata.
    #[arg(long = "stratum", value_name = "N11,N10,N01,N00")]
    strata: Vec<String>,
    /// Also run the exact hypergeometric test with this sidedness.
    #[arg(long, value_enum)]
    exact: Option<SidedArg>,
    /// Two-sided interval level is 1 - alpha.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
}

fn parse_table(s: &str) -> Result<TwoByTwo> {
    let parts: Vec<u64> = s
        .split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| Error::invalid(format!("unparseable count '{p}'")))
        })
        .collect::<Result<_>>()?;
    if parts.len() != 4 {
        return Err(Error::invalid("a stratum needs exactly four counts"));
    }
    TwoByTwo::new(parts[0], parts[1], parts[2], parts[3])
}

pub fn twobytwo(a: &TwoByTwoArgs) -> Result<Value> {
    if !a.strata.is_empty() {
        if a.strata.len() < 2 {
            return Err(Error::invalid(
                "stratified decomposition needs at least two --stratum tables",
            ));
        }
        let tables: Vec<TwoByTwo> = a.strata.iter().map(|s| parse_table(s)).collect::<Result<_>>()?;
        let d = contingency::simpson_decompose(&tables, a.alpha)?;
        return Ok(json!({ "method": "simpson_decompose", "result": d }));
    }
    let t = TwoByTwo::new(a.counts[0], a.counts[1], a.counts[2], a.counts[3])?;
    let measures = contingency::risk_measures(&t, a.alpha)?;
    let mut out = json!({ "method": "risk_measures", "n": t.n(), "result": measures });
    if let Some(sided) = a.exact {
        let p = contingency::hypergeom_exact(
            &t,
            match sided {
                SidedArg::One => Sided::One,
                SidedArg::Two => Sided::Two,
            },
        )?;
        out["exact_p"] = json!(p);
    }
    Ok(out)
}

#[derive(Debug, Args)]
pub struct EvalueArgs {
    /// Observed risk ratio.
    rr: f64,
    /// Confidence limit closer to the null, for a confidence-limit E-value.
    #[arg(long)]
    ci_bound: Option<f64>,
}

pub fn evalue(a: &EvalueArgs) -> Result<Value> {
    match a.ci_bound {
        Some(bound) => {
            let (e_point, e_ci) = contingency::evalue_report(a.rr, bound)?;
            Ok(json!({
                "method": "evalue",
                "rr": a.rr,
                "evalue_point": e_point,
                "evalue_ci": e_ci,
            }))
        }
        None => Ok(json!({
            "method": "evalue",
            "rr": a.rr,
            "evalue_point": contingency::evalue(a.rr)?,
        })),
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BiasKind {
    /// Collider structure: adjusting opens a backdoor path.
    MBias,
    /// Instrument structure: adjusting amplifies confounding bias.
    ZBias,
}

#[derive(Debug, Args)]
pub struct BiasDemoArgs {
    /// Which cautionary structure to simulate.
    #[arg(long, value_enum)]
    kind: BiasKind,
    /// Structural coefficients.
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Confounder-outcome coefficient (collider structure only).
    #[arg(long, default_value_t = 1.0)]
    d: f64,
    /// True treatment effect (instrument structure only).
    #[arg(long, default_value_t = 0.0)]
    tau: f64,
    /// Simulation size (at least 10000).
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    /// Simulation seed (required: the demo is stochastic).
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
}

pub fn bias_demo(a: &BiasDemoArgs) -> Result<Value> {
    let demo = match a.kind {
        BiasKind::MBias => bias::m_bias_demo(a.a, a.b, a.c, a.d, a.n, a.seed, a.alpha)?,
        BiasKind::ZBias => bias::z_bias_demo(a.a, a.b, a.c, a.tau, a.n, a.seed, a.alpha)?,
    };
    Ok(serde_json::to_value(&demo).expect("demo serializes"))
}
