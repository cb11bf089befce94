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

//! `causalkit`: command-line causal-inference toolkit.
//!
//! Machine-readable JSON goes to stdout (deterministic: identical input
//! files, flags, and seed produce byte-identical bytes); a human-readable
//! summary goes to stderr. Exit codes: 0 success, 1 validation error,
//! 2 numeric failure.

mod cmd_estimate;
mod cmd_frt;
mod cmd_iv;
mod cmd_match;
mod cmd_mediate;
mod cmd_obs;
mod cmd_rdd;
mod cmd_sens;
mod cmd_simple;
mod data;
mod json;

use causalkit::Error;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "causalkit",
    version,
    about = "Design-based causal inference: randomization tests, estimators, bounds, and sensitivity analysis"
)]
struct Cli {
    /// Worker threads for parallel enumeration/bootstrap (also honored from
    /// the CAUSALKIT_THREADS environment variable; the flag wins).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a 2x2 table (risk difference/ratio, odds ratio, exact test,
    /// stratified decomposition).
    Twobytwo(cmd_simple::TwoByTwoArgs),
    /// E-value for an observed risk ratio (and optionally a confidence limit).
    Evalue(cmd_simple::EvalueArgs),
    /// Fisher randomization test of the sharp null.
    Frt(cmd_frt::FrtArgs),
    /// Randomized-experiment estimators (Neyman, stratified, covariate
    /// adjusted, gain score, matched pairs).
    Estimate(cmd_estimate::EstimateArgs),
    /// Observational-study estimators built on the propensity score.
    Obs(cmd_obs::ObsArgs),
    /// Nearest-neighbor matching estimator.
    Match(cmd_match::MatchArgs),
    /// Bounds and sensitivity analysis.
    Sens(cmd_sens::SensArgs),
    /// Instrumental-variable analyses.
    Iv(cmd_iv::IvArgs),
    /// Regression discontinuity.
    Rdd(cmd_rdd::RddArgs),
    /// Mediation analysis.
    Mediate(cmd_mediate::MediateArgs),
    /// Closed-form covariate-adjustment bias demonstrations.
    BiasDemo(cmd_simple::BiasDemoArgs),
}

/// Exit code for an error: 1 for validation problems, 2 for numeric failure.
fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_)
        | Error::Csv(_)
        | Error::ParseCell { .. }
        | Error::DuplicateHeader(_)
        | Error::MissingColumn(_)
        | Error::InvalidInput(_) => 1,
        Error::SingularDesign { .. }
        | Error::Separation { .. }
        | Error::NoConvergence { .. }
        | Error::Degenerate(_)
        | Error::EnumerationTooLarge { .. }
        | Error::TooManyDropped { .. } => 2,
    }
}

fn configure_threads(flag: Option<usize>) -> Result<(), Error> {
    let from_env = std::env::var("CAUSALKIT_THREADS")
        .ok()
        .map(|v| {
            v.parse::<usize>()
                .map_err(|_| Error::invalid(format!("CAUSALKIT_THREADS must be a count, got '{v}'")))
        })
        .transpose()?;
    if let Some(n) = flag.or(from_env) {
        if n == 0 {
            return Err(Error::invalid("thread count must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<serde_json::Value, Error> {
    configure_threads(cli.threads)?;
    match cli.command {
        Command::Twobytwo(a) => cmd_simple::twobytwo(&a),
        Command::Evalue(a) => cmd_simple::evalue(&a),
        Command::Frt(a) => cmd_frt::run(&a),
        Command::Estimate(a) => cmd_estimate::run(&a),
        Command::Obs(a) => cmd_obs::run(&a),
        Command::Match(a) => cmd_match::run(&a),
        Command::Sens(a) => cmd_sens::run(&a),
        Command::Iv(a) => cmd_iv::run(&a),
        Command::Rdd(a) => cmd_rdd::run(&a),
        Command::Mediate(a) => cmd_mediate::run(&a),
        Command::BiasDemo(a) => cmd_simple::bias_demo(&a),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are success; malformed flags exit 1.
            if e.use_stderr() {
                eprint!("{e}");
                std::process::exit(1);
            }
            print!("{e}");
            std::process::exit(0);
        }
    };
    match run(cli) {
        Ok(value) => {
            println!("{}", json::to_string(&value));
            eprintln!("{}", json::render_human(&value));
        }
        Err(e) => {
            let code = exit_code(&e);
            eprintln!("error: {e}");
            std::process::exit(code);
        }
    }
}
