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

//! Seeded Monte Carlo checks of the finite-sample statistical guarantees:
//! estimator unbiasedness and variance formulas, validity of the
//! randomization test, and the double-robustness bias pattern.

use causalkit::bias::z_bias_demo;
use causalkit::bootstrap;
use causalkit::design;
use causalkit::propensity::{self, OutcomeFamily};
use causalkit::randomization::{frt, AssignmentDesign, FrtContext, FrtMode, FrtSide, Statistic};
use causalkit::rng::{rng_from_seed, sub_seed};
use causalkit::special::normal_quantile;
use causalkit::stats::{mean, sample_sd, sample_var};
use causalkit::Matrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn norm(rng: &mut ChaCha8Rng) -> f64 {
    normal_quantile(rng.gen::<f64>().clamp(1e-12, 1.0 - 1e-12))
}

/// Fixed potential outcomes with a constant treatment effect: the Neyman
/// variance estimator is unbiased for the true assignment variance, so over
/// 10^4 completely randomized draws mean(Vhat)/var(tauhat) stays in
/// [0.95, 1.05], and mean(tauhat) matches the constant effect.
#[test]
fn neyman_variance_is_exact_under_constant_effects() {
    let mut rng = rng_from_seed(101);
    let n = 40;
    let tau = 1.5;
    let y0: Vec<f64> = (0..n).map(|_| norm(&mut rng)).collect();
    let y1: Vec<f64> = y0.iter().map(|v| v + tau).collect();
    let design = AssignmentDesign::Cre { n1: 20, n0: 20 };
    let reps = 10_000;
    let mut ests = Vec::with_capacity(reps);
    let mut vhats = Vec::with_capacity(reps);
    for _ in 0..reps {
        let z = design.sample_assignment(&mut rng).unwrap();
        let y: Vec<f64> = (0..n).map(|i| if z[i] { y1[i] } else { y0[i] }).collect();
        let r = design::neyman_cre(&z, &y, 0.05).unwrap();
        ests.push(r.estimate);
        vhats.push(r.se * r.se);
    }
    let ratio = mean(&vhats).unwrap() / sample_var(&ests).unwrap();
    assert!((0.95..=1.05).contains(&ratio), "ratio {ratio}");
    let mc_se = sample_sd(&ests).unwrap() / (reps as f64).sqrt();
    assert!((mean(&ests).unwrap() - tau).abs() < 3.0 * mc_se);
    println!("PASS: simulation - Neyman variance ratio {ratio:.3} in [0.95, 1.05]");
}

/// The true assignment variance is `S1^2/n1 + S0^2/n0 - S_tau^2/n`:
/// negatively correlated potential outcomes inflate `S_tau^2` and so shrink
/// the variance relative to positively correlated ones with the same
/// marginals.
#[test]
fn potential_outcome_correlation_orders_the_variance() {
    let mut rng = rng_from_seed(202);
    let n = 40;
    let base: Vec<f64> = (0..n).map(|_| norm(&mut rng)).collect();
    let y0 = base.clone();
    let y1_pos = base.clone(); // corr +1, S_tau = 0
    let y1_neg: Vec<f64> = base.iter().map(|v| -v).collect(); // corr -1
    let design = AssignmentDesign::Cre { n1: 20, n0: 20 };
    let reps = 10_000;
    let run = |y1: &[f64], rng: &mut ChaCha8Rng| -> f64 {
        let mut ests = Vec::with_capacity(reps);
        for _ in 0..reps {
            let z = design.sample_assignment(rng).unwrap();
            let y: Vec<f64> = (0..n).map(|i| if z[i] { y1[i] } else { y0[i] }).collect();
            ests.push(design::neyman_cre(&z, &y, 0.05).unwrap().estimate);
        }
        sample_var(&ests).unwrap()
    };
    let v_pos = run(&y1_pos, &mut rng);
    let v_neg = run(&y1_neg, &mut rng);
    assert!(v_neg < v_pos, "negative-correlation var {v_neg} should be below {v_pos}");
    println!("PASS: simulation - potential-outcome correlation variance ordering ({v_neg:.4} < {v_pos:.4})");
}

/// Under the sharp null the conservative Monte Carlo p-value is valid:
/// across 1000 independent experiments pr(p_valid <= 0.05) <= 0.06.
#[test]
fn frt_is_valid_under_the_sharp_null() {
    let n = 20;
    let design = AssignmentDesign::Cre { n1: 10, n0: 10 };
    let mut rejections = 0;
    for sim in 0..1000u64 {
        let mut rng = rng_from_seed(sub_seed(303, sim));
        let y: Vec<f64> = (0..n).map(|_| norm(&mut rng)).collect();
        let z = design.sample_assignment(&mut rng).unwrap();
        let ctx = FrtContext { y: &y, x: None, strata: None, pairs: None };
        let r = frt(
            &design,
            &Statistic::DiffMeans,
            &z,
            &ctx,
            FrtMode::MonteCarlo { r: 200 },
            FrtSide::TwoSided,
            Some(sub_seed(404, sim)),
        )
        .unwrap();
        if r.p_value_valid <= 0.05 {
            rejections += 1;
        }
    }
    let rate = rejections as f64 / 1000.0;
    assert!(rate <= 0.06, "rejection rate {rate}");
    println!("PASS: simulation - FRT validity under the sharp null (rejection rate {rate:.3})");
}

/// Doubly robust estimator bias pattern over 500 replications at n = 500:
/// near-zero bias whenever either the propensity model or the outcome model
/// is correctly specified, clear bias when both are wrong.
#[test]
fn doubly_robust_four_case_bias_pattern() {
    let n = 500;
    let reps = 500;
    let tau = 1.0;
    // Truth depends on x^2; the misspecified models only see x.
    let mut biases = [[0.0f64; 2]; 2]; // [ps correct?][outcome correct?]
    let mut rng = rng_from_seed(505);
    for _ in 0..reps {
        let x: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        let x2: Vec<f64> = x.iter().map(|v| v * v).collect();
        let z: Vec<bool> = (0..n)
            .map(|i| {
                let lin = -1.0 + 3.0 * x2[i];
                rng.gen::<f64>() < 1.0 / (1.0 + (-lin).exp())
            })
            .collect();
        let y: Vec<f64> = (0..n)
            .map(|i| tau * f64::from(z[i]) + 4.0 * x2[i] + 0.5 * norm(&mut rng))
            .collect();
        let good = Matrix::from_columns(&[x.clone(), x2.clone()]);
        let bad = Matrix::from_columns(&[x.clone()]);
        for (pi, ps_x) in [(1, &good), (0, &bad)] {
            let scores = propensity::fit_pscore(ps_x, &z).unwrap().scores;
            for (oi, out_x) in [(1, &good), (0, &bad)] {
                let (mu1, mu0) =
                    propensity::outcome_means(out_x, &z, &y, OutcomeFamily::Linear).unwrap();
                let est = propensity::dr_point(&scores, &z, &y, &mu1, &mu0).unwrap();
                biases[pi][oi] += (est - tau) / reps as f64;
            }
        }
    }
    for (pi, oi) in [(1, 1), (1, 0), (0, 1)] {
        assert!(
            biases[pi][oi].abs() < 0.05,
            "case (ps={pi}, out={oi}) bias {} should be near zero",
            biases[pi][oi]
        );
    }
    assert!(
        biases[0][0].abs() > 0.10,
        "doubly misspecified bias {} should be clearly nonzero",
        biases[0][0]
    );
    println!(
        "PASS: simulation - DR bias pattern: both {:.3}, ps-only {:.3}, outcome-only {:.3}, neither {:.3}",
        biases[1][1], biases[1][0], biases[0][1], biases[0][0]
    );
}

/// Simple-random-sampling lemma: over completely randomized draws, the
/// treated-arm mean of a fixed attribute has mean equal to the grand mean and
/// variance `(n0 / (n n1)) S^2`, checked within 3 Monte Carlo SEs.
#[test]
fn srs_moments_of_the_treated_arm_mean() {
    let mut rng = rng_from_seed(606);
    let n = 30;
    let (n1, n0) = (12, 18);
    let c: Vec<f64> = (0..n).map(|_| norm(&mut rng)).collect();
    let cbar = mean(&c).unwrap();
    let s2 = sample_var(&c).unwrap();
    let true_var = n0 as f64 / (n as f64 * n1 as f64) * s2;
    let design = AssignmentDesign::Cre { n1, n0 };
    let reps = 20_000;
    let mut means = Vec::with_capacity(reps);
    for _ in 0..reps {
        let z = design.sample_assignment(&mut rng).unwrap();
        let m: f64 = (0..n).filter(|&i| z[i]).map(|i| c[i]).sum::<f64>() / n1 as f64;
        means.push(m);
    }
    let mc_mean = mean(&means).unwrap();
    let mc_var = sample_var(&means).unwrap();
    let se_mean = sample_sd(&means).unwrap() / (reps as f64).sqrt();
    // MC SE of a sample variance of approximately normal draws.
    let se_var = mc_var * (2.0 / (reps as f64 - 1.0)).sqrt();
    assert!((mc_mean - cbar).abs() < 3.0 * se_mean, "mean {mc_mean} vs {cbar}");
    assert!((mc_var - true_var).abs() < 3.0 * se_var, "var {mc_var} vs {true_var}");
    println!("PASS: simulation - SRS lemma moments within 3 MC SEs");
}

/// The bootstrap SE of a sample mean lands within 15% of the analytic
/// `s/sqrt(n)` at n = 100, B = 200.
#[test]
fn bootstrap_se_of_the_mean_matches_analytic() {
    let mut rng = rng_from_seed(707);
    let n = 100;
    let y: Vec<f64> = (0..n).map(|_| norm(&mut rng)).collect();
    let analytic = sample_sd(&y).unwrap() / (n as f64).sqrt();
    let point = mean(&y).unwrap();
    let res = bootstrap::bootstrap(n, 200, 808, point, |idx| {
        mean(&bootstrap::take(&y, idx))
    })
    .unwrap();
    let rel = (res.se - analytic).abs() / analytic;
    assert!(rel < 0.15, "bootstrap se {} vs analytic {} (rel {rel})", res.se, analytic);
    println!("PASS: simulation - bootstrap SE within 15% of analytic ({:.4} vs {:.4})", res.se, analytic);
}

/// At n = 10^6 the simulated instrument-adjustment demonstration pins the
/// analytic biases 1/3 (unadjusted) and 1/2 (adjusted) within 3 MC SEs.
#[test]
fn z_bias_demo_hits_the_analytic_targets() {
    let demo = z_bias_demo(1.0, 1.0, 1.0, 0.0, 1_000_000, 909, 0.05).unwrap();
    for (report, target) in [(&demo.unadjusted, 1.0 / 3.0), (&demo.adjusted, 0.5)] {
        assert_eq!(report.diagnostics["target"].as_f64().unwrap(), target);
        assert!(
            (report.estimate - target).abs() < 3.0 * report.se,
            "{} vs {target} (se {})",
            report.estimate,
            report.se
        );
    }
    println!(
        "PASS: simulation - instrument-bias demo at n=10^6 ({:.4} -> 1/3, {:.4} -> 1/2)",
        demo.unadjusted.estimate, demo.adjusted.estimate
    );
}
