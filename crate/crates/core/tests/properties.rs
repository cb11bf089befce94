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

//! Property-based invariant checks over randomly generated inputs.

use causalkit::contingency::{risk_measures, TwoByTwo};
use causalkit::matching::{match_nn, MatchTarget, Metric};
use causalkit::propensity::{ipw_point, IpwEstimator};
use causalkit::randomization::{frt, AssignmentDesign, FrtContext, FrtMode, FrtSide, Statistic};
use causalkit::sensitivity::manski_bounds;
use causalkit::stats::midranks;
use causalkit::Matrix;
use proptest::prelude::*;

/// Outcome vectors that keep arithmetic well-conditioned.
fn ys(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-100.0f64..100.0, n)
}

/// A treatment vector with at least two units in each arm.
fn balanced_z(n: usize) -> impl Strategy<Value = Vec<bool>> {
    prop::collection::vec(any::<bool>(), n).prop_map(move |mut z| {
        z[0] = true;
        z[1] = true;
        z[n - 2] = false;
        z[n - 1] = false;
        z
    })
}

proptest! {
    /// The conservative Monte Carlo p-value dominates `p_hat R / (R + 1)` and
    /// both p-values stay in (0, 1].
    #[test]
    fn frt_valid_p_dominates(seed in 0u64..10_000, y in ys(12)) {
        let design = AssignmentDesign::Cre { n1: 6, n0: 6 };
        let z: Vec<bool> = (0..12).map(|i| i < 6).collect();
        let ctx = FrtContext { y: &y, x: None, strata: None, pairs: None };
        let r = frt(&design, &Statistic::DiffMeans, &z, &ctx,
                    FrtMode::MonteCarlo { r: 97 }, FrtSide::TwoSided, Some(seed)).unwrap();
        prop_assert!(r.p_value_valid >= r.p_value * 97.0 / 98.0 - 1e-12);
        prop_assert!(r.p_value >= 0.0 && r.p_value <= 1.0);
        prop_assert!(r.p_value_valid > 0.0 && r.p_value_valid <= 1.0);
    }

    /// The same seed reproduces the identical Monte Carlo p-value.
    #[test]
    fn frt_seed_determinism(seed in 0u64..10_000, y in ys(10)) {
        let design = AssignmentDesign::Cre { n1: 5, n0: 5 };
        let z: Vec<bool> = (0..10).map(|i| i % 2 == 0).collect();
        let ctx = FrtContext { y: &y, x: None, strata: None, pairs: None };
        let run = || frt(&design, &Statistic::DiffMeans, &z, &ctx,
                         FrtMode::MonteCarlo { r: 53 }, FrtSide::UpperTail, Some(seed)).unwrap();
        let (a, b) = (run(), run());
        prop_assert_eq!(a.p_value, b.p_value);
        prop_assert_eq!(a.observed, b.observed);
    }

    /// Worst-case bounds for a bounded outcome always have width exactly
    /// `y_max - y_min`.
    #[test]
    fn manski_width_is_the_outcome_range(
        z in balanced_z(16),
        raw in ys(16),
        lo in -5.0f64..0.0,
        span in 1.0f64..10.0,
    ) {
        let hi = lo + span;
        let y: Vec<f64> = raw.iter().map(|v| lo + (v + 100.0) / 200.0 * span).collect();
        let b = manski_bounds(&z, &y, lo, hi).unwrap();
        prop_assert!((b.upper - b.lower - span).abs() < 1e-9);
        prop_assert!(b.lower <= b.upper);
    }

    /// Matching bookkeeping: every unit gets exactly `m` matches, so the
    /// total usage counts on each side equal `m` times the opposite arm size.
    #[test]
    fn matching_counts_are_conserved(x1 in ys(14), x2 in ys(14), z in balanced_z(14), m in 1usize..3) {
        let x = Matrix::from_columns(&[x1, x2]);
        let n1 = z.iter().filter(|&&b| b).count();
        let n0 = z.len() - n1;
        let mr = match_nn(&x, &z, m, Metric::Euclidean, MatchTarget::Ate).unwrap();
        let used_controls: usize = (0..z.len()).filter(|&i| !z[i]).map(|i| mr.counts[i]).sum();
        let used_treated: usize = (0..z.len()).filter(|&i| z[i]).map(|i| mr.counts[i]).sum();
        prop_assert_eq!(used_controls, m * n1);
        prop_assert_eq!(used_treated, m * n0);
    }

    /// The normalized (Hajek) weighting estimator is invariant to adding a
    /// constant to every outcome.
    #[test]
    fn hajek_is_location_invariant(y in ys(20), shift in -50.0f64..50.0, z in balanced_z(20)) {
        let scores: Vec<f64> = (0..20).map(|i| 0.2 + 0.6 * (i as f64 / 19.0)).collect();
        let a = ipw_point(&scores, &z, &y, IpwEstimator::Hajek).unwrap();
        let shifted: Vec<f64> = y.iter().map(|v| v + shift).collect();
        let b = ipw_point(&scores, &z, &shifted, IpwEstimator::Hajek).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
    }

    /// Midranks always sum to `n(n+1)/2` regardless of ties.
    #[test]
    fn midranks_sum_is_fixed(raw in prop::collection::vec(0i32..6, 1..30)) {
        let xs: Vec<f64> = raw.iter().map(|&v| f64::from(v)).collect();
        let n = xs.len() as f64;
        let total: f64 = midranks(&xs).iter().sum();
        prop_assert!((total - n * (n + 1.0) / 2.0).abs() < 1e-9);
    }

    /// Risk measures on any non-degenerate table: the risk difference lies in
    /// [-1, 1] and the ratios are positive.
    #[test]
    fn risk_measures_respect_ranges(n11 in 1u64..40, n10 in 1u64..40, n01 in 1u64..40, n00 in 1u64..40) {
        let t = TwoByTwo { n11, n10, n01, n00 };
        let m = risk_measures(&t, 0.05).unwrap();
        prop_assert!((-1.0..=1.0).contains(&m.rd));
        prop_assert!(m.rr > 0.0);
        prop_assert!(m.or_ > 0.0);
        if let Some([lo, hi]) = m.ci_rd {
            prop_assert!(lo <= m.rd && m.rd <= hi);
        }
    }

    /// Complete-randomization enumeration is exhaustive and consistent: it
    /// has exactly `n choose n1` assignments, each with `n1` treated units.
    #[test]
    fn cre_enumeration_is_exhaustive(n in 2usize..9, k in 1usize..8) {
        let n1 = k.min(n - 1);
        let design = AssignmentDesign::Cre { n1, n0: n - n1 };
        let all = design.enumerate_assignments(1 << 20).unwrap();
        let choose = |n: usize, k: usize| -> usize {
            (1..=k).fold(1usize, |acc, j| acc * (n - k + j) / j)
        };
        prop_assert_eq!(all.len(), choose(n, n1));
        for z in &all {
            prop_assert_eq!(z.iter().filter(|&&b| b).count(), n1);
        }
        let mut sorted = all.clone();
        sorted.sort();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), all.len());
    }
}
