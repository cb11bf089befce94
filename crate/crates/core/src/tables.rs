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

//! Bundled example datasets.
//!
//! Small classic tables used throughout the documentation and test suite:
//! contingency tables from published medical and social-science studies,
//! and two tiny paired experiments. Each constant is transcribed from the
//! published summary tables; sample sizes are exact counts, not samples.

use crate::contingency::TwoByTwo;

/// Kidney-stone treatment comparison (success, failure) per arm, pooled over
/// stone size. Treatment rows first: (treated successes, treated failures,
/// control successes, control failures).
pub const KIDNEY_POOLED: [u64; 4] = [273, 77, 289, 61];
/// Kidney-stone table restricted to small stones.
pub const KIDNEY_SMALL: [u64; 4] = [81, 6, 234, 36];
/// Kidney-stone table restricted to large stones.
pub const KIDNEY_LARGE: [u64; 4] = [192, 71, 55, 25];

/// Resume audit study: callbacks vs no-callbacks for White-sounding and
/// African-American-sounding names.
pub const RESUME: [u64; 4] = [157, 2278, 235, 2200];

/// Lind's scurvy trial: recoveries vs non-recoveries, citrus arm first.
pub const LIND: [u64; 4] = [2, 0, 0, 10];

/// Lady tasting tea: correct vs incorrect classifications by true order.
pub const TEA: [u64; 4] = [4, 0, 0, 4];

/// Darwin's paired plant-height differences (cross-fertilized minus
/// self-fertilized), in eighths of an inch converted to inches.
pub const DARWIN_DIFFS: [f64; 15] = [
    6.125, -8.375, 1.000, 2.000, 0.750, 2.875, 3.500, 5.125, 1.750, 3.625, 7.000, 3.000, 9.375,
    7.500, -6.000,
];

/// Children's television workshop experiment, eight matched pairs of
/// classes: `(x_control, x_treated, y_control, y_treated)` where `x` is the
/// pre-test and `y` the post-test score.
pub const TV_PAIRS: [(f64, f64, f64, f64); 8] = [
    (12.9, 12.0, 54.6, 60.6),
    (15.1, 12.3, 56.5, 55.5),
    (16.8, 17.2, 75.2, 84.8),
    (15.8, 18.9, 75.6, 101.9),
    (13.9, 15.3, 55.3, 70.6),
    (14.5, 16.6, 59.3, 78.4),
    (17.0, 16.0, 87.0, 84.2),
    (15.8, 20.1, 73.7, 108.6),
];

/// Bladder-tumor mortality study stratified by cigarette smoking:
/// per stratum, `(treated survivors, treated deaths, control survivors,
/// control deaths)`.
pub const MEINERT_STRATA: [[u64; 4]; 2] = [[98, 8, 115, 5], [76, 22, 69, 16]];

/// Graduate admissions by department: per department
/// `(male admitted, male rejected, female admitted, female rejected)`.
pub const UCB_DEPARTMENTS: [[u64; 4]; 6] = [
    [512, 313, 89, 19],
    [353, 207, 17, 8],
    [120, 205, 202, 391],
    [138, 279, 131, 244],
    [53, 138, 94, 299],
    [22, 351, 24, 317],
];

/// Smoking and lung-cancer deaths: `(smoker deaths, smoker survivors,
/// nonsmoker deaths, nonsmoker survivors)`.
pub const HAMMOND: [u64; 4] = [397, 78_557, 51, 108_778];

/// Trial with truncation by death, per arm `(alive with Y = 1, alive with
/// Y = 0, dead)`: treated arm then control arm.
pub const ARDS_TREATED: [u64; 3] = [54, 268, 109];
/// Control-arm counts for the truncation-by-death trial.
pub const ARDS_CONTROL: [u64; 3] = [59, 218, 152];

/// Vitamin-supplementation encouragement trial, counts `n_{zdy}` in the
/// order `(111, 110, 101, 100, 011, 010, 001, 000)` for assignment `z`,
/// uptake `d`, survival `y`.
pub const IMPROVE: [u64; 8] = [107, 42, 68, 42, 24, 8, 131, 79];

/// Flu-vaccination encouragement trial, same `n_{zdy}` layout as
/// [`IMPROVE`].
pub const FLU: [u64; 8] = [31, 422, 84, 935, 30, 233, 99, 1027];

/// Vitamin A randomized encouragement trial, same `n_{zdy}` layout as
/// [`IMPROVE`]; the control arm had no access to treatment.
pub const SOMMER_ZEGER: [u64; 8] = [9663, 12, 2385, 34, 0, 0, 11_514, 74];

/// Build a [`TwoByTwo`] from a `[treated successes, treated failures,
/// control successes, control failures]` array.
pub fn two_by_two(counts: [u64; 4]) -> TwoByTwo {
    TwoByTwo {
        n11: counts[0],
        n10: counts[1],
        n01: counts[2],
        n00: counts[3],
    }
}

/// Treatment indicators and outcomes for the TV experiment laid out
/// unit-by-unit (treated member of each pair first).
pub fn tv_units() -> (Vec<bool>, Vec<f64>, Vec<f64>) {
    let mut z = Vec::new();
    let mut y = Vec::new();
    let mut x = Vec::new();
    for &(x_ctl, x_trt, y_ctl, y_trt) in &TV_PAIRS {
        z.push(true);
        x.push(x_trt);
        y.push(y_trt);
        z.push(false);
        x.push(x_ctl);
        y.push(y_ctl);
    }
    (z, y, x)
}

/// Treated-minus-control differences `(y_diffs, x_diffs)` for the TV pairs.
pub fn tv_diffs() -> (Vec<f64>, Vec<f64>) {
    TV_PAIRS
        .iter()
        .map(|&(x_ctl, x_trt, y_ctl, y_trt)| (y_trt - y_ctl, x_trt - x_ctl))
        .unzip()
}
