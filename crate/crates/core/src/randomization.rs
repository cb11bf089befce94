//! Randomization designs, test statistics, and Fisher randomization tests
//! (exact enumeration or Monte Carlo).
//!
//! Validated against R: rank statistics match `wilcox.test` conventions
//! (midranks for ties) and the matched-pairs enumeration reproduces the
//! printed exact p-values of the bundled examples.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::MatrixOf;
use crate::regress::{ols, CovKind};
use crate::report::{PValueMode, RandInferenceResult};
use crate::rng::replicate_rng;
use crate::special::kolmogorov_sf;
use crate::stats::{mean, midranks, sample_var, split_by_arm};

/// Default cap on the number of enumerated assignment vectors.
pub const ENUMERATION_CAP: u128 = 1 << 20;
/// Support size up to which [`FrtMode::Auto`] enumerates exactly.
pub const AUTO_EXACT_CAP: u128 = 1_000_000;
/// Default Monte Carlo replication count.
pub const DEFAULT_MC_REPS: u64 = 10_000;
/// Rejection-sampling cap for rerandomized designs.
pub const REM_REJECTION_CAP: u64 = 1_000_000;

/// A randomization design over `n` units.
#[derive(Debug, Clone)]
pub enum AssignmentDesign {
    /// Completely randomized: exactly `n1` treated of `n1 + n0`.
    Cre { n1: usize, n0: usize },
    /// Independent Bernoulli(`p`) coins for `n` units.
    Bernoulli { n: usize, p: f64 },
    /// Stratified: `membership[i]` is unit `i`'s stratum (0-based, dense),
    /// `treated[k]` the number treated within stratum `k`.
    Sre {
        membership: Vec<usize>,
        treated: Vec<usize>,
    },
    /// Matched pairs: `pairs[i]` is unit `i`'s pair id (0-based, dense, each
    /// appearing exactly twice); one unit per pair is treated.
    Mpe { pairs: Vec<usize> },
    /// Rerandomized: CRE draws accepted when the covariate Mahalanobis
    /// distance is at most `threshold`.
    Rem {
        n1: usize,
        n0: usize,
        x: MatrixOf<f64>,
        threshold: f64,
    },
}

impl AssignmentDesign {
    /// Number of units.
    pub fn n(&self) -> usize {
        match self {
            AssignmentDesign::Cre { n1, n0 } => n1 + n0,
            AssignmentDesign::Bernoulli { n, .. } => *n,
            AssignmentDesign::Sre { membership, .. } => membership.len(),
            AssignmentDesign::Mpe { pairs } => pairs.len(),
            AssignmentDesign::Rem { n1, n0, .. } => n1 + n0,
        }
    }

    /// Check internal consistency.
    pub fn validate(&self) -> Result<()> {
        match self {
            AssignmentDesign::Cre { n1, n0 } => {
                if *n1 == 0 || *n0 == 0 {
                    return Err(Error::invalid("CRE needs units in both arms"));
                }
            }
            AssignmentDesign::Bernoulli { n, p } => {
                if *n == 0 || !(*p > 0.0 && *p < 1.0) {
                    return Err(Error::invalid("Bernoulli design needs n > 0 and p in (0,1)"));
                }
            }
            AssignmentDesign::Sre { membership, treated } => {
                let k = treated.len();
                let mut sizes = vec![0usize; k];
                for &m in membership {
                    if m >= k {
                        return Err(Error::invalid("stratum index out of range"));
                    }
                    sizes[m] += 1;
                }
                for (s, (&size, &t)) in sizes.iter().zip(treated).enumerate() {
                    if t == 0 || t >= size {
                        return Err(Error::invalid(format!(
                            "stratum {s} needs 0 < treated < size (size {size}, treated {t})"
                        )));
                    }
                }
            }
            AssignmentDesign::Mpe { pairs } => {
                let p = pairs.iter().max().map_or(0, |m| m + 1);
                let mut sizes = vec![0usize; p];
                for &id in pairs {
                    sizes[id] += 1;
                }
                if pairs.is_empty() || sizes.iter().any(|&s| s != 2) {
                    return Err(Error::invalid("matched-pairs design needs pairs of exactly 2"));
                }
            }
            AssignmentDesign::Rem { n1, n0, x, threshold } => {
                if *n1 == 0 || *n0 == 0 || x.nrows() != n1 + n0 {
                    return Err(Error::invalid("rerandomized design shape mismatch"));
                }
                if !(*threshold > 0.0) {
                    return Err(Error::invalid("rerandomization threshold must be positive"));
                }
            }
        }
        Ok(())
    }

    /// Support size (number of distinct assignment vectors), when closed-form.
    ///
    /// `None` for rerandomized designs (depends on the acceptance region).
    pub fn support_size(&self) -> Option<u128> {
        fn choose(n: u128, k: u128) -> Option<u128> {
            let k = k.min(n - k);
            let mut acc: u128 = 1;
            for i in 0..k {
                acc = acc.checked_mul(n - i)?;
                acc /= i + 1;
            }
            Some(acc)
        }
        match self {
            AssignmentDesign::Cre { n1, n0 } => choose((n1 + n0) as u128, *n1 as u128),
            AssignmentDesign::Bernoulli { n, .. } => 1u128.checked_shl(*n as u32),
            AssignmentDesign::Sre { membership, treated } => {
                let mut sizes = vec![0u128; treated.len()];
                for &m in membership {
                    sizes[m] += 1;
                }
                let mut acc: u128 = 1;
                for (&size, &t) in sizes.iter().zip(treated) {
                    acc = acc.checked_mul(choose(size, t as u128)?)?;
                }
                Some(acc)
            }
            AssignmentDesign::Mpe { pairs } => {
                let p = pairs.iter().max().map_or(0, |m| m + 1);
                1u128.checked_shl(p as u32)
            }
            AssignmentDesign::Rem { .. } => None,
        }
    }

    /// Enumerate every assignment vector in the design's support.
    ///
    /// Errors when the support exceeds `cap` (use Monte Carlo instead) or has
    /// no closed form (rerandomization).
    pub fn enumerate_assignments(&self, cap: u128) -> Result<Vec<Vec<bool>>> {
        self.validate()?;
        let support = self.support_size().ok_or_else(|| {
            Error::invalid("rerandomized designs have no closed-form support; use Monte Carlo")
        })?;
        if support > cap {
            return Err(Error::EnumerationTooLarge { support, cap });
        }
        let n = self.n();
        match self {
            AssignmentDesign::Cre { n1, .. } => {
                let mut out = Vec::with_capacity(support as usize);
                let positions: Vec<usize> = (0..n).collect();
                combinations(&positions, *n1, &mut |chosen| {
                    let mut z = vec![false; n];
                    for &i in chosen {
                        z[i] = true;
                    }
                    out.push(z);
                });
                Ok(out)
            }
            AssignmentDesign::Bernoulli { .. } => {
                let mut out = Vec::with_capacity(support as usize);
                for code in 0..(1u128 << n) {
                    out.push((0..n).map(|i| (code >> i) & 1 == 1).collect());
                }
                Ok(out)
            }
            AssignmentDesign::Sre { membership, treated } => {
                // Per-stratum unit index lists.
                let k = treated.len();
                let mut units: Vec<Vec<usize>> = vec![Vec::new(); k];
                for (i, &m) in membership.iter().enumerate() {
                    units[m].push(i);
                }
                // Per-stratum choice lists, combined as a cartesian product.
                let mut per_stratum: Vec<Vec<Vec<usize>>> = Vec::with_capacity(k);
                for (s, stratum_units) in units.iter().enumerate() {
                    let mut choices = Vec::new();
                    combinations(stratum_units, treated[s], &mut |chosen| {
                        choices.push(chosen.to_vec());
                    });
                    per_stratum.push(choices);
                }
                let mut out = Vec::with_capacity(support as usize);
                let mut idx = vec![0usize; k];
                loop {
                    let mut z = vec![false; n];
                    for (s, &c) in idx.iter().enumerate() {
                        for &i in &per_stratum[s][c] {
                            z[i] = true;
                        }
                    }
                    out.push(z);
                    // Odometer increment.
                    let mut s = 0;
                    loop {
                        if s == k {
                            return Ok(out);
                        }
                        idx[s] += 1;
                        if idx[s] < per_stratum[s].len() {
                            break;
                        }
                        idx[s] = 0;
                        s += 1;
                    }
                }
            }
            AssignmentDesign::Mpe { pairs } => {
                let p = pairs.iter().max().map_or(0, |m| m + 1);
                // First and second unit of each pair, in appearance order.
                let mut first = vec![usize::MAX; p];
                let mut second = vec![usize::MAX; p];
                for (i, &id) in pairs.iter().enumerate() {
                    if first[id] == usize::MAX {
                        first[id] = i;
                    } else {
                        second[id] = i;
                    }
                }
                let mut out = Vec::with_capacity(support as usize);
                for code in 0..(1u128 << p) {
                    let mut z = vec![false; n];
                    for id in 0..p {
                        if (code >> id) & 1 == 1 {
                            z[first[id]] = true;
                        } else {
                            z[second[id]] = true;
                        }
                    }
                    out.push(z);
                }
                Ok(out)
            }
            AssignmentDesign::Rem { .. } => unreachable!(),
        }
    }

    /// Draw one assignment uniformly from the design's support.
    pub fn sample_assignment<R: Rng>(&self, rng: &mut R) -> Result<Vec<bool>> {
        let n = self.n();
        match self {
            AssignmentDesign::Cre { n1, .. } => {
                let mut idx: Vec<usize> = (0..n).collect();
                idx.shuffle(rng);
                let mut z = vec![false; n];
                for &i in idx.iter().take(*n1) {
                    z[i] = true;
                }
                Ok(z)
            }
            AssignmentDesign::Bernoulli { p, .. } => {
                Ok((0..n).map(|_| rng.gen::<f64>() < *p).collect())
            }
            AssignmentDesign::Sre { membership, treated } => {
                let k = treated.len();
                let mut units: Vec<Vec<usize>> = vec![Vec::new(); k];
                for (i, &m) in membership.iter().enumerate() {
                    units[m].push(i);
                }
                let mut z = vec![false; n];
                for (s, stratum_units) in units.iter().enumerate() {
                    let mut idx = stratum_units.clone();
                    idx.shuffle(rng);
                    for &i in idx.iter().take(treated[s]) {
                        z[i] = true;
                    }
                }
                Ok(z)
            }
            AssignmentDesign::Mpe { pairs } => {
                let p = pairs.iter().max().map_or(0, |m| m + 1);
                let flips: Vec<bool> = (0..p).map(|_| rng.gen::<bool>()).collect();
                let mut seen = vec![false; p];
                let mut z = vec![false; n];
                for (i, &id) in pairs.iter().enumerate() {
                    if !seen[id] {
                        seen[id] = true;
                        z[i] = flips[id];
                    } else {
                        z[i] = !flips[id];
                    }
                }
                Ok(z)
            }
            AssignmentDesign::Rem { n1, n0, x, threshold } => {
                let inner = AssignmentDesign::Cre { n1: *n1, n0: *n0 };
                for _ in 0..REM_REJECTION_CAP {
                    let z = inner.sample_assignment(rng)?;
                    if mahalanobis(&z, x)? <= *threshold {
                        return Ok(z);
                    }
                }
                Err(Error::degenerate(format!(
                    "rerandomization rejected {REM_REJECTION_CAP} consecutive draws; threshold too small"
                )))
            }
        }
    }
}

/// Visit all `k`-subsets of `items` in lexicographic order.
fn combinations<T: Copy>(items: &[T], k: usize, visit: &mut impl FnMut(&[T])) {
    fn rec<T: Copy>(items: &[T], k: usize, start: usize, acc: &mut Vec<T>, visit: &mut impl FnMut(&[T])) {
        if acc.len() == k {
            visit(acc);
            return;
        }
        let needed = k - acc.len();
        for i in start..=items.len().saturating_sub(needed) {
            acc.push(items[i]);
            rec(items, k, i + 1, acc, visit);
            acc.pop();
        }
    }
    if k <= items.len() {
        rec(items, k, 0, &mut Vec::with_capacity(k), visit);
    }
}

/// Mahalanobis distance between arm-wise covariate means:
/// `M = tau_x' [ (n/(n1 n0)) S_x^2 ]^{-1} tau_x`.
pub fn mahalanobis(z: &[bool], x: &MatrixOf<f64>) -> Result<f64> {
    let n = x.nrows();
    let p = x.ncols();
    if z.len() != n {
        return Err(Error::invalid("assignment/covariate length mismatch"));
    }
    let n1 = z.iter().filter(|&&b| b).count();
    let n0 = n - n1;
    if n1 == 0 || n0 == 0 {
        return Err(Error::degenerate("an arm is empty"));
    }
    // Arm-wise mean difference per column.
    let mut tau = vec![0.0; p];
    for j in 0..p {
        let col = x.column(j);
        let (one, zero) = split_by_arm(&col, z);
        tau[j] = mean(&one)? - mean(&zero)?;
    }
    // Whole-sample covariance matrix (n-1 denominator).
    let mut means = vec![0.0; p];
    for (j, m) in means.iter_mut().enumerate() {
        *m = mean(&x.column(j))?;
    }
    let mut s = MatrixOf::zeros(p, p);
    for i in 0..n {
        let row = x.row(i);
        for a in 0..p {
            for b in 0..p {
                s[(a, b)] += (row[a] - means[a]) * (row[b] - means[b]);
            }
        }
    }
    let denom = (n - 1) as f64;
    let scale = n as f64 / (n1 as f64 * n0 as f64);
    for a in 0..p {
        for b in 0..p {
            s[(a, b)] = s[(a, b)] / denom * scale;
        }
    }
    let sol = crate::linalg::solve(&s, &tau)?;
    Ok(tau.iter().zip(&sol).map(|(a, b)| a * b).sum::<f64>().max(0.0))
}

/// Weighting variant for the combined stratified rank-sum statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VanElterenWeight {
    /// `c_k = 1/(n_k1 n_k0)` (default).
    InverseProduct,
    /// `c_k = 1/(n_k + 1)`.
    InverseSizePlusOne,
}

/// Variant of the stratified Kolmogorov–Smirnov statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StratKsVariant {
    /// `sum_k c_k D_k` with `c_k = sqrt(n_k1 n_k0 / n_k)`.
    WeightedSum,
    /// `max_k c_k D_k`.
    Max,
    /// `max_y |sum_k pi_k (F_k1(y) - F_k0(y))|`.
    Pooled,
}

/// Test statistic for the Fisher randomization test.
#[derive(Debug, Clone)]
pub enum Statistic {
    /// Difference in arm means.
    DiffMeans,
    /// Unequal-variance (Welch) t statistic.
    StudentT,
    /// Wilcoxon rank sum of the treated (midranks for ties).
    Wilcoxon,
    /// Two-sample Kolmogorov–Smirnov distance.
    Ks,
    /// Stratified difference estimator `sum_k pi_k tau_k`.
    StratDiff,
    /// Studentized stratified estimator.
    StratT,
    /// Combined within-stratum rank sums.
    VanElteren(VanElterenWeight),
    /// Rank sum of the treated after within-stratum centering.
    AlignedRank,
    /// Stratified Kolmogorov–Smirnov statistic.
    StratKs(StratKsVariant),
    /// Mean of within-pair differences.
    PairMean,
    /// t statistic of the within-pair difference mean.
    PairT,
    /// Wilcoxon signed rank: `sum_{diff > 0} rank(|diff|)`.
    SignRank,
    /// Number of positive within-pair differences.
    Sign,
    /// Discordant-pair count (binary outcomes; equals the sign statistic).
    McNemar,
    /// Symmetry-based Kolmogorov–Smirnov statistic on pair differences.
    ButlerKs,
    /// Studentized covariate-interacted (Lin) estimator.
    LinT,
    /// Model-output statistic: CRE — treatment coefficient in an additive
    /// OLS; MPE — intercept t of the pair-difference regression on
    /// pair covariate differences.
    RegressionCoef,
    /// Pseudo-outcome strategy: residualize the outcome on the covariates,
    /// then apply the inner statistic to the residuals.
    PseudoOutcome(Box<Statistic>),
}

/// Data context a statistic is evaluated in.
#[derive(Debug, Clone, Copy)]
pub struct FrtContext<'a> {
    /// Outcomes.
    pub y: &'a [f64],
    /// Covariates (no intercept column), when a statistic needs them.
    pub x: Option<&'a MatrixOf<f64>>,
    /// Stratum index per unit (dense, 0-based).
    pub strata: Option<&'a [usize]>,
    /// Pair index per unit (dense, 0-based, two units each).
    pub pairs: Option<&'a [usize]>,
}

fn arm_counts(z: &[bool]) -> (usize, usize) {
    let n1 = z.iter().filter(|&&b| b).count();
    (n1, z.len() - n1)
}

fn diff_means(z: &[bool], y: &[f64]) -> Result<f64> {
    let (one, zero) = split_by_arm(y, z);
    Ok(mean(&one)? - mean(&zero)?)
}

fn welch_t(z: &[bool], y: &[f64]) -> Result<f64> {
    let (one, zero) = split_by_arm(y, z);
    let v = sample_var(&one)? / one.len() as f64 + sample_var(&zero)? / zero.len() as f64;
    if v <= 0.0 {
        return Err(Error::degenerate("zero variance in studentized statistic"));
    }
    Ok((mean(&one)? - mean(&zero)?) / v.sqrt())
}

fn rank_sum(z: &[bool], y: &[f64]) -> f64 {
    let r = midranks(y);
    r.iter().zip(z).filter(|(_, &zi)| zi).map(|(&ri, _)| ri).sum()
}

/// Two-sample KS distance `max_t |F1(t) - F0(t)|`.
fn ks_distance(z: &[bool], y: &[f64]) -> Result<f64> {
    let (mut one, mut zero) = split_by_arm(y, z);
    if one.is_empty() || zero.is_empty() {
        return Err(Error::degenerate("an arm is empty"));
    }
    one.sort_by(|a, b| a.partial_cmp(b).unwrap());
    zero.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n1 = one.len() as f64;
    let n0 = zero.len() as f64;
    let mut d: f64 = 0.0;
    let (mut i, mut j) = (0usize, 0usize);
    while i < one.len() || j < zero.len() {
        let t = match (one.get(i), zero.get(j)) {
            (Some(&a), Some(&b)) => a.min(b),
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => break,
        };
        while i < one.len() && one[i] <= t {
            i += 1;
        }
        while j < zero.len() && zero[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n1 - j as f64 / n0).abs());
    }
    Ok(d)
}

/// Group units by stratum; errors on units with no stratum context.
fn stratum_units(ctx: &FrtContext) -> Result<Vec<Vec<usize>>> {
    let strata = ctx
        .strata
        .ok_or_else(|| Error::invalid("statistic requires stratum information"))?;
    let k = strata.iter().max().map_or(0, |m| m + 1);
    let mut units = vec![Vec::new(); k];
    for (i, &s) in strata.iter().enumerate() {
        units[s].push(i);
    }
    Ok(units)
}

/// Within-pair differences (treated minus control), zero differences dropped.
pub fn pair_differences(z: &[bool], y: &[f64], pairs: &[usize]) -> Result<Vec<f64>> {
    let p = pairs.iter().max().map_or(0, |m| m + 1);
    let mut treated = vec![f64::NAN; p];
    let mut control = vec![f64::NAN; p];
    for (i, &id) in pairs.iter().enumerate() {
        if z[i] {
            treated[id] = y[i];
        } else {
            control[id] = y[i];
        }
    }
    let mut diffs = Vec::with_capacity(p);
    for id in 0..p {
        if treated[id].is_nan() || control[id].is_nan() {
            return Err(Error::invalid(format!(
                "pair {id} does not have exactly one treated and one control unit"
            )));
        }
        diffs.push(treated[id] - control[id]);
    }
    Ok(diffs)
}

fn nonzero(diffs: &[f64]) -> Vec<f64> {
    diffs.iter().copied().filter(|&d| d != 0.0).collect()
}

fn pair_ctx_diffs(z: &[bool], ctx: &FrtContext) -> Result<Vec<f64>> {
    let pairs = ctx
        .pairs
        .ok_or_else(|| Error::invalid("statistic requires pair information"))?;
    pair_differences(z, ctx.y, pairs)
}

/// Evaluate a test statistic for assignment `z` in the given context.
pub fn compute_statistic(stat: &Statistic, z: &[bool], ctx: &FrtContext) -> Result<f64> {
    match stat {
        Statistic::DiffMeans => diff_means(z, ctx.y),
        Statistic::StudentT => welch_t(z, ctx.y),
        Statistic::Wilcoxon => Ok(rank_sum(z, ctx.y)),
        Statistic::Ks => ks_distance(z, ctx.y),
        Statistic::StratDiff | Statistic::StratT => {
            let units = stratum_units(ctx)?;
            let n = ctx.y.len() as f64;
            let mut est = 0.0;
            let mut var = 0.0;
            for stratum in &units {
                let zk: Vec<bool> = stratum.iter().map(|&i| z[i]).collect();
                let yk: Vec<f64> = stratum.iter().map(|&i| ctx.y[i]).collect();
                let pik = yk.len() as f64 / n;
                let (one, zero) = split_by_arm(&yk, &zk);
                if one.is_empty() || zero.is_empty() {
                    return Err(Error::degenerate("stratum with an empty arm"));
                }
                est += pik * (mean(&one)? - mean(&zero)?);
                if matches!(stat, Statistic::StratT) {
                    var += pik * pik
                        * (sample_var(&one)? / one.len() as f64
                            + sample_var(&zero)? / zero.len() as f64);
                }
            }
            match stat {
                Statistic::StratDiff => Ok(est),
                _ => {
                    if var <= 0.0 {
                        return Err(Error::degenerate("zero variance in studentized statistic"));
                    }
                    Ok(est / var.sqrt())
                }
            }
        }
        Statistic::VanElteren(weight) => {
            let units = stratum_units(ctx)?;
            let mut total = 0.0;
            for stratum in &units {
                let zk: Vec<bool> = stratum.iter().map(|&i| z[i]).collect();
                let yk: Vec<f64> = stratum.iter().map(|&i| ctx.y[i]).collect();
                let (n1, n0) = arm_counts(&zk);
                if n1 == 0 || n0 == 0 {
                    return Err(Error::degenerate("stratum with an empty arm"));
                }
                let c = match weight {
                    VanElterenWeight::InverseProduct => 1.0 / (n1 as f64 * n0 as f64),
                    VanElterenWeight::InverseSizePlusOne => 1.0 / (yk.len() as f64 + 1.0),
                };
                total += c * rank_sum(&zk, &yk);
            }
            Ok(total)
        }
        Statistic::AlignedRank => {
            let units = stratum_units(ctx)?;
            let mut aligned = ctx.y.to_vec();
            for stratum in &units {
                let yk: Vec<f64> = stratum.iter().map(|&i| ctx.y[i]).collect();
                let m = mean(&yk)?;
                for &i in stratum {
                    aligned[i] -= m;
                }
            }
            Ok(rank_sum(z, &aligned))
        }
        Statistic::StratKs(variant) => {
            let units = stratum_units(ctx)?;
            let n = ctx.y.len() as f64;
            match variant {
                StratKsVariant::WeightedSum | StratKsVariant::Max => {
                    let mut acc: f64 = 0.0;
                    for stratum in &units {
                        let zk: Vec<bool> = stratum.iter().map(|&i| z[i]).collect();
                        let yk: Vec<f64> = stratum.iter().map(|&i| ctx.y[i]).collect();
                        let (n1, n0) = arm_counts(&zk);
                        let c = (n1 as f64 * n0 as f64 / yk.len() as f64).sqrt();
                        let term = c * ks_distance(&zk, &yk)?;
                        acc = match variant {
                            StratKsVariant::WeightedSum => acc + term,
                            _ => acc.max(term),
                        };
                    }
                    Ok(acc)
                }
                StratKsVariant::Pooled => {
                    // max_y |sum_k pi_k (F_k1 - F_k0)| over observed outcomes.
                    let mut points: Vec<f64> = ctx.y.to_vec();
                    points.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    points.dedup();
                    let mut best: f64 = 0.0;
                    for &t in &points {
                        let mut sum = 0.0;
                        for stratum in &units {
                            let pik = stratum.len() as f64 / n;
                            let (mut c1, mut t1, mut c0, mut t0) = (0.0, 0.0, 0.0, 0.0);
                            for &i in stratum {
                                if z[i] {
                                    t1 += 1.0;
                                    if ctx.y[i] <= t {
                                        c1 += 1.0;
                                    }
                                } else {
                                    t0 += 1.0;
                                    if ctx.y[i] <= t {
                                        c0 += 1.0;
                                    }
                                }
                            }
                            if t1 == 0.0 || t0 == 0.0 {
                                return Err(Error::degenerate("stratum with an empty arm"));
                            }
                            sum += pik * (c1 / t1 - c0 / t0);
                        }
                        best = best.max(sum.abs());
                    }
                    Ok(best)
                }
            }
        }
        Statistic::PairMean => {
            let diffs = nonzero(&pair_ctx_diffs(z, ctx)?);
            mean(&diffs)
        }
        Statistic::PairT => {
            let diffs = nonzero(&pair_ctx_diffs(z, ctx)?);
            let m = diffs.len() as f64;
            let v = sample_var(&diffs)? / m;
            if v <= 0.0 {
                return Err(Error::degenerate("zero variance in studentized statistic"));
            }
            Ok(mean(&diffs)? / v.sqrt())
        }
        Statistic::SignRank => {
            let diffs = nonzero(&pair_ctx_diffs(z, ctx)?);
            let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
            let ranks = midranks(&abs);
            Ok(diffs
                .iter()
                .zip(&ranks)
                .filter(|(&d, _)| d > 0.0)
                .map(|(_, &r)| r)
                .sum())
        }
        Statistic::Sign | Statistic::McNemar => {
            let diffs = nonzero(&pair_ctx_diffs(z, ctx)?);
            Ok(diffs.iter().filter(|&&d| d > 0.0).count() as f64)
        }
        Statistic::ButlerKs => {
            let diffs = pair_ctx_diffs(z, ctx)?;
            let n = diffs.len() as f64;
            // max_t |F(t) + F(-t-) - 1| over candidate jump points.
            let mut candidates: Vec<f64> = diffs.iter().flat_map(|&d| [d, -d]).collect();
            candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
            candidates.dedup();
            let mut best: f64 = 0.0;
            for &t in &candidates {
                let le = diffs.iter().filter(|&&d| d <= t).count() as f64;
                let lt_neg = diffs.iter().filter(|&&d| d < -t).count() as f64;
                best = best.max((le / n + lt_neg / n - 1.0).abs());
                // Left limit at t.
                let lt = diffs.iter().filter(|&&d| d < t).count() as f64;
                let le_neg = diffs.iter().filter(|&&d| d <= -t).count() as f64;
                best = best.max((lt / n + le_neg / n - 1.0).abs());
            }
            Ok(best)
        }
        Statistic::LinT => {
            let x = ctx
                .x
                .ok_or_else(|| Error::invalid("statistic requires covariates"))?;
            let report = crate::design::lin_adjust_parts(z, ctx.y, x)?;
            if report.1 <= 0.0 {
                return Err(Error::degenerate("zero variance in studentized statistic"));
            }
            Ok(report.0 / report.1)
        }
        Statistic::RegressionCoef => {
            if let Some(pairs) = ctx.pairs {
                // Matched pairs: intercept t of the pair-difference
                // regression on pair covariate differences (model-based SE).
                let x = ctx
                    .x
                    .ok_or_else(|| Error::invalid("statistic requires covariates"))?;
                let diffs = pair_differences(z, ctx.y, pairs)?;
                let xdiffs = pair_covariate_differences(z, x, pairs)?;
                let (est, se) = mpe_adjusted_parts(&diffs, &xdiffs)?;
                if se <= 0.0 {
                    return Err(Error::degenerate("zero variance in studentized statistic"));
                }
                Ok(est / se)
            } else {
                // CRE: treatment coefficient in an additive OLS.
                let x = ctx
                    .x
                    .ok_or_else(|| Error::invalid("statistic requires covariates"))?;
                let n = ctx.y.len();
                let zf: Vec<f64> = z.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
                let mut cols = vec![vec![1.0; n], zf];
                for j in 0..x.ncols() {
                    cols.push(x.column(j));
                }
                let fit = ols(&MatrixOf::from_columns(&cols), ctx.y)?;
                Ok(fit.coefficients[1])
            }
        }
        Statistic::PseudoOutcome(inner) => {
            let x = ctx
                .x
                .ok_or_else(|| Error::invalid("statistic requires covariates"))?;
            let n = ctx.y.len();
            let mut cols = vec![vec![1.0; n]];
            for j in 0..x.ncols() {
                cols.push(x.column(j));
            }
            let resid = ols(&MatrixOf::from_columns(&cols), ctx.y)?.residuals;
            let inner_ctx = FrtContext {
                y: &resid,
                x: None,
                strata: ctx.strata,
                pairs: ctx.pairs,
            };
            compute_statistic(inner, z, &inner_ctx)
        }
    }
}

/// Within-pair covariate differences aligned with [`pair_differences`].
pub fn pair_covariate_differences(
    z: &[bool],
    x: &MatrixOf<f64>,
    pairs: &[usize],
) -> Result<Vec<Vec<f64>>> {
    let p = pairs.iter().max().map_or(0, |m| m + 1);
    let mut out = vec![vec![0.0; x.ncols()]; p];
    let mut seen_t = vec![false; p];
    let mut seen_c = vec![false; p];
    for (i, &id) in pairs.iter().enumerate() {
        let sign = if z[i] {
            seen_t[id] = true;
            1.0
        } else {
            seen_c[id] = true;
            -1.0
        };
        for j in 0..x.ncols() {
            out[id][j] += sign * x[(i, j)];
        }
    }
    for id in 0..p {
        if !seen_t[id] || !seen_c[id] {
            return Err(Error::invalid(format!(
                "pair {id} does not have exactly one treated and one control unit"
            )));
        }
    }
    Ok(out)
}

/// Intercept estimate and model-based SE of the regression of pair differences
/// on pair covariate differences (with intercept).
pub fn mpe_adjusted_parts(diffs: &[f64], xdiffs: &[Vec<f64>]) -> Result<(f64, f64)> {
    let n = diffs.len();
    let p = xdiffs.first().map_or(0, |r| r.len());
    let mut cols = vec![vec![1.0; n]];
    for j in 0..p {
        cols.push(xdiffs.iter().map(|r| r[j]).collect());
    }
    let fit = ols(&MatrixOf::from_columns(&cols), diffs)?;
    let se = fit.std_errors(CovKind::Model)[0];
    Ok((fit.coefficients[0], se))
}

/// How the randomization p-value is computed.
#[derive(Debug, Clone, Copy)]
pub enum FrtMode {
    /// Full enumeration of the support.
    Exact,
    /// `r` Monte Carlo draws.
    MonteCarlo { r: u64 },
    /// Exact when the support is at most [`AUTO_EXACT_CAP`], else Monte Carlo
    /// with [`DEFAULT_MC_REPS`] draws.
    Auto,
}

/// Sidedness of the randomization test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrtSide {
    /// Upper tail of the statistic (default).
    UpperTail,
    /// Two-sided via `|T - center|`, with `center` the statistic's known null
    /// mean (0 when unknown).
    TwoSided,
}

/// Null mean of a statistic when known in closed form (for two-sided tests).
fn null_center(stat: &Statistic, z: &[bool], ctx: &FrtContext) -> f64 {
    match stat {
        Statistic::Wilcoxon => {
            let (n1, n0) = arm_counts(z);
            let n = n1 + n0;
            n1 as f64 * (n as f64 + 1.0) / 2.0
        }
        Statistic::Sign | Statistic::McNemar => {
            if let Ok(diffs) = pair_ctx_diffs(z, ctx) {
                nonzero(&diffs).len() as f64 / 2.0
            } else {
                0.0
            }
        }
        Statistic::SignRank => {
            if let Ok(diffs) = pair_ctx_diffs(z, ctx) {
                let m = nonzero(&diffs).len() as f64;
                m * (m + 1.0) / 4.0
            } else {
                0.0
            }
        }
        _ => 0.0,
    }
}

/// Fisher randomization test of the sharp null.
///
/// `seed` is required in Monte Carlo mode and ignored in exact mode.
pub fn frt(
    design: &AssignmentDesign,
    stat: &Statistic,
    z_obs: &[bool],
    ctx: &FrtContext,
    mode: FrtMode,
    side: FrtSide,
    seed: Option<u64>,
) -> Result<RandInferenceResult> {
    design.validate()?;
    if z_obs.len() != design.n() || ctx.y.len() != design.n() {
        return Err(Error::invalid("assignment/outcome/design length mismatch"));
    }
    let raw_obs = compute_statistic(stat, z_obs, ctx)?;
    let center = match side {
        FrtSide::UpperTail => 0.0,
        FrtSide::TwoSided => null_center(stat, z_obs, ctx),
    };
    let transform = |t: f64| match side {
        FrtSide::UpperTail => t,
        FrtSide::TwoSided => (t - center).abs(),
    };
    let t_obs = transform(raw_obs);
    // Relative slack so that bit-identical recomputations always count.
    let slack = 1e-12 * (1.0 + t_obs.abs());

    let use_exact = match mode {
        FrtMode::Exact => true,
        FrtMode::MonteCarlo { .. } => false,
        FrtMode::Auto => design
            .support_size()
            .is_some_and(|s| s <= AUTO_EXACT_CAP),
    };

    if use_exact {
        let assignments = design.enumerate_assignments(ENUMERATION_CAP.max(AUTO_EXACT_CAP))?;
        let m = assignments.len() as u64;
        let count = assignments
            .par_iter()
            .map(|z| {
                compute_statistic(stat, z, ctx)
                    .map(|t| u64::from(transform(t) >= t_obs - slack))
            })
            .try_reduce(|| 0u64, |a, b| Ok(a + b))?;
        let p = count as f64 / m as f64;
        Ok(RandInferenceResult {
            observed: raw_obs,
            replications: m,
            mode: PValueMode::Exact,
            p_value: p,
            p_value_valid: p,
            mc_se: 0.0,
        })
    } else {
        let r = match mode {
            FrtMode::MonteCarlo { r } => r,
            _ => DEFAULT_MC_REPS,
        };
        let seed = seed.ok_or_else(|| Error::invalid("Monte Carlo FRT requires a seed"))?;
        let count = (0..r)
            .into_par_iter()
            .map(|rep| {
                let mut rng = replicate_rng(seed, rep);
                let z = design.sample_assignment(&mut rng)?;
                compute_statistic(stat, &z, ctx)
                    .map(|t| u64::from(transform(t) >= t_obs - slack))
            })
            .try_reduce(|| 0u64, |a, b| Ok(a + b))?;
        let p_hat = count as f64 / r as f64;
        Ok(RandInferenceResult {
            observed: raw_obs,
            replications: r,
            mode: PValueMode::MonteCarlo,
            p_value: p_hat,
            p_value_valid: (1.0 + count as f64) / (1.0 + r as f64),
            mc_se: (p_hat * (1.0 - p_hat) / r as f64).sqrt(),
        })
    }
}

/// Asymptotic upper-tail p-value of the two-sample KS statistic `d`:
/// `pr(K > sqrt(n1 n0 / n) d)` under the Kolmogorov limit law.
pub fn ks_asymptotic_pvalue(d: f64, n1: usize, n0: usize) -> f64 {
    let n = (n1 + n0) as f64;
    let scale = (n1 as f64 * n0 as f64 / n).sqrt();
    kolmogorov_sf(scale * d)
}
