//! Label-permutation tests of an ordered association.
//!
//! Values are expected to be oriented so that the hypothesis predicts larger
//! values at larger labels; the tests are one-sided in that direction.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::correlation::pearson_unchecked;
use super::rank::{average_ranks, for_each_permutation};
use crate::error::{Error, Result};
use crate::rng::substream;

/// Shuffles drawn from one substream.
pub const BLOCK: u64 = 4096;

/// Largest n accepted by the exhaustive mode.
pub const EXHAUSTIVE_MAX_N: usize = 10;

const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestStatistic {
    /// Spearman ρ between labels and values.
    Spearman,
    /// Number of adjacent label groups whose mean value increases.
    Monotonicity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PermutationResult {
    pub observed: f64,
    pub p: f64,
    /// Shuffles drawn, or permutations enumerated in exhaustive mode.
    pub n_shuffles: u64,
    pub exhaustive: bool,
}

/// Count of adjacent (sorted distinct label) group pairs whose mean value
/// strictly increases.
pub fn monotonicity_statistic(values: &[f64], labels: &[f64]) -> Result<f64> {
    let prep = Prepared::new(values, labels, TestStatistic::Monotonicity)?;
    Ok(prep.eval(&prep.labels))
}

struct Prepared {
    statistic: TestStatistic,
    values: Vec<f64>,
    /// Label ranks for Spearman, group indices for monotonicity.
    labels: Vec<f64>,
    n_groups: usize,
}

impl Prepared {
    fn new(values: &[f64], labels: &[f64], statistic: TestStatistic) -> Result<Self> {
        if values.len() != labels.len() {
            return Err(Error::InvalidArgument(format!("{} values for {} labels", values.len(), labels.len())));
        }
        if values.iter().chain(labels).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite input".into()));
        }
        let mut distinct = labels.to_vec();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        if distinct.len() < 2 {
            return Err(Error::InvalidArgument("permutation test needs at least 2 distinct labels".into()));
        }
        Ok(match statistic {
            TestStatistic::Spearman => {
                let v = average_ranks(values);
                if v.iter().all(|r| *r == v[0]) {
                    return Err(Error::Undefined("Spearman correlation of a constant vector".into()));
                }
                Prepared { statistic, values: v, labels: average_ranks(labels), n_groups: distinct.len() }
            }
            TestStatistic::Monotonicity => {
                let groups = labels
                    .iter()
                    .map(|l| distinct.iter().position(|d| d == l).expect("label is in its own set") as f64)
                    .collect();
                Prepared { statistic, values: values.to_vec(), labels: groups, n_groups: distinct.len() }
            }
        })
    }

    fn eval(&self, labels: &[f64]) -> f64 {
        match self.statistic {
            TestStatistic::Spearman => pearson_unchecked(labels, &self.values).expect("both inputs vary"),
            TestStatistic::Monotonicity => {
                let mut sums = vec![(0.0, 0usize); self.n_groups];
                for (g, v) in labels.iter().zip(&self.values) {
                    let s = &mut sums[*g as usize];
                    s.0 += v;
                    s.1 += 1;
                }
                let means: Vec<f64> = sums.iter().map(|(s, n)| s / *n as f64).collect();
                means.windows(2).filter(|w| w[1] > w[0]).count() as f64
            }
        }
    }
}

/// Monte-Carlo permutation test with the add-one estimator
/// p = (1 + #{T* ≥ T}) / (1 + n_shuffles).
///
/// Shuffles are drawn in blocks of [`BLOCK`], block `b` from substream `b`
/// of `seed`, so the result does not depend on the thread count.
pub fn permutation_test(
    values: &[f64],
    labels: &[f64],
    statistic: TestStatistic,
    n_shuffles: u64,
    seed: u64,
) -> Result<PermutationResult> {
    if n_shuffles == 0 {
        return Err(Error::InvalidArgument("n_shuffles must be >= 1".into()));
    }
    let prep = Prepared::new(values, labels, statistic)?;
    let observed = prep.eval(&prep.labels);
    let threshold = observed - TIE_TOL;
    let n_blocks = n_shuffles.div_ceil(BLOCK);
    let hits: u64 = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(seed, b);
            let mut perm = prep.labels.clone();
            let len = BLOCK.min(n_shuffles - b * BLOCK);
            let mut hits = 0u64;
            for _ in 0..len {
                perm.shuffle(&mut rng);
                if prep.eval(&perm) >= threshold {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    Ok(PermutationResult { observed, p: (1 + hits) as f64 / (1 + n_shuffles) as f64, n_shuffles, exhaustive: false })
}

/// Exact permutation p-value by enumerating every label arrangement.
pub fn exhaustive_permutation_test(
    values: &[f64],
    labels: &[f64],
    statistic: TestStatistic,
) -> Result<PermutationResult> {
    if values.len() > EXHAUSTIVE_MAX_N {
        return Err(Error::InvalidArgument(format!(
            "exhaustive permutation test supports n <= {EXHAUSTIVE_MAX_N}, got {}",
            values.len()
        )));
    }
    let prep = Prepared::new(values, labels, statistic)?;
    let observed = prep.eval(&prep.labels);
    let threshold = observed - TIE_TOL;
    let (mut hits, mut total) = (0u64, 0u64);
    for_each_permutation(&prep.labels, |perm| {
        total += 1;
        if prep.eval(perm) >= threshold {
            hits += 1;
        }
    });
    Ok(PermutationResult { observed, p: hits as f64 / total as f64, n_shuffles: total, exhaustive: true })
}
