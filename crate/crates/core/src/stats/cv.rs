//! Random feature-partition cross-validation of the depth–decay correlation.

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bootstrap::quantile_type7;
use super::correlation::spearman_rho;
use crate::error::{Error, Result};
use crate::rng::substream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvSummary {
    pub median_test_rho: f64,
    /// Fraction of evaluable splits with test ρ > 0.
    pub fraction_positive: f64,
    pub n_splits: usize,
    /// Splits whose test ρ was undefined (constant depth or decay).
    pub n_skipped: usize,
    pub test_size: usize,
}

/// Draw `n_splits` random partitions with `train_frac` of the features in
/// the training part and report Spearman ρ(x, y) on the held-out part.
/// Split `k` uses substream `k` of `seed`.
pub fn split_half_cv(x: &[f64], y: &[f64], train_frac: f64, n_splits: usize, seed: u64) -> Result<CvSummary> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument("length mismatch".into()));
    }
    let n = x.len();
    if n < 5 {
        return Err(Error::InsufficientData(format!("split-half CV needs >= 5 features, got {n}")));
    }
    if !(train_frac > 0.0 && train_frac < 1.0) || n_splits == 0 {
        return Err(Error::InvalidArgument("train_frac must be in (0, 1) and n_splits >= 1".into()));
    }
    let n_train = ((n as f64 * train_frac).round() as usize).clamp(1, n - 2);
    let test_size = n - n_train;
    let rhos: Vec<Option<f64>> = (0..n_splits)
        .into_par_iter()
        .map(|k| {
            let mut rng = substream(seed, k as u64);
            let train = index::sample(&mut rng, n, n_train).into_vec();
            let mut is_train = vec![false; n];
            for i in train {
                is_train[i] = true;
            }
            let (tx, ty): (Vec<f64>, Vec<f64>) = (0..n).filter(|&i| !is_train[i]).map(|i| (x[i], y[i])).unzip();
            spearman_rho(&tx, &ty).ok()
        })
        .collect();
    let mut ok: Vec<f64> = rhos.into_iter().flatten().collect();
    let n_skipped = n_splits - ok.len();
    if ok.is_empty() {
        return Err(Error::Undefined("test ρ undefined on every split".into()));
    }
    let positive = ok.iter().filter(|r| **r > 0.0).count() as f64 / ok.len() as f64;
    ok.sort_by(f64::total_cmp);
    Ok(CvSummary {
        median_test_rho: quantile_type7(&ok, 0.5),
        fraction_positive: positive,
        n_splits,
        n_skipped,
        test_size,
    })
}
