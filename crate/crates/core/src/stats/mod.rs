//! Inference battery: rank correlations, resampling tests, effect sizes,
//! combination rules and the pooled regression models.

pub mod bootstrap;
pub mod combine;
pub mod concordance;
pub mod correlation;
pub mod cv;
pub mod effect;
pub mod mixed;
pub mod ols;
pub mod permutation;
pub mod pooled;
pub mod rank;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

pub use bootstrap::{cluster_bootstrap, per_feature_bootstrap, quantile_type7, BootstrapCi, FeatureCi};
pub use combine::{fisher_combine, holm_adjust, FisherResult};
pub use concordance::kendall_w;
pub use correlation::{
    leave_one_out, partial_spearman, pearson, spearman, spearman_rho, steiger_z, Correlation, LeaveOneOut,
};
pub use cv::{split_half_cv, CvSummary};
pub use effect::{cohens_d, mann_whitney, MannWhitney};
pub use mixed::{lr_test, mixed_effects_fit, LrTest, MixedFit, MixedFormula};
pub use ols::{ols_cluster_robust, ols_robust, ClusterBy, OlsCovariate, OlsFit, RobustKind};
pub use permutation::{
    exhaustive_permutation_test, monotonicity_statistic, permutation_test, PermutationResult, TestStatistic,
};
pub use pooled::{PooledPanel, PooledRow};
pub use rank::average_ranks;

/// One reported statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatResult {
    pub name: String,
    /// SHA-256 of the canonical inputs the statistic was computed from.
    pub inputs_hash: String,
    pub seed: Option<u64>,
    pub estimate: f64,
    pub p_value: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub n: usize,
    pub notes: String,
}

impl StatResult {
    pub fn new(name: impl Into<String>, estimate: f64, n: usize) -> Self {
        StatResult {
            name: name.into(),
            inputs_hash: String::new(),
            seed: None,
            estimate,
            p_value: None,
            ci_low: None,
            ci_high: None,
            n,
            notes: String::new(),
        }
    }

    pub fn p(mut self, p: f64) -> Self {
        self.p_value = Some(p);
        self
    }

    pub fn ci(mut self, low: f64, high: f64) -> Self {
        self.ci_low = Some(low);
        self.ci_high = Some(high);
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn notes(mut self, notes: impl Into<String>) -> Self {
        self.notes = notes.into();
        self
    }

    pub fn inputs(mut self, hash: impl Into<String>) -> Self {
        self.inputs_hash = hash.into();
        self
    }
}

/// Clamp a p-value into (0, 1].
pub(crate) fn clamp_p(p: f64) -> f64 {
    if p.is_nan() {
        return 1.0;
    }
    p.clamp(f64::MIN_POSITIVE, 1.0)
}

/// Two-sided p from a standard normal z.
pub(crate) fn normal_two_sided(z: f64) -> f64 {
    let n = Normal::standard();
    clamp_p(2.0 * n.sf(z.abs()))
}

/// Two-sided p from a t statistic.
pub(crate) fn t_two_sided(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return f64::MIN_POSITIVE;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    clamp_p(2.0 * dist.sf(t.abs()))
}

/// One-sided upper-tail p from a t statistic.
pub(crate) fn t_upper(t: f64, df: f64) -> f64 {
    if t == f64::INFINITY {
        return f64::MIN_POSITIVE;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    clamp_p(dist.sf(t))
}

pub(crate) fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
pub(crate) fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// z-scores using the sample SD; constant input maps to zeros.
pub fn zscore(x: &[f64]) -> Vec<f64> {
    let m = mean(x);
    let sd = variance(x).sqrt();
    if sd == 0.0 || !sd.is_finite() {
        return vec![0.0; x.len()];
    }
    x.iter().map(|v| (v - m) / sd).collect()
}
