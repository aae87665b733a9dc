//! Model-level (cluster) bootstrap intervals.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::correlation::spearman_rho;
use super::pooled::PooledPanel;
use crate::error::{Error, Result};
use crate::rng::substream;

/// Resamples drawn from one substream.
pub const BLOCK: u64 = 256;

/// Sample quantile, Hyndman–Fan type 7 (linear interpolation between order
/// statistics). `sorted` must be ascending and nonempty.
pub fn quantile_type7(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCi {
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_resamples: u64,
    /// Resamples on which the statistic was undefined and that were skipped.
    pub n_failed: u64,
}

/// Run `n_resamples` draws of `stat` in seeded blocks and collect the
/// defined values in draw order.
fn resample<F>(n_resamples: u64, seed: u64, stat: F) -> Vec<Option<f64>>
where
    F: Fn(&mut crate::rng::StatRng) -> Option<f64> + Sync,
{
    let n_blocks = n_resamples.div_ceil(BLOCK);
    (0..n_blocks)
        .into_par_iter()
        .flat_map_iter(|b| {
            let mut rng = substream(seed, b);
            let len = BLOCK.min(n_resamples - b * BLOCK);
            (0..len).map(|_| stat(&mut rng)).collect::<Vec<_>>()
        })
        .collect()
}

fn percentile_ci(estimate: f64, draws: Vec<Option<f64>>, level: f64) -> Result<BootstrapCi> {
    let n_resamples = draws.len() as u64;
    let mut ok: Vec<f64> = draws.into_iter().flatten().collect();
    let n_failed = n_resamples - ok.len() as u64;
    if ok.is_empty() {
        return Err(Error::Undefined("statistic undefined on every bootstrap resample".into()));
    }
    ok.sort_by(f64::total_cmp);
    let a = (1.0 - level) / 2.0;
    Ok(BootstrapCi {
        estimate,
        ci_low: quantile_type7(&ok, a),
        ci_high: quantile_type7(&ok, 1.0 - a),
        n_resamples,
        n_failed,
    })
}

/// Percentile 95% CI for the pooled Spearman ρ(depth, −λ), resampling whole
/// models with replacement.
pub fn cluster_bootstrap(panel: &PooledPanel, n_resamples: u64, seed: u64) -> Result<BootstrapCi> {
    if n_resamples == 0 {
        return Err(Error::InvalidArgument("n_resamples must be >= 1".into()));
    }
    let groups = panel.model_groups();
    if groups.len() < 2 {
        return Err(Error::InsufficientData(format!("cluster bootstrap needs >= 2 models, got {}", groups.len())));
    }
    let (depth, decay) = (panel.depths(), panel.decays());
    let estimate = spearman_rho(&depth, &decay)?;
    let draws = resample(n_resamples, seed, |rng| {
        let (mut x, mut y) = (Vec::with_capacity(depth.len()), Vec::with_capacity(depth.len()));
        for _ in 0..groups.len() {
            for &i in &groups[rng.random_range(0..groups.len())] {
                x.push(depth[i]);
                y.push(decay[i]);
            }
        }
        spearman_rho(&x, &y).ok()
    });
    percentile_ci(estimate, draws, 0.95)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureCi {
    pub feature: String,
    pub depth: u8,
    /// Mean λ across models.
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_models: usize,
}

impl FeatureCi {
    pub fn excludes_zero(&self) -> bool {
        self.ci_low > 0.0 || self.ci_high < 0.0
    }
}

/// Percentile 95% CI of each feature's mean λ, resampling the models that
/// report the feature. Feature `k` (in panel order) draws from substream
/// family `k` of `seed`.
pub fn per_feature_bootstrap(panel: &PooledPanel, n_resamples: u64, seed: u64) -> Result<Vec<FeatureCi>> {
    if n_resamples == 0 {
        return Err(Error::InvalidArgument("n_resamples must be >= 1".into()));
    }
    panel
        .features()
        .into_iter()
        .enumerate()
        .map(|(k, (feature, depth))| {
            let v: Vec<f64> = panel.rows().iter().filter(|r| r.feature == feature).map(|r| r.lambda).collect();
            if v.len() < 2 {
                return Err(Error::InsufficientData(format!("{feature}: per-feature bootstrap needs >= 2 models")));
            }
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            let fseed = crate::rng::derive_seed(seed, &format!("feature/{k}"));
            let draws = resample(n_resamples, fseed, |rng| {
                let s: f64 = (0..v.len()).map(|_| v[rng.random_range(0..v.len())]).sum();
                Some(s / v.len() as f64)
            });
            let ci = percentile_ci(mean, draws, 0.95)?;
            Ok(FeatureCi { feature, depth, mean, ci_low: ci.ci_low, ci_high: ci.ci_high, n_models: v.len() })
        })
        .collect()
}
