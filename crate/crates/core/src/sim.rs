//! Discrete-time simulator of depth-graded decay with sampling-dependent
//! amplification:
//!
//! φ_{t+1} = φ_t · exp(−α·d + β·σ·[baseline ≥ floor] + ε_t),  ε_t ~ N(0, noise_sd²)
//!
//! The exponential-Euler step keeps every rate positive. Simulated panels use
//! the same types as measured ones, so the whole inference stack can be run
//! against a known truth.

use std::collections::BTreeMap;

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{primary17, Depth, RatePanel};
use crate::rng::{derive_seed, substream};
use crate::stats::{permutation_test, spearman_rho, t_upper, PooledPanel, PooledRow, TestStatistic};
use crate::trajectory::{decay_rate, TrajectorySeries, ZeroPolicy};

/// Token total per generation in synthetic panels; large enough that count
/// rounding is invisible at the precision of any downstream statistic.
pub const SYNTHETIC_TOKENS: u64 = 1_000_000_000;

/// Sampling dependence of the features with a published greedy/nucleus pair.
const PUBLISHED_SIGMA_RATES: [(&str, f64, f64); 11] = [
    ("discourse_markers", 1.60, 0.08),
    ("hedging", 1.16, 0.36),
    ("em_dashes", 2.42, 0.00),
    ("exclamation", 1.03, 0.00),
    ("regular_past_ed", 32.10, 26.35),
    ("coordination", 32.12, 18.49),
    ("quotes", 6.90, 17.10),
    ("passive_voice", 5.56, 13.24),
    ("relative_clauses", 12.14, 17.04),
    ("parentheses", 7.27, 8.11),
    ("subjunctive", 0.24, 0.26),
];

/// Baseline used for features without a published nucleus rate.
pub const DEFAULT_BASELINE: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimFeature {
    pub name: String,
    pub depth: u8,
    pub sigma: f64,
    /// Generation-0 rate per 1000 tokens.
    pub baseline: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub alpha: f64,
    pub beta: f64,
    pub features: Vec<SimFeature>,
    pub generations: u32,
    pub noise_sd: f64,
    /// Baselines below this rate get no amplification.
    pub amplification_floor: f64,
    pub seed: u64,
}

impl SimConfig {
    /// The 17-feature panel with σ and baselines from the published
    /// greedy/nucleus rates (σ = 0 and baseline [`DEFAULT_BASELINE`] where
    /// none is available) and a floor just above the exclamation baseline.
    pub fn reference_panel(alpha: f64, beta: f64, noise_sd: f64, seed: u64) -> Self {
        let features = primary17()
            .into_iter()
            .map(|s| {
                let known = PUBLISHED_SIGMA_RATES.iter().find(|(n, _, _)| *n == s.name);
                let (sigma, baseline) = match known {
                    Some((_, nuc, gre)) => (1.0 - (gre / nuc).min(1.0), *nuc),
                    None => (0.0, DEFAULT_BASELINE),
                };
                SimFeature { name: s.name, depth: s.depth.get(), sigma, baseline }
            })
            .collect();
        SimConfig { alpha, beta, features, generations: 10, noise_sd, amplification_floor: 1.1, seed }
    }

    pub fn validate(&self) -> Result<()> {
        // α = 0 is allowed so null panels can be simulated
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) || !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidArgument("alpha and beta must be finite and >= 0".into()));
        }
        if self.generations == 0 {
            return Err(Error::InvalidArgument("generations must be >= 1".into()));
        }
        if !(self.noise_sd >= 0.0) || !(self.amplification_floor >= 0.0) {
            return Err(Error::InvalidArgument("noise_sd and amplification_floor must be >= 0".into()));
        }
        if self.features.is_empty() {
            return Err(Error::InvalidArgument("no features to simulate".into()));
        }
        for f in &self.features {
            Depth::new(f.depth)?;
            if !(0.0..=1.0).contains(&f.sigma) || !(f.baseline > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{}: sigma must lie in [0, 1] and baseline be > 0",
                    f.name
                )));
            }
        }
        Ok(())
    }

    pub fn gated(&self, f: &SimFeature) -> bool {
        f.baseline < self.amplification_floor
    }

    /// σ as it enters the update: zero for gated features.
    pub fn effective_sigma(&self, f: &SimFeature) -> f64 {
        if self.gated(f) {
            0.0
        } else {
            f.sigma
        }
    }

    /// Per-generation log growth in the absence of noise.
    pub fn exponent(&self, f: &SimFeature) -> f64 {
        -self.alpha * f64::from(f.depth) + self.beta * self.effective_sigma(f)
    }
}

/// Ground truth written beside a synthetic panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTruth {
    pub config: SimConfig,
    /// Noiseless λ per feature.
    pub exponents: BTreeMap<String, f64>,
    pub gated: Vec<String>,
}

impl SimTruth {
    pub fn new(config: &SimConfig) -> Self {
        SimTruth {
            config: config.clone(),
            exponents: config.features.iter().map(|f| (f.name.clone(), config.exponent(f))).collect(),
            gated: config.features.iter().filter(|f| config.gated(f)).map(|f| f.name.clone()).collect(),
        }
    }
}

/// Simulate every feature; feature `k` draws its noise from substream `k`.
pub fn simulate(config: &SimConfig) -> Result<Vec<TrajectorySeries>> {
    config.validate()?;
    let noise = Normal::new(0.0, config.noise_sd).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let n = config.generations as usize + 1;
    config
        .features
        .iter()
        .enumerate()
        .map(|(k, f)| {
            let mut rng = substream(config.seed, k as u64);
            let step = config.exponent(f);
            let mut log_phi = 0.0;
            let mut values = Vec::with_capacity(n);
            values.push(1.0);
            for _ in 1..n {
                let eps = if config.noise_sd > 0.0 { noise.sample(&mut rng) } else { 0.0 };
                log_phi += step + eps;
                values.push(log_phi.exp());
            }
            TrajectorySeries::from_values(&f.name, Depth::new(f.depth)?, (0..n).map(|t| t as f64).collect(), values)
        })
        .collect()
}

/// A count panel whose normalized trajectories match `series`, at
/// [`SYNTHETIC_TOKENS`] tokens per generation.
pub fn synthetic_panel(model_id: &str, config: &SimConfig, series: &[TrajectorySeries]) -> Result<RatePanel> {
    let n = config.generations as usize + 1;
    let per_thousand = SYNTHETIC_TOKENS as f64 / 1000.0;
    let counts = config
        .features
        .iter()
        .zip(series)
        .map(|(f, s)| s.values.iter().map(|v| (f.baseline * v * per_thousand).round() as u64).collect())
        .collect();
    let features = config.features.iter().map(|f| Ok((f.name.clone(), Depth::new(f.depth)?))).collect::<Result<_>>()?;
    RatePanel::new(model_id, features, vec![SYNTHETIC_TOKENS; n], counts)
}

/// λ per feature of a simulated panel, straight from the trajectories.
pub fn simulated_lambdas(series: &[TrajectorySeries]) -> Result<Vec<f64>> {
    series.iter().map(|s| decay_rate(s, ZeroPolicy::DropZeros)).collect()
}

/// Simulate `n_models` independent replicates of `config` (model `m` seeded
/// with `derive_seed(config.seed, "model/{m}")`) and pool their λ.
///
/// τ is set to 1 − σ, the value that reproduces the configured σ.
pub fn simulate_pooled(config: &SimConfig, n_models: usize) -> Result<PooledPanel> {
    let per_model: Vec<Vec<f64>> = (0..n_models)
        .into_par_iter()
        .map(|m| {
            let mut c = config.clone();
            c.seed = derive_seed(config.seed, &format!("model/{m}"));
            simulated_lambdas(&simulate(&c)?)
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(n_models * config.features.len());
    for (m, lambdas) in per_model.iter().enumerate() {
        for (f, lambda) in config.features.iter().zip(lambdas) {
            rows.push(PooledRow {
                model_id: format!("sim{m}"),
                feature: f.name.clone(),
                depth: f.depth,
                lambda: *lambda,
                baseline_freq: f.baseline,
                tau: Some(1.0 - f.sigma),
                sigma: Some(f.sigma),
            });
        }
    }
    PooledPanel::new(rows)
}

/// How a replicate decides that it detected the depth gradient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Detector {
    /// One-sided Spearman t-test of ρ(depth, −λ) > 0.
    SpearmanT,
    /// One-sided label-permutation test of the same statistic.
    Permutation { n_shuffles: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCell {
    pub generations: u32,
    pub n_models: usize,
    pub noise_sd: f64,
    pub n_reps: usize,
    pub detection_rate: f64,
    pub mean_rho: f64,
}

/// ρ(depth, −λ) on one pooled replicate and its one-sided p.
fn replicate(config: &SimConfig, n_models: usize, detector: Detector, seed: u64) -> Result<(f64, f64)> {
    let mut c = config.clone();
    c.seed = seed;
    let panel = simulate_pooled(&c, n_models)?;
    let (x, y) = (panel.depths(), panel.decays());
    let rho = spearman_rho(&x, &y)?;
    let p = match detector {
        Detector::SpearmanT => {
            let df = (x.len() - 2) as f64;
            let t = if rho.abs() >= 1.0 { rho.signum() * f64::INFINITY } else { rho * (df / (1.0 - rho * rho)).sqrt() };
            t_upper(t, df)
        }
        Detector::Permutation { n_shuffles } => {
            permutation_test(&y, &x, TestStatistic::Spearman, n_shuffles, derive_seed(seed, "permutation"))?.p
        }
    };
    Ok((rho, p))
}

/// Detection rate at level `level` for every (generation count, model count)
/// cell. Replicate `r` of a cell is seeded with
/// `derive_seed(seed, "rep/{T}/{M}/{r}")`.
pub fn power_experiment(
    base: &SimConfig,
    generations: &[u32],
    n_models: &[usize],
    n_reps: usize,
    detector: Detector,
    level: f64,
    seed: u64,
) -> Result<Vec<PowerCell>> {
    if generations.is_empty() || n_models.is_empty() || n_reps == 0 {
        return Err(Error::InvalidArgument("power grid must be nonempty with n_reps >= 1".into()));
    }
    let mut out = Vec::new();
    for &t in generations {
        for &m in n_models {
            let mut c = base.clone();
            c.generations = t;
            let reps: Vec<(f64, f64)> = (0..n_reps)
                .into_par_iter()
                .map(|r| replicate(&c, m, detector, derive_seed(seed, &format!("rep/{t}/{m}/{r}"))))
                .collect::<Result<_>>()?;
            out.push(PowerCell {
                generations: t,
                n_models: m,
                noise_sd: base.noise_sd,
                n_reps,
                detection_rate: reps.iter().filter(|(_, p)| *p < level).count() as f64 / n_reps as f64,
                mean_rho: reps.iter().map(|(r, _)| r).sum::<f64>() / n_reps as f64,
            });
        }
    }
    Ok(out)
}

/// Mean single-panel ρ(depth, −λ) over `n_reps` replicates.
pub fn mean_rho(config: &SimConfig, n_models: usize, n_reps: usize, seed: u64) -> Result<f64> {
    let rhos: Vec<f64> = (0..n_reps)
        .into_par_iter()
        .map(|r| {
            replicate(config, n_models, Detector::SpearmanT, derive_seed(seed, &format!("calib/{r}"))).map(|x| x.0)
        })
        .collect::<Result<_>>()?;
    Ok(rhos.iter().sum::<f64>() / n_reps as f64)
}

/// Bisect `noise_sd` on `[0, hi]` until the mean single-panel ρ matches
/// `target`. The same replicate seeds are used at every noise level, so the
/// mean is a smooth decreasing function of the noise.
pub fn calibrate_noise(base: &SimConfig, target: f64, n_reps: usize, seed: u64) -> Result<f64> {
    let at = |sd: f64| {
        let mut c = base.clone();
        c.noise_sd = sd;
        mean_rho(&c, 1, n_reps, seed)
    };
    let (mut lo, mut hi) = (0.0, 0.05);
    while at(hi)? > target {
        hi *= 2.0;
        if hi > 1e3 {
            return Err(Error::Undefined(format!("no noise level brings mean ρ down to {target}")));
        }
    }
    if at(lo)? < target {
        return Err(Error::Undefined(format!("noiseless mean ρ is already below {target}")));
    }
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if at(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
