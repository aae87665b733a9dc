//! Linear mixed model with a random intercept per feature, fit by maximum
//! likelihood.
//!
//! With V_i = I + γJ for a feature with n_i rows, V_i⁻¹ = I − γ/(1+n_iγ)·J and
//! |V_i| = 1 + n_iγ, so β and σ² profile out in closed form and only the
//! variance ratio γ = τ²/σ² is searched numerically.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::pooled::PooledPanel;
use super::{clamp_p, normal_two_sided, zscore};
use crate::error::{Error, Result};

pub const LOG_GAMMA_RANGE: (f64, f64) = (-12.0, 12.0);
const GRID_STEP: f64 = 0.5;
const GOLDEN_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixedFormula {
    DepthOnly,
    /// Depth plus standardized ln(baseline frequency).
    DepthPlusFreq,
    /// Depth plus σ; rows without σ are dropped.
    DepthPlusSigma,
}

impl MixedFormula {
    pub fn covariates(self) -> &'static [&'static str] {
        match self {
            MixedFormula::DepthOnly => &["intercept", "depth"],
            MixedFormula::DepthPlusFreq => &["intercept", "depth", "log_freq_z"],
            MixedFormula::DepthPlusSigma => &["intercept", "depth", "sigma"],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MixedFormula::DepthOnly => "depth_only",
            MixedFormula::DepthPlusFreq => "depth_plus_freq",
            MixedFormula::DepthPlusSigma => "depth_plus_sigma",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedFit {
    pub formula: MixedFormula,
    pub coef_names: Vec<String>,
    pub beta: Vec<f64>,
    pub se: Vec<f64>,
    pub z: Vec<f64>,
    pub p: Vec<f64>,
    /// Variance ratio τ²/σ².
    pub gamma: f64,
    pub sigma2: f64,
    /// Random-intercept variance τ².
    pub tau2: f64,
    pub loglik: f64,
    pub aic: f64,
    pub n_obs: usize,
    pub n_groups: usize,
    /// True when the random-intercept variance is estimated at zero.
    pub singular: bool,
}

impl MixedFit {
    pub fn coef(&self, name: &str) -> Option<(f64, f64, f64)> {
        let i = self.coef_names.iter().position(|n| n == name)?;
        Some((self.beta[i], self.se[i], self.p[i]))
    }
}

/// Response, design and grouping for one formula over the panel rows that
/// carry every covariate the `need` formulas require.
struct Design {
    y: Vec<f64>,
    x: Vec<Vec<f64>>,
    groups: Vec<usize>,
    n_groups: usize,
}

fn design(panel: &PooledPanel, formula: MixedFormula, need_sigma: bool) -> Result<Design> {
    let rows: Vec<_> = panel.rows().iter().filter(|r| !need_sigma || r.sigma.is_some()).collect();
    if rows.is_empty() {
        return Err(Error::InsufficientData("no rows with the required covariates".into()));
    }
    let mut features: Vec<&str> = Vec::new();
    let groups = rows
        .iter()
        .map(|r| match features.iter().position(|f| *f == r.feature) {
            Some(i) => i,
            None => {
                features.push(&r.feature);
                features.len() - 1
            }
        })
        .collect();
    let extra: Option<Vec<f64>> = match formula {
        MixedFormula::DepthOnly => None,
        MixedFormula::DepthPlusFreq => {
            if rows.iter().any(|r| !(r.baseline_freq > 0.0)) {
                return Err(Error::InvalidArgument("log frequency needs baseline_freq > 0".into()));
            }
            Some(zscore(&rows.iter().map(|r| r.baseline_freq.ln()).collect::<Vec<_>>()))
        }
        MixedFormula::DepthPlusSigma => Some(rows.iter().map(|r| r.sigma.expect("filtered above")).collect()),
    };
    let x = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut v = vec![1.0, f64::from(r.depth)];
            if let Some(e) = &extra {
                v.push(e[i]);
            }
            v
        })
        .collect();
    Ok(Design { y: rows.iter().map(|r| r.decay()).collect(), x, groups, n_groups: features.len() })
}

/// Per-group sufficient statistics.
struct GroupStats {
    n: f64,
    xtx: DMatrix<f64>,
    xt1: DVector<f64>,
    xty: DVector<f64>,
    yty: f64,
    sum_y: f64,
}

struct Profile {
    stats: Vec<GroupStats>,
    n_obs: f64,
    p: usize,
}

struct Eval {
    deviance: f64,
    beta: DVector<f64>,
    cov_unscaled: DMatrix<f64>,
    sigma2: f64,
}

impl Profile {
    fn new(d: &Design) -> Self {
        let p = d.x[0].len();
        let mut stats: Vec<GroupStats> = (0..d.n_groups)
            .map(|_| GroupStats {
                n: 0.0,
                xtx: DMatrix::zeros(p, p),
                xt1: DVector::zeros(p),
                xty: DVector::zeros(p),
                yty: 0.0,
                sum_y: 0.0,
            })
            .collect();
        for ((row, &y), &g) in d.x.iter().zip(&d.y).zip(&d.groups) {
            let xv = DVector::from_column_slice(row);
            let s = &mut stats[g];
            s.n += 1.0;
            s.xtx += &xv * xv.transpose();
            s.xt1 += &xv;
            s.xty += &xv * y;
            s.yty += y * y;
            s.sum_y += y;
        }
        Profile { stats, n_obs: d.y.len() as f64, p }
    }

    fn eval(&self, gamma: f64) -> Option<Eval> {
        let mut a = DMatrix::zeros(self.p, self.p);
        let mut b = DVector::zeros(self.p);
        let mut yvy = 0.0;
        let mut logdet = 0.0;
        for s in &self.stats {
            let c = gamma / (1.0 + s.n * gamma);
            a += &s.xtx - &s.xt1 * s.xt1.transpose() * c;
            b += &s.xty - &s.xt1 * (s.sum_y * c);
            yvy += s.yty - c * s.sum_y * s.sum_y;
            logdet += (s.n * gamma).ln_1p();
        }
        let chol = a.cholesky()?;
        let beta = chol.solve(&b);
        let rss = (yvy - b.dot(&beta)).max(0.0);
        let sigma2 = rss / self.n_obs;
        if !(sigma2 > 0.0) {
            return None;
        }
        let deviance = self.n_obs * (2.0 * std::f64::consts::PI * sigma2).ln() + logdet + self.n_obs;
        Some(Eval { deviance, beta, cov_unscaled: chol.inverse(), sigma2 })
    }

    fn deviance_at_log(&self, theta: f64) -> f64 {
        self.eval(theta.exp()).map_or(f64::INFINITY, |e| e.deviance)
    }

    /// Minimize the profiled deviance over γ: coarse grid on log γ, golden
    /// section around the best grid point, then comparison with γ = 0 and
    /// any extra candidates.
    fn optimize(&self, extra: &[f64]) -> Result<(f64, Eval)> {
        let (lo, hi) = LOG_GAMMA_RANGE;
        let steps = ((hi - lo) / GRID_STEP).round() as usize;
        let grid: Vec<f64> = (0..=steps).map(|i| lo + i as f64 * GRID_STEP).collect();
        let devs: Vec<f64> = grid.iter().map(|&t| self.deviance_at_log(t)).collect();
        let k = (0..grid.len()).min_by(|&a, &b| devs[a].total_cmp(&devs[b])).expect("grid nonempty");
        let (mut a, mut b) = (grid[k.saturating_sub(1)], grid[(k + 1).min(grid.len() - 1)]);
        let r = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = b - r * (b - a);
        let mut d = a + r * (b - a);
        let (mut fc, mut fd) = (self.deviance_at_log(c), self.deviance_at_log(d));
        while (b - a).abs() > GOLDEN_TOL {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - r * (b - a);
                fc = self.deviance_at_log(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + r * (b - a);
                fd = self.deviance_at_log(d);
            }
        }
        let mut candidates = vec![0.0, ((a + b) / 2.0).exp(), grid[k].exp()];
        candidates.extend(extra.iter().copied().filter(|g| g.is_finite() && *g >= 0.0));
        let mut best: Option<(f64, Eval)> = None;
        for g in candidates {
            if let Some(e) = self.eval(g) {
                if best.as_ref().is_none_or(|(_, b)| e.deviance < b.deviance) {
                    best = Some((g, e));
                }
            }
        }
        best.ok_or_else(|| Error::RankDeficient("mixed model design is singular".into()))
    }
}

fn fit_design(d: &Design, formula: MixedFormula, extra: &[f64]) -> Result<MixedFit> {
    let p = d.x[0].len();
    if d.y.len() <= p {
        return Err(Error::InsufficientData(format!("{} rows for {p} coefficients", d.y.len())));
    }
    let prof = Profile::new(d);
    if prof.stats.iter().any(|s| s.n < 2.0) {
        return Err(Error::InsufficientData("every feature needs at least 2 observations".into()));
    }
    let (gamma, e) = prof.optimize(extra)?;
    let se: Vec<f64> = (0..p).map(|i| (e.sigma2 * e.cov_unscaled[(i, i)]).sqrt()).collect();
    let beta: Vec<f64> = e.beta.iter().copied().collect();
    let z: Vec<f64> = beta.iter().zip(&se).map(|(b, s)| b / s).collect();
    let loglik = -e.deviance / 2.0;
    Ok(MixedFit {
        formula,
        coef_names: formula.covariates().iter().map(|s| s.to_string()).collect(),
        p: z.iter().map(|z| normal_two_sided(*z)).collect(),
        beta,
        se,
        z,
        gamma,
        sigma2: e.sigma2,
        tau2: gamma * e.sigma2,
        loglik,
        aic: -2.0 * loglik + 2.0 * (p as f64 + 2.0),
        n_obs: d.y.len(),
        n_groups: d.n_groups,
        singular: gamma == 0.0,
    })
}

/// ML fit of decay (−λ) = Xβ + u_feature + ε with Wald z p-values.
pub fn mixed_effects_fit(panel: &PooledPanel, formula: MixedFormula) -> Result<MixedFit> {
    let d = design(panel, formula, formula == MixedFormula::DepthPlusSigma)?;
    fit_design(&d, formula, &[])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrTest {
    pub reduced: MixedFit,
    pub full: MixedFit,
    pub statistic: f64,
    pub df: u32,
    pub p: f64,
    pub delta_aic: f64,
}

/// Likelihood-ratio test of two nested formulas fit on the same rows. The
/// full model also tries the reduced model's γ̂, which guarantees a
/// non-negative statistic.
pub fn lr_test(panel: &PooledPanel, reduced: MixedFormula, full: MixedFormula) -> Result<LrTest> {
    let (pr, pf) = (reduced.covariates().len(), full.covariates().len());
    if pf <= pr || !full.covariates().starts_with(reduced.covariates()) {
        return Err(Error::InvalidArgument(format!("{} is not nested in {}", reduced.name(), full.name())));
    }
    let need_sigma = full == MixedFormula::DepthPlusSigma;
    let r = fit_design(&design(panel, reduced, need_sigma)?, reduced, &[])?;
    let f = fit_design(&design(panel, full, need_sigma)?, full, &[r.gamma])?;
    let statistic = (2.0 * (f.loglik - r.loglik)).max(0.0);
    let df = (pf - pr) as u32;
    let p = clamp_p(ChiSquared::new(f64::from(df)).expect("df > 0").sf(statistic));
    let delta_aic = r.aic - f.aic;
    Ok(LrTest { reduced: r, full: f, statistic, df, p, delta_aic })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::pooled::PooledRow;

    fn panel(values: impl Fn(usize, usize) -> f64, models: usize) -> PooledPanel {
        let depths = [0u8, 0, 1, 1, 2, 2, 3];
        let mut rows = Vec::new();
        for m in 0..models {
            for (f, &d) in depths.iter().enumerate() {
                rows.push(PooledRow {
                    model_id: format!("m{m}"),
                    feature: format!("f{f}"),
                    depth: d,
                    lambda: -values(m, f),
                    baseline_freq: 1.0 + f as f64,
                    tau: None,
                    sigma: Some(0.1 * f as f64),
                });
            }
        }
        PooledPanel::new(rows).unwrap()
    }

    /// Deterministic pseudo-noise in [−0.5, 0.5).
    fn wiggle(i: usize) -> f64 {
        ((i as f64 * 0.618_033_988_749_895).fract()) - 0.5
    }

    #[test]
    fn ml_deviance_matches_direct_formula() {
        // compare the closed-form profile against a dense evaluation of
        // −2 log L with V = σ²(I + γ Z Zᵀ) at a fixed γ
        let p = panel(|m, f| 0.03 * f as f64 + 0.02 * wiggle(m * 7 + f) + 0.01 * wiggle(f * 13), 4);
        let d = design(&p, MixedFormula::DepthOnly, false).unwrap();
        let prof = Profile::new(&d);
        let gamma = 0.7;
        let e = prof.eval(gamma).unwrap();
        let n = d.y.len();
        let x = DMatrix::from_fn(n, 2, |i, j| d.x[i][j]);
        let y = DVector::from_column_slice(&d.y);
        let v = DMatrix::from_fn(n, n, |i, j| f64::from(i == j) + if d.groups[i] == d.groups[j] { gamma } else { 0.0 });
        let vi = v.clone().try_inverse().unwrap();
        let xtvx = x.transpose() * &vi * &x;
        let beta = xtvx.clone().try_inverse().unwrap() * x.transpose() * &vi * &y;
        let r = &y - &x * &beta;
        let s2 = (r.transpose() * &vi * &r)[(0, 0)] / n as f64;
        let dev = n as f64 * (2.0 * std::f64::consts::PI * s2).ln() + v.determinant().ln() + n as f64;
        assert!((e.deviance - dev).abs() < 1e-9, "{} vs {dev}", e.deviance);
        assert!((e.beta[1] - beta[1]).abs() < 1e-12);
    }

    #[test]
    fn zero_feature_variance_matches_ols() {
        // no feature effect: decay = 0.05·depth + noise
        let depths = [0.0, 0.0, 1.0, 1.0, 2.0, 2.0, 3.0];
        let p = panel(|m, f| 0.05 * depths[f] + 0.01 * wiggle(m * 7 + f), 6);
        let fit = mixed_effects_fit(&p, MixedFormula::DepthOnly).unwrap();
        let x: Vec<f64> = p.depths();
        let y: Vec<f64> = p.decays();
        let mx = x.iter().sum::<f64>() / x.len() as f64;
        let my = y.iter().sum::<f64>() / y.len() as f64;
        let b_ols = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>()
            / x.iter().map(|a| (a - mx).powi(2)).sum::<f64>();
        let (b, se, _) = fit.coef("depth").unwrap();
        assert!((b - b_ols).abs() < 2.0 * se, "{b} vs {b_ols}");
    }

    #[test]
    fn feature_effect_gives_positive_gamma() {
        let p = panel(|m, f| 0.05 * wiggle(f * 31) + 0.002 * wiggle(m * 7 + f), 5);
        let fit = mixed_effects_fit(&p, MixedFormula::DepthOnly).unwrap();
        assert!(!fit.singular);
        assert!(fit.gamma > 1.0);
        assert_eq!(fit.n_groups, 7);
        assert_eq!(fit.aic, -2.0 * fit.loglik + 8.0);
    }

    #[test]
    fn lr_statistic_is_nonnegative() {
        for k in 0..10 {
            let p = panel(|m, f| 0.03 * f as f64 + 0.02 * wiggle(m * 7 + f + k * 101), 3);
            for full in [MixedFormula::DepthPlusFreq, MixedFormula::DepthPlusSigma] {
                let t = lr_test(&p, MixedFormula::DepthOnly, full).unwrap();
                assert!(t.statistic >= 0.0);
                assert!(t.p > 0.0 && t.p <= 1.0);
            }
        }
        assert!(lr_test(&panel(|_, f| f as f64, 2), MixedFormula::DepthPlusFreq, MixedFormula::DepthPlusSigma).is_err());
    }

    #[test]
    fn single_observation_features_rejected() {
        let p = panel(|_, f| f as f64 * 0.01 + 0.001 * wiggle(f), 1);
        assert!(matches!(mixed_effects_fit(&p, MixedFormula::DepthOnly), Err(Error::InsufficientData(_))));
    }
}
