//! OLS with cluster-robust (sandwich) standard errors.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::pooled::PooledPanel;
use super::{t_two_sided, zscore};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RobustKind {
    /// Plain sandwich, no small-sample adjustment.
    #[default]
    Cr0,
    /// Bell–McCaffrey bias-reduced linearization.
    Cr2,
}

impl std::str::FromStr for RobustKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cr0" => Ok(RobustKind::Cr0),
            "cr2" => Ok(RobustKind::Cr2),
            _ => Err(Error::InvalidArgument(format!("unknown robust estimator {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterBy {
    Feature,
    Model,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OlsCovariate {
    Depth,
    /// Standardized ln(baseline frequency).
    LogFreq,
    /// Standardized −ln(1 + τ): larger means more sampling-dependent.
    Sigma,
}

impl OlsCovariate {
    pub fn name(self) -> &'static str {
        match self {
            OlsCovariate::Depth => "depth",
            OlsCovariate::LogFreq => "log_freq_z",
            OlsCovariate::Sigma => "sigma_z",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub coef_names: Vec<String>,
    pub beta: Vec<f64>,
    pub se: Vec<f64>,
    pub t: Vec<f64>,
    pub p: Vec<f64>,
    pub r2: f64,
    pub r2_adj: f64,
    pub n_obs: usize,
    pub n_clusters: usize,
    /// Degrees of freedom of the t reference distribution, G − 1.
    pub df: usize,
    pub kind: RobustKind,
}

impl OlsFit {
    pub fn coef(&self, name: &str) -> Option<(f64, f64, f64)> {
        let i = self.coef_names.iter().position(|n| n == name)?;
        Some((self.beta[i], self.se[i], self.p[i]))
    }
}

/// Regress decay (−λ) on an intercept and `covariates`, clustering on
/// feature or model. Rows without τ are dropped when σ is requested.
pub fn ols_cluster_robust(
    panel: &PooledPanel,
    covariates: &[OlsCovariate],
    cluster: ClusterBy,
    kind: RobustKind,
) -> Result<OlsFit> {
    let need_tau = covariates.contains(&OlsCovariate::Sigma);
    let rows: Vec<_> = panel.rows().iter().filter(|r| !need_tau || r.tau.is_some()).collect();
    if rows.is_empty() {
        return Err(Error::InsufficientData("no rows with the required covariates".into()));
    }
    let cols: Vec<Vec<f64>> = covariates
        .iter()
        .map(|c| match c {
            OlsCovariate::Depth => Ok(rows.iter().map(|r| f64::from(r.depth)).collect()),
            OlsCovariate::LogFreq => {
                if rows.iter().any(|r| !(r.baseline_freq > 0.0)) {
                    return Err(Error::InvalidArgument("log frequency needs baseline_freq > 0".into()));
                }
                Ok(zscore(&rows.iter().map(|r| r.baseline_freq.ln()).collect::<Vec<_>>()))
            }
            OlsCovariate::Sigma => {
                Ok(zscore(&rows.iter().map(|r| -(r.tau.expect("filtered above")).ln_1p()).collect::<Vec<_>>()))
            }
        })
        .collect::<Result<_>>()?;
    let x: Vec<Vec<f64>> =
        (0..rows.len()).map(|i| std::iter::once(1.0).chain(cols.iter().map(|c| c[i])).collect()).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.decay()).collect();
    let key = |r: &&crate::stats::PooledRow| match cluster {
        ClusterBy::Feature => r.feature.clone(),
        ClusterBy::Model => r.model_id.clone(),
    };
    let mut labels: Vec<String> = Vec::new();
    let clusters: Vec<usize> = rows
        .iter()
        .map(|r| {
            let k = key(r);
            match labels.iter().position(|l| *l == k) {
                Some(i) => i,
                None => {
                    labels.push(k);
                    labels.len() - 1
                }
            }
        })
        .collect();
    let mut fit = ols_robust(&y, &x, &clusters, kind)?;
    fit.coef_names =
        std::iter::once("intercept").chain(covariates.iter().map(|c| c.name())).map(String::from).collect();
    Ok(fit)
}

/// OLS of `y` on the rows of `x` with sandwich SEs clustered by `clusters`
/// (arbitrary cluster ids). Coefficient names are `x0`, `x1`, ...
pub fn ols_robust(y: &[f64], x: &[Vec<f64>], clusters: &[usize], kind: RobustKind) -> Result<OlsFit> {
    let n = y.len();
    if n == 0 || x.len() != n || clusters.len() != n {
        return Err(Error::InvalidArgument("OLS inputs must be nonempty and aligned".into()));
    }
    let p = x[0].len();
    if n <= p {
        return Err(Error::InsufficientData(format!("{n} rows for {p} coefficients")));
    }
    let xm = DMatrix::from_fn(n, p, |i, j| x[i][j]);
    let yv = DVector::from_column_slice(y);
    let xtx = xm.transpose() * &xm;
    let eig = xtx.clone().symmetric_eigen();
    let (emin, emax) = eig.eigenvalues.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &e| (a.min(e), b.max(e.abs())));
    if !(emin > 1e-10 * emax) {
        return Err(Error::RankDeficient("design matrix columns are collinear".into()));
    }
    let bread = xtx.try_inverse().ok_or_else(|| Error::RankDeficient("X'X is singular".into()))?;
    let beta = &bread * xm.transpose() * &yv;
    let resid = &yv - &xm * &beta;

    let mut ids: Vec<usize> = clusters.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let g = ids.len();
    if g < 2 {
        return Err(Error::InsufficientData("cluster-robust SEs need at least 2 clusters".into()));
    }
    let mut meat = DMatrix::zeros(p, p);
    for id in &ids {
        let idx: Vec<usize> = (0..n).filter(|&i| clusters[i] == *id).collect();
        let xg = xm.select_rows(&idx);
        let mut eg = DVector::from_iterator(idx.len(), idx.iter().map(|&i| resid[i]));
        if kind == RobustKind::Cr2 {
            let h = &xg * &bread * xg.transpose();
            let m = DMatrix::identity(idx.len(), idx.len()) - h;
            eg = inv_sqrt_psd(m) * eg;
        }
        let s = xg.transpose() * eg;
        meat += &s * s.transpose();
    }
    let vcov = &bread * meat * &bread;
    let df = g - 1;
    let se: Vec<f64> = (0..p).map(|i| vcov[(i, i)].max(0.0).sqrt()).collect();
    let b: Vec<f64> = beta.iter().copied().collect();
    let t: Vec<f64> = b.iter().zip(&se).map(|(b, s)| b / s).collect();
    let pv = t.iter().map(|t| if t.is_nan() { 1.0 } else { t_two_sided(*t, df as f64) }).collect();
    let my = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let rss: f64 = resid.iter().map(|e| e * e).sum();
    let r2 = if tss > 0.0 { 1.0 - rss / tss } else { 0.0 };
    let r2_adj = 1.0 - (1.0 - r2) * (n as f64 - 1.0) / (n as f64 - p as f64);
    Ok(OlsFit {
        coef_names: (0..p).map(|i| format!("x{i}")).collect(),
        beta: b,
        se,
        t,
        p: pv,
        r2,
        r2_adj,
        n_obs: n,
        n_clusters: g,
        df,
        kind,
    })
}

/// Symmetric inverse square root; eigenvalues at (numerical) zero are
/// dropped, giving the pseudo-inverse root.
fn inv_sqrt_psd(m: DMatrix<f64>) -> DMatrix<f64> {
    let e = m.symmetric_eigen();
    let d = e.eigenvalues.map(|v| if v > 1e-12 { 1.0 / v.sqrt() } else { 0.0 });
    &e.eigenvectors * DMatrix::from_diagonal(&d) * e.eigenvectors.transpose()
}
