//! Pearson, Spearman, partial Spearman and Steiger's test for dependent
//! overlapping correlations.

use serde::{Deserialize, Serialize};

use super::rank::{average_ranks, for_each_permutation};
use super::{normal_two_sided, t_two_sided};
use crate::error::{Error, Result};

/// Largest n for which the Spearman p-value is computed by full enumeration.
pub const SPEARMAN_EXACT_MAX_N: usize = 9;

const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub rho: f64,
    /// Two-sided p-value.
    pub p: f64,
    pub n: usize,
    /// True when `p` comes from full enumeration.
    pub exact: bool,
}

fn check_pair(x: &[f64], y: &[f64], min_n: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!("length mismatch: {} vs {}", x.len(), y.len())));
    }
    if x.len() < min_n {
        return Err(Error::InsufficientData(format!("need at least {min_n} observations, got {}", x.len())));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite input".into()));
    }
    Ok(())
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y, 2)?;
    pearson_unchecked(x, y).ok_or_else(|| Error::Undefined("correlation of a constant vector".into()))
}

pub(crate) fn pearson_unchecked(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's ρ only, without a p-value.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y, 2)?;
    pearson_unchecked(&average_ranks(x), &average_ranks(y))
        .ok_or_else(|| Error::Undefined("Spearman correlation of a constant vector".into()))
}

/// Spearman's ρ with average ranks for ties. The two-sided p-value is exact
/// (enumeration of all rank permutations) for n ≤ 9 and uses the t
/// approximation with n − 2 df otherwise.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Correlation> {
    check_pair(x, y, 3)?;
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let rho = pearson_unchecked(&rx, &ry)
        .ok_or_else(|| Error::Undefined("Spearman correlation of a constant vector".into()))?;
    let n = x.len();
    if n <= SPEARMAN_EXACT_MAX_N {
        let obs = rho.abs() - TIE_TOL;
        let (mut hit, mut total) = (0u64, 0u64);
        for_each_permutation(&ry, |perm| {
            total += 1;
            if pearson_unchecked(&rx, perm).is_some_and(|r| r.abs() >= obs) {
                hit += 1;
            }
        });
        return Ok(Correlation { rho, p: hit as f64 / total as f64, n, exact: true });
    }
    Ok(Correlation { rho, p: t_p(rho, n as f64 - 2.0), n, exact: false })
}

fn t_p(r: f64, df: f64) -> f64 {
    if r.abs() >= 1.0 {
        return f64::MIN_POSITIVE;
    }
    t_two_sided(r * (df / (1.0 - r * r)).sqrt(), df)
}

/// Spearman correlation of `x` and `y` controlling for `z`: all three are
/// rank-transformed, then the first-order partial Pearson correlation is
/// taken. The p-value uses t with n − 3 df.
pub fn partial_spearman(x: &[f64], y: &[f64], z: &[f64]) -> Result<Correlation> {
    check_pair(x, y, 4)?;
    check_pair(x, z, 4)?;
    let (rx, ry, rz) = (average_ranks(x), average_ranks(y), average_ranks(z));
    let undefined = || Error::Undefined("partial correlation with a constant input".into());
    let rxy = pearson_unchecked(&rx, &ry).ok_or_else(undefined)?;
    let rxz = pearson_unchecked(&rx, &rz).ok_or_else(undefined)?;
    let ryz = pearson_unchecked(&ry, &rz).ok_or_else(undefined)?;
    let den = ((1.0 - rxz * rxz) * (1.0 - ryz * ryz)).sqrt();
    if den <= 0.0 {
        return Err(Error::Undefined("control variable perfectly correlated with an input".into()));
    }
    let rho = ((rxy - rxz * ryz) / den).clamp(-1.0, 1.0);
    let n = x.len();
    Ok(Correlation { rho, p: t_p(rho, n as f64 - 3.0), n, exact: false })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaveOneOut {
    /// ρ with observation i removed.
    pub rhos: Vec<f64>,
    pub min: f64,
    pub max: f64,
    /// Index whose removal moves ρ furthest from the full-sample value.
    pub most_influential: usize,
    pub full: f64,
}

/// Spearman ρ recomputed with each observation dropped in turn.
pub fn leave_one_out(x: &[f64], y: &[f64]) -> Result<LeaveOneOut> {
    check_pair(x, y, 4)?;
    let full = spearman_rho(x, y)?;
    let rhos = (0..x.len())
        .map(|i| {
            let xs: Vec<f64> = x.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, v)| *v).collect();
            let ys: Vec<f64> = y.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, v)| *v).collect();
            spearman_rho(&xs, &ys)
        })
        .collect::<Result<Vec<_>>>()?;
    let min = rhos.iter().copied().fold(f64::INFINITY, f64::min);
    let max = rhos.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let most_influential = (0..rhos.len())
        .max_by(|&a, &b| (rhos[a] - full).abs().total_cmp(&(rhos[b] - full).abs()).then(b.cmp(&a)))
        .expect("n >= 4");
    Ok(LeaveOneOut { rhos, min, max, most_influential, full })
}

/// Steiger's Z for H0: ρ_xy = ρ_xz, where both correlations share `x` and
/// `r_yz` is the correlation between the two predictors. Returns `(z, p)`
/// with a two-sided normal p-value.
pub fn steiger_z(r_xy: f64, r_xz: f64, r_yz: f64, n: usize) -> Result<(f64, f64)> {
    if n < 4 {
        return Err(Error::InsufficientData(format!("Steiger test needs n >= 4, got {n}")));
    }
    if [r_xy, r_xz, r_yz].iter().any(|r| !r.is_finite() || r.abs() >= 1.0) {
        return Err(Error::Undefined("Steiger test needs |r| < 1".into()));
    }
    let rbar = (r_xy + r_xz) / 2.0;
    let rbar2 = rbar * rbar;
    let psi = r_yz * (1.0 - 2.0 * rbar2) - 0.5 * rbar2 * (1.0 - 2.0 * rbar2 - r_yz * r_yz);
    let s = psi / (1.0 - rbar2).powi(2);
    let den = 2.0 - 2.0 * s;
    if den <= 0.0 {
        return Err(Error::Undefined("degenerate correlation triple".into()));
    }
    let z = (r_xy.atanh() - r_xz.atanh()) * ((n as f64 - 3.0) / den).sqrt();
    Ok((z, normal_two_sided(z)))
}
