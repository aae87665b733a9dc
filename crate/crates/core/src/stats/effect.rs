//! Two-sample effect size and rank-sum test.

use serde::{Deserialize, Serialize};

use super::rank::{average_ranks, for_each_combination, tie_correction};
use super::{mean, normal_two_sided, variance};
use crate::error::{Error, Result};

/// Largest combined sample size for which Mann–Whitney p is exact.
pub const MANN_WHITNEY_EXACT_MAX_N: usize = 12;

const TIE_TOL: f64 = 1e-9;

/// Cohen's d with the df-weighted pooled standard deviation.
pub fn cohens_d(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InsufficientData("Cohen's d needs at least 2 values per group".into()));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let pooled = (((na - 1.0) * variance(a) + (nb - 1.0) * variance(b)) / (na + nb - 2.0)).sqrt();
    if !(pooled > 0.0) {
        return Err(Error::Undefined("Cohen's d with zero pooled SD".into()));
    }
    Ok((mean(a) - mean(b)) / pooled)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// U for the first sample: R_a − n_a(n_a + 1)/2.
    pub u: f64,
    /// Two-sided p-value.
    pub p: f64,
    pub exact: bool,
}

/// Mann–Whitney U test. Exact (enumeration of all group assignments of
/// the pooled mid-ranks) when n_a + n_b ≤ 12; otherwise the normal
/// approximation with tie and continuity corrections.
pub fn mann_whitney(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientData("Mann-Whitney needs two nonempty samples".into()));
    }
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    if pooled.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite input".into()));
    }
    let ranks = average_ranks(&pooled);
    let (na, nb) = (a.len(), b.len());
    let n = na + nb;
    let offset = (na * (na + 1)) as f64 / 2.0;
    let u = ranks[..na].iter().sum::<f64>() - offset;
    let mu = (na * nb) as f64 / 2.0;
    if n <= MANN_WHITNEY_EXACT_MAX_N {
        let obs = (u - mu).abs() - TIE_TOL;
        let (mut hit, mut total) = (0u64, 0u64);
        for_each_combination(n, na, |idx| {
            total += 1;
            let uu = idx.iter().map(|&i| ranks[i]).sum::<f64>() - offset;
            if (uu - mu).abs() >= obs {
                hit += 1;
            }
        });
        return Ok(MannWhitney { u, p: hit as f64 / total as f64, exact: true });
    }
    let nf = n as f64;
    let var = (na * nb) as f64 / 12.0 * ((nf + 1.0) - tie_correction(&pooled) / (nf * (nf - 1.0)));
    if var <= 0.0 {
        return Ok(MannWhitney { u, p: 1.0, exact: false });
    }
    let z = ((u - mu).abs() - 0.5).max(0.0) / var.sqrt();
    Ok(MannWhitney { u, p: normal_two_sided(z), exact: false })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cohens_d_examples() {
        assert_eq!(cohens_d(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert!(matches!(cohens_d(&[1.0, 1.0], &[0.0, 0.0]), Err(Error::Undefined(_))));
        let d = cohens_d(&[2.0, 4.0], &[0.0, 2.0]).unwrap();
        assert!((d - 2.0 / 2f64.sqrt()).abs() < 1e-15);
        assert!(cohens_d(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn separated_samples() {
        let r = mann_whitney(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(r.u, 0.0);
        assert!(r.exact);
        // only the two extreme splits of C(6,3) = 20 are as extreme
        assert!((r.p - 2.0 / 20.0).abs() < 1e-15);
    }

    #[test]
    fn identical_samples_give_p_one() {
        let r = mann_whitney(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.u, 4.5);
        assert_eq!(r.p, 1.0);
    }

    #[test]
    fn normal_approximation_is_sane() {
        let a: Vec<f64> = (0..10).map(f64::from).collect();
        let b: Vec<f64> = (5..15).map(f64::from).collect();
        let r = mann_whitney(&a, &b).unwrap();
        assert!(!r.exact);
        assert_eq!(r.u, 12.5);
        assert!(r.p < 0.05 && r.p > 0.001, "{}", r.p);
        let all_tied = mann_whitney(&[1.0; 8], &[1.0; 8]).unwrap();
        assert_eq!(all_tied.p, 1.0);
    }
}
