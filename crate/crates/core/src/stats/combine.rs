//! Combining and adjusting families of p-values.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::clamp_p;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherResult {
    pub chi2: f64,
    pub df: u32,
    pub p: f64,
}

fn check_p(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InsufficientData("no p-values".into()));
    }
    if let Some(bad) = p.iter().find(|v| !(**v > 0.0 && **v <= 1.0)) {
        return Err(Error::InvalidArgument(format!("p-value {bad} outside (0, 1]")));
    }
    Ok(())
}

/// Fisher's method: χ² = −2 Σ ln p on 2k degrees of freedom.
pub fn fisher_combine(p: &[f64]) -> Result<FisherResult> {
    check_p(p)?;
    let chi2 = -2.0 * p.iter().map(|v| v.ln()).sum::<f64>();
    let df = 2 * p.len() as u32;
    let dist = ChiSquared::new(f64::from(df)).expect("df > 0");
    Ok(FisherResult { chi2, df, p: clamp_p(dist.sf(chi2)) })
}

/// Holm step-down adjustment, returned in input order.
pub fn holm_adjust(p: &[f64]) -> Result<Vec<f64>> {
    check_p(p)?;
    let k = p.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));
    let mut out = vec![0.0; k];
    let mut running = 0.0f64;
    for (i, &j) in order.iter().enumerate() {
        running = running.max(((k - i) as f64 * p[j]).min(1.0));
        out[j] = running;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fisher_trivial_cases() {
        let r = fisher_combine(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(r.chi2, 0.0);
        assert_eq!(r.p, 1.0);
        let r = fisher_combine(&[0.2]).unwrap();
        assert!((r.chi2 + 2.0 * 0.2f64.ln()).abs() < 1e-15);
        assert_eq!(r.df, 2);
        // χ²(2) survival is exp(−x/2), so the single-p case returns p itself
        assert!((r.p - 0.2).abs() < 1e-12);
        assert!(fisher_combine(&[0.0, 0.5]).is_err());
    }

    #[test]
    fn fisher_half_log_copies() {
        let p = vec![(-0.5f64).exp(); 7];
        assert!((fisher_combine(&p).unwrap().chi2 - 7.0).abs() < 1e-12);
    }

    #[test]
    fn holm_examples() {
        assert_eq!(holm_adjust(&[0.03]).unwrap(), vec![0.03]);
        assert_eq!(holm_adjust(&[0.1, 0.1, 0.1]).unwrap(), vec![0.30000000000000004; 3]);
        assert_eq!(holm_adjust(&[0.5, 0.5, 0.5]).unwrap(), vec![1.0; 3]);
        // step-down keeps adjusted values monotone in sorted order
        let a = holm_adjust(&[0.01, 0.04, 0.03]).unwrap();
        assert_eq!(a, vec![0.03, 0.06, 0.06]);
    }
}
