//! Kendall's coefficient of concordance.

use super::rank::{average_ranks, tie_correction};
use crate::error::{Error, Result};

/// Kendall's W for `scores[rater][item]`, with the tie correction. Scores
/// are ranked within each rater (average ranks), so raw values or ranks
/// may be passed.
pub fn kendall_w(scores: &[Vec<f64>]) -> Result<f64> {
    let m = scores.len();
    if m < 2 {
        return Err(Error::InsufficientData("Kendall's W needs at least 2 raters".into()));
    }
    let n = scores[0].len();
    if n < 2 {
        return Err(Error::InsufficientData("Kendall's W needs at least 2 items".into()));
    }
    if scores.iter().any(|s| s.len() != n) {
        return Err(Error::InvalidArgument("raters scored different numbers of items".into()));
    }
    let mut totals = vec![0.0; n];
    let mut ties = 0.0;
    for s in scores {
        for (t, r) in totals.iter_mut().zip(average_ranks(s)) {
            *t += r;
        }
        ties += tie_correction(s);
    }
    let (mf, nf) = (m as f64, n as f64);
    let mean = mf * (nf + 1.0) / 2.0;
    let s: f64 = totals.iter().map(|t| (t - mean).powi(2)).sum();
    let den = mf * mf * (nf.powi(3) - nf) - mf * ties;
    if den <= 0.0 {
        return Err(Error::Undefined("Kendall's W with every rater fully tied".into()));
    }
    Ok((12.0 * s / den).clamp(0.0, 1.0))
}
