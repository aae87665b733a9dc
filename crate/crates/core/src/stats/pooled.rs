//! Multi-model panel of per-feature decay rates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::DecayRow;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledRow {
    pub model_id: String,
    pub feature: String,
    pub depth: u8,
    pub lambda: f64,
    pub baseline_freq: f64,
    /// Greedy-to-nucleus ratio, when known.
    pub tau: Option<f64>,
    /// 1 − min(τ, 1), when τ is known.
    pub sigma: Option<f64>,
}

impl PooledRow {
    /// Decay on the scale where the depth hypothesis predicts a positive
    /// association: −λ.
    pub fn decay(&self) -> f64 {
        -self.lambda
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledPanel {
    rows: Vec<PooledRow>,
}

impl PooledPanel {
    pub fn new(rows: Vec<PooledRow>) -> Result<Self> {
        let mut keys: Vec<(&str, &str)> = rows.iter().map(|r| (r.model_id.as_str(), r.feature.as_str())).collect();
        keys.sort_unstable();
        if let Some(w) = keys.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument(format!("duplicate row for model {:?} feature {:?}", w[0].0, w[0].1)));
        }
        if rows.iter().any(|r| !r.lambda.is_finite() || r.depth > 3) {
            return Err(Error::InvalidArgument("pooled rows need finite lambda and depth in 0..=3".into()));
        }
        Ok(PooledPanel { rows })
    }

    pub fn from_decay(rows: &[DecayRow]) -> Result<Self> {
        Self::new(
            rows.iter()
                .map(|r| PooledRow {
                    model_id: r.model_id.clone(),
                    feature: r.feature.clone(),
                    depth: r.depth,
                    lambda: r.lambda,
                    baseline_freq: r.baseline_freq,
                    tau: None,
                    sigma: None,
                })
                .collect(),
        )
    }

    /// Attach τ values; σ is derived as 1 − min(τ, 1).
    pub fn with_tau(mut self, lookup: impl Fn(&str, &str) -> Option<f64>) -> Self {
        for r in &mut self.rows {
            r.tau = lookup(&r.model_id, &r.feature);
            r.sigma = r.tau.map(|t| 1.0 - t.min(1.0));
        }
        self
    }

    pub fn rows(&self) -> &[PooledRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Model ids in order of first appearance.
    pub fn models(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.model_id) {
                out.push(r.model_id.clone());
            }
        }
        out
    }

    /// (feature, depth) pairs in order of first appearance.
    pub fn features(&self) -> Vec<(String, u8)> {
        let mut out: Vec<(String, u8)> = Vec::new();
        for r in &self.rows {
            if !out.iter().any(|(f, _)| f == &r.feature) {
                out.push((r.feature.clone(), r.depth));
            }
        }
        out
    }

    /// Row indices grouped by model, in [`Self::models`] order.
    pub fn model_groups(&self) -> Vec<Vec<usize>> {
        self.models().iter().map(|m| (0..self.rows.len()).filter(|&i| &self.rows[i].model_id == m).collect()).collect()
    }

    pub fn depths(&self) -> Vec<f64> {
        self.rows.iter().map(|r| f64::from(r.depth)).collect()
    }

    pub fn decays(&self) -> Vec<f64> {
        self.rows.iter().map(PooledRow::decay).collect()
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.lambda).collect()
    }

    /// True when every model has a row for every feature.
    pub fn is_complete(&self) -> bool {
        self.models().len() * self.features().len() == self.rows.len()
    }

    pub fn subset(&self, keep: impl Fn(&PooledRow) -> bool) -> Result<Self> {
        Self::new(self.rows.iter().filter(|r| keep(r)).cloned().collect())
    }

    /// Per-feature mean λ across models, in [`Self::features`] order.
    pub fn feature_means(&self) -> Vec<(String, u8, f64)> {
        self.features()
            .into_iter()
            .map(|(f, d)| {
                let v: Vec<f64> = self.rows.iter().filter(|r| r.feature == f).map(|r| r.lambda).collect();
                let m = v.iter().sum::<f64>() / v.len() as f64;
                (f, d, m)
            })
            .collect()
    }
}
