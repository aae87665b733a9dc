//! Per-(feature, generation) counts and rates per 1000 tokens.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::detect::{count_document, DocCounts};
use super::{Depth, FeatureSpec};
use crate::corpus::{Corpus, GenerationSeries};
use crate::error::{Error, Result};
use crate::io::{read_csv, write_csv};

/// One line of `panel.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub model_id: String,
    pub feature: String,
    pub depth: u8,
    pub generation: u32,
    pub count: u64,
    pub tokens: u64,
    pub rate_per_1000: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatePanel {
    pub model_id: String,
    pub features: Vec<(String, Depth)>,
    /// Token totals per generation.
    pub tokens: Vec<u64>,
    /// `counts[feature][generation]`.
    pub counts: Vec<Vec<u64>>,
    /// Unpaired quote/parenthesis openers, `[feature][generation]`.
    pub unpaired: Vec<Vec<u64>>,
}

impl RatePanel {
    pub fn new(
        model_id: impl Into<String>,
        features: Vec<(String, Depth)>,
        tokens: Vec<u64>,
        counts: Vec<Vec<u64>>,
    ) -> Result<Self> {
        let model_id = model_id.into();
        if tokens.is_empty() || tokens.contains(&0) {
            return Err(Error::InvalidArgument(format!("model {model_id:?}: every generation needs tokens > 0")));
        }
        if counts.len() != features.len() || counts.iter().any(|c| c.len() != tokens.len()) {
            return Err(Error::InvalidArgument(format!("model {model_id:?}: counts shape does not match panel")));
        }
        let unpaired = vec![vec![0; tokens.len()]; features.len()];
        Ok(RatePanel { model_id, features, tokens, counts, unpaired })
    }

    pub fn n_generations(&self) -> usize {
        self.tokens.len()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|(n, _)| n == name)
    }

    pub fn rate(&self, feature: usize, generation: usize) -> f64 {
        1000.0 * self.counts[feature][generation] as f64 / self.tokens[generation] as f64
    }

    /// Generation-0 rate per 1000 tokens.
    pub fn baseline(&self, feature: usize) -> f64 {
        self.rate(feature, 0)
    }

    /// A feature can be normalized only if it occurs at generation 0.
    pub fn usable(&self, feature: usize) -> bool {
        self.counts[feature][0] > 0
    }

    pub fn unusable_features(&self) -> Vec<&str> {
        (0..self.features.len()).filter(|&f| !self.usable(f)).map(|f| self.features[f].0.as_str()).collect()
    }

    pub fn rows(&self) -> Vec<RateRow> {
        let mut out = Vec::with_capacity(self.features.len() * self.tokens.len());
        for (f, (name, depth)) in self.features.iter().enumerate() {
            for g in 0..self.tokens.len() {
                out.push(RateRow {
                    model_id: self.model_id.clone(),
                    feature: name.clone(),
                    depth: depth.get(),
                    generation: g as u32,
                    count: self.counts[f][g],
                    tokens: self.tokens[g],
                    rate_per_1000: self.rate(f, g),
                });
            }
        }
        out
    }

    /// Rebuild panels from `panel.csv` rows, one per model in order of first
    /// appearance.
    pub fn from_rows(rows: &[RateRow]) -> Result<Vec<RatePanel>> {
        let mut models: Vec<String> = Vec::new();
        for r in rows {
            if !models.contains(&r.model_id) {
                models.push(r.model_id.clone());
            }
        }
        models
            .into_iter()
            .map(|m| {
                let mine: Vec<&RateRow> = rows.iter().filter(|r| r.model_id == m).collect();
                let n_gen = mine.iter().map(|r| r.generation as usize + 1).max().unwrap_or(0);
                let mut features: Vec<(String, Depth)> = Vec::new();
                for r in &mine {
                    if !features.iter().any(|(n, _)| n == &r.feature) {
                        features.push((r.feature.clone(), Depth::new(r.depth)?));
                    }
                }
                let mut tokens = vec![0u64; n_gen];
                let mut counts = vec![vec![None; n_gen]; features.len()];
                for r in &mine {
                    let f = features.iter().position(|(n, _)| n == &r.feature).expect("feature registered above");
                    let g = r.generation as usize;
                    if tokens[g] != 0 && tokens[g] != r.tokens {
                        return Err(Error::InvalidArgument(format!(
                            "model {m:?} generation {g}: inconsistent token totals"
                        )));
                    }
                    tokens[g] = r.tokens;
                    if counts[f][g].replace(r.count).is_some() {
                        return Err(Error::InvalidArgument(format!(
                            "model {m:?}: duplicate row for {} generation {g}",
                            r.feature
                        )));
                    }
                }
                let counts = counts
                    .into_iter()
                    .zip(&features)
                    .map(|(c, (name, _))| {
                        c.into_iter()
                            .enumerate()
                            .map(|(g, v)| {
                                v.ok_or_else(|| Error::Series(format!("model {m:?}: {name} missing generation {g}")))
                            })
                            .collect::<Result<Vec<u64>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                RatePanel::new(m, features, tokens, counts)
            })
            .collect()
    }

    pub fn write_csv(panels: &[RatePanel], path: &Path) -> Result<()> {
        let rows: Vec<RateRow> = panels.iter().flat_map(RatePanel::rows).collect();
        write_csv(path, &rows)
    }

    pub fn read_csv(path: &Path) -> Result<Vec<RatePanel>> {
        Self::from_rows(&read_csv(path)?)
    }
}

/// Count every feature in `specs` over one corpus in a single pass.
pub fn extract_rates(corpus: &Corpus, specs: &[FeatureSpec]) -> Result<Vec<DocCounts>> {
    if !corpus.has_parses() {
        if let Some(s) = specs.iter().find(|s| s.rule.requires_parses()) {
            return Err(Error::ParsesRequired(s.name.clone()));
        }
    }
    (0..corpus.len())
        .into_par_iter()
        .map(|i| {
            let view = corpus.doc_view(i);
            specs.iter().map(|s| count_document(s, &view)).collect::<Result<Vec<_>>>()
        })
        .try_reduce(
            || vec![DocCounts::default(); specs.len()],
            |a, b| Ok(a.into_iter().zip(b).map(|(x, y)| x + y).collect()),
        )
}

/// Build the rate panel for every generation of a series.
pub fn extract_panel(series: &GenerationSeries, specs: &[FeatureSpec]) -> Result<RatePanel> {
    let mut counts = vec![Vec::with_capacity(series.corpora().len()); specs.len()];
    let mut unpaired = counts.clone();
    let mut tokens = Vec::with_capacity(series.corpora().len());
    for corpus in series.corpora() {
        let c = extract_rates(corpus, specs)?;
        for (f, dc) in c.into_iter().enumerate() {
            counts[f].push(dc.count);
            unpaired[f].push(dc.unpaired);
        }
        tokens.push(corpus.token_count() as u64);
    }
    let features = specs.iter().map(|s| (s.name.clone(), s.depth)).collect();
    let mut panel = RatePanel::new(series.model_id.clone(), features, tokens, counts)?;
    panel.unpaired = unpaired;
    Ok(panel)
}
