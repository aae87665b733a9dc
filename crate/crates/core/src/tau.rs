//! Greedy-to-nucleus rate ratios (τ), sampling dependence σ = 1 − min(τ, 1)
//! and their stability diagnostics.

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, DecodeMode, DecodingParams};
use crate::error::{Error, Result};
use crate::features::{count_document, Depth, FeatureSpec};
use crate::io::{read_csv, write_csv};
use crate::rng::substream;
use crate::stats::{kendall_w, spearman_rho};

/// One line of `tau.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauRow {
    pub model_id: String,
    pub feature: String,
    pub depth: u8,
    /// Rate per 1000 tokens under nucleus sampling.
    pub f_nucleus: f64,
    /// Rate per 1000 tokens under greedy decoding.
    pub f_greedy: f64,
    pub tau: Option<f64>,
    pub sigma: Option<f64>,
    /// False when the nucleus rate is zero and τ is undefined.
    pub defined: bool,
}

impl TauRow {
    pub fn new(model_id: &str, feature: &str, depth: Depth, f_nucleus: f64, f_greedy: f64) -> Self {
        let tau = (f_nucleus > 0.0).then(|| f_greedy / f_nucleus);
        TauRow {
            model_id: model_id.to_string(),
            feature: feature.to_string(),
            depth: depth.get(),
            f_nucleus,
            f_greedy,
            tau,
            sigma: tau.map(sigma_from_tau),
            defined: tau.is_some(),
        }
    }
}

/// σ = 1 − min(τ, 1).
pub fn sigma_from_tau(tau: f64) -> f64 {
    1.0 - tau.min(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauTable {
    pub model_id: String,
    pub rows: Vec<TauRow>,
}

impl TauTable {
    /// Build a table from known rates: `(feature, depth, f_nucleus, f_greedy)`.
    pub fn from_rates(model_id: &str, rates: &[(&str, Depth, f64, f64)]) -> Self {
        TauTable {
            model_id: model_id.to_string(),
            rows: rates.iter().map(|(f, d, n, g)| TauRow::new(model_id, f, *d, *n, *g)).collect(),
        }
    }

    pub fn get(&self, feature: &str) -> Option<&TauRow> {
        self.rows.iter().find(|r| r.feature == feature)
    }

    pub fn tau(&self, feature: &str) -> Option<f64> {
        self.get(feature).and_then(|r| r.tau)
    }

    pub fn undefined_features(&self) -> Vec<&str> {
        self.rows.iter().filter(|r| !r.defined).map(|r| r.feature.as_str()).collect()
    }

    pub fn write_csv(tables: &[TauTable], path: &Path) -> Result<()> {
        let rows: Vec<&TauRow> = tables.iter().flat_map(|t| &t.rows).collect();
        write_csv(path, &rows)
    }

    /// Read `tau.csv`, one table per model in order of first appearance.
    pub fn read_csv(path: &Path) -> Result<Vec<TauTable>> {
        let rows: Vec<TauRow> = read_csv(path)?;
        let mut out: Vec<TauTable> = Vec::new();
        for mut r in rows {
            // recompute derived columns so a hand-edited file stays consistent
            let fresh = TauRow::new(&r.model_id, &r.feature, Depth::new(r.depth)?, r.f_nucleus, r.f_greedy);
            r.tau = fresh.tau;
            r.sigma = fresh.sigma;
            r.defined = fresh.defined;
            match out.iter_mut().find(|t| t.model_id == r.model_id) {
                Some(t) => t.rows.push(r),
                None => out.push(TauTable { model_id: r.model_id.clone(), rows: vec![r] }),
            }
        }
        Ok(out)
    }
}

/// Warnings about a τ corpus pair that do not prevent computation.
pub fn tau_warnings(nucleus: &Corpus, greedy: &Corpus) -> Vec<String> {
    let mut w = Vec::new();
    if nucleus.meta.decode_mode != DecodeMode::Nucleus {
        w.push(format!("nucleus corpus has decode_mode {:?}", nucleus.meta.decode_mode));
    }
    if greedy.meta.decode_mode != DecodeMode::Greedy {
        w.push(format!("greedy corpus has decode_mode {:?}", greedy.meta.decode_mode));
    }
    if nucleus.meta.params != DecodingParams::canonical_nucleus() {
        w.push(format!(
            "nucleus parameters {:?} differ from the canonical T=1.0, top-p=0.95, no top-k, no repetition penalty",
            nucleus.meta.params
        ));
    }
    w
}

/// Per-document counts of every spec, in document order.
fn document_counts(corpus: &Corpus, specs: &[FeatureSpec]) -> Result<Vec<Vec<u64>>> {
    if !corpus.has_parses() {
        if let Some(s) = specs.iter().find(|s| s.rule.requires_parses()) {
            return Err(Error::ParsesRequired(s.name.clone()));
        }
    }
    (0..corpus.len())
        .into_par_iter()
        .map(|i| {
            let v = corpus.doc_view(i);
            specs.iter().map(|s| count_document(s, &v).map(|c| c.count)).collect()
        })
        .collect()
}

/// τ per feature from a nucleus and a greedy corpus of the same model.
pub fn compute_tau(nucleus: &Corpus, greedy: &Corpus, specs: &[FeatureSpec]) -> Result<TauTable> {
    if nucleus.meta.model_id != greedy.meta.model_id {
        return Err(Error::InvalidArgument(format!(
            "τ corpora belong to different models: {:?} vs {:?}",
            nucleus.meta.model_id, greedy.meta.model_id
        )));
    }
    let rates = |c: &Corpus| -> Result<Vec<f64>> {
        let counts = document_counts(c, specs)?;
        let tokens = c.token_count() as f64;
        Ok((0..specs.len()).map(|f| 1000.0 * counts.iter().map(|d| d[f]).sum::<u64>() as f64 / tokens).collect())
    };
    let (rn, rg) = (rates(nucleus)?, rates(greedy)?);
    let model = &nucleus.meta.model_id;
    Ok(TauTable {
        model_id: model.clone(),
        rows: specs.iter().enumerate().map(|(f, s)| TauRow::new(model, &s.name, s.depth, rn[f], rg[f])).collect(),
    })
}

/// Feature counts and token totals aggregated per prompt for both decoders.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptCounts {
    pub features: Vec<String>,
    pub prompts: Vec<String>,
    /// `[prompt][feature]`
    pub nucleus: Vec<Vec<u64>>,
    pub nucleus_tokens: Vec<u64>,
    pub greedy: Vec<Vec<u64>>,
    pub greedy_tokens: Vec<u64>,
}

impl PromptCounts {
    pub fn from_corpora(nucleus: &Corpus, greedy: &Corpus, specs: &[FeatureSpec]) -> Result<Self> {
        let ids = |c: &Corpus| -> Result<Vec<String>> {
            c.documents()
                .iter()
                .map(|d| {
                    d.prompt_id
                        .clone()
                        .ok_or_else(|| Error::InvalidArgument(format!("document {:?} has no prompt_id", d.doc_id)))
                })
                .collect()
        };
        let (pn, pg) = (ids(nucleus)?, ids(greedy)?);
        let prompts: Vec<String> = pn.iter().chain(&pg).cloned().collect::<BTreeSet<_>>().into_iter().collect();
        let fold = |c: &Corpus, p: &[String]| -> Result<(Vec<Vec<u64>>, Vec<u64>)> {
            let counts = document_counts(c, specs)?;
            let mut by = vec![vec![0u64; specs.len()]; prompts.len()];
            let mut tokens = vec![0u64; prompts.len()];
            for ((doc, row), pid) in c.documents().iter().zip(counts).zip(p) {
                let k = prompts.binary_search(pid).expect("prompt collected above");
                tokens[k] += doc.token_count as u64;
                for (a, b) in by[k].iter_mut().zip(row) {
                    *a += b;
                }
            }
            Ok((by, tokens))
        };
        let (nucleus_counts, nucleus_tokens) = fold(nucleus, &pn)?;
        let (greedy_counts, greedy_tokens) = fold(greedy, &pg)?;
        Ok(PromptCounts {
            features: specs.iter().map(|s| s.name.clone()).collect(),
            prompts,
            nucleus: nucleus_counts,
            nucleus_tokens,
            greedy: greedy_counts,
            greedy_tokens,
        })
    }

    /// τ per feature over a subset of prompts; `None` where undefined.
    pub fn tau_over(&self, prompts: &[usize]) -> Vec<Option<f64>> {
        let nt: u64 = prompts.iter().map(|&p| self.nucleus_tokens[p]).sum();
        let gt: u64 = prompts.iter().map(|&p| self.greedy_tokens[p]).sum();
        (0..self.features.len())
            .map(|f| {
                let nc: u64 = prompts.iter().map(|&p| self.nucleus[p][f]).sum();
                let gc: u64 = prompts.iter().map(|&p| self.greedy[p][f]).sum();
                if nc == 0 || nt == 0 || gt == 0 {
                    return None;
                }
                Some((gc as f64 / gt as f64) / (nc as f64 / nt as f64))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfSplitStability {
    /// Concordance of the τ rankings across half-splits.
    pub kendall_w: f64,
    /// Mean Spearman ρ between each half-split ranking and the full ranking.
    pub mean_spearman: f64,
    /// Fraction of (split, feature) cells whose τ ≶ 1 class matches the full set.
    pub binary_agreement: f64,
    pub n_splits: usize,
    /// Splits dropped because some feature had an undefined τ in that half.
    pub n_skipped: usize,
    /// Features excluded because τ is undefined on the full set.
    pub excluded: Vec<String>,
}

/// Rank stability of τ under random halves of the prompt set. Split `k`
/// draws its half from substream `k` of `seed`.
pub fn half_split_stability(counts: &PromptCounts, n_splits: usize, seed: u64) -> Result<HalfSplitStability> {
    let np = counts.prompts.len();
    if np < 2 || n_splits == 0 {
        return Err(Error::InsufficientData("half-splits need >= 2 prompts and >= 1 split".into()));
    }
    let all: Vec<usize> = (0..np).collect();
    let full = counts.tau_over(&all);
    let keep: Vec<usize> = (0..full.len()).filter(|&f| full[f].is_some()).collect();
    let excluded = (0..full.len()).filter(|f| full[*f].is_none()).map(|f| counts.features[f].clone()).collect();
    if keep.len() < 2 {
        return Err(Error::InsufficientData("fewer than 2 features with a defined τ".into()));
    }
    let full_tau: Vec<f64> = keep.iter().map(|&f| full[f].expect("kept")).collect();
    let halves: Vec<Option<Vec<f64>>> = (0..n_splits)
        .into_par_iter()
        .map(|k| {
            let mut rng = substream(seed, k as u64);
            let half = index::sample(&mut rng, np, np / 2).into_vec();
            let t = counts.tau_over(&half);
            keep.iter().map(|&f| t[f]).collect()
        })
        .collect();
    let used: Vec<Vec<f64>> = halves.into_iter().flatten().collect();
    let n_skipped = n_splits - used.len();
    if used.is_empty() {
        return Err(Error::Undefined("τ undefined in every half-split".into()));
    }
    let w = if used.len() >= 2 { kendall_w(&used).unwrap_or(1.0) } else { 1.0 };
    let rhos: Vec<f64> = used.iter().map(|h| spearman_rho(h, &full_tau).unwrap_or(0.0)).collect();
    let agree =
        used.iter().flat_map(|h| h.iter().zip(&full_tau).map(|(a, b)| (*a < 1.0) == (*b < 1.0))).filter(|x| *x).count();
    Ok(HalfSplitStability {
        kendall_w: w,
        mean_spearman: rhos.iter().sum::<f64>() / rhos.len() as f64,
        binary_agreement: agree as f64 / (used.len() * keep.len()) as f64,
        n_splits,
        n_skipped,
        excluded,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauAgreement {
    pub kendall_w: f64,
    /// (model a, model b, Spearman ρ of their τ values).
    pub pairwise: Vec<(String, String, f64)>,
    /// Fraction of (feature, non-reference model) cells whose τ ≶ 1 class
    /// matches the reference table.
    pub binary_agreement: f64,
    pub n_agree: usize,
    pub n_cells: usize,
    /// Features dropped because τ is undefined in some table.
    pub excluded: Vec<String>,
}

/// Concordance of τ rankings across models, with `reference` as the table
/// the binary τ ≶ 1 partition is compared against.
pub fn cross_model_tau_agreement(tables: &[TauTable], reference: usize) -> Result<TauAgreement> {
    if tables.len() < 2 {
        return Err(Error::InsufficientData("τ agreement needs >= 2 tables".into()));
    }
    if reference >= tables.len() {
        return Err(Error::InvalidArgument(format!("reference index {reference} out of range")));
    }
    let names: BTreeSet<&str> = tables[0].rows.iter().map(|r| r.feature.as_str()).collect();
    for t in tables {
        let other: BTreeSet<&str> = t.rows.iter().map(|r| r.feature.as_str()).collect();
        if other != names || t.rows.len() != names.len() {
            return Err(Error::InvalidArgument(format!("τ table for {:?} has a different feature set", t.model_id)));
        }
    }
    let order: Vec<&str> = tables[0].rows.iter().map(|r| r.feature.as_str()).collect();
    let (keep, excluded): (Vec<&str>, Vec<&str>) =
        order.iter().partition(|f| tables.iter().all(|t| t.tau(f).is_some()));
    if keep.len() < 2 {
        return Err(Error::InsufficientData("fewer than 2 features with τ defined in every table".into()));
    }
    let matrix: Vec<Vec<f64>> = tables.iter().map(|t| keep.iter().map(|f| t.tau(f).expect("kept")).collect()).collect();
    let mut pairwise = Vec::new();
    for a in 0..tables.len() {
        for b in a + 1..tables.len() {
            let r = spearman_rho(&matrix[a], &matrix[b]).unwrap_or(f64::NAN);
            pairwise.push((tables[a].model_id.clone(), tables[b].model_id.clone(), r));
        }
    }
    let mut n_agree = 0;
    let mut n_cells = 0;
    for (i, row) in matrix.iter().enumerate() {
        if i == reference {
            continue;
        }
        for (v, r) in row.iter().zip(&matrix[reference]) {
            n_cells += 1;
            if (*v < 1.0) == (*r < 1.0) {
                n_agree += 1;
            }
        }
    }
    Ok(TauAgreement {
        kendall_w: kendall_w(&matrix)?,
        pairwise,
        binary_agreement: n_agree as f64 / n_cells as f64,
        n_agree,
        n_cells,
        excluded: excluded.into_iter().map(String::from).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CorpusMeta, DocumentRecord};
    use crate::features::feature;

    fn d(x: u8) -> Depth {
        Depth::new(x).unwrap()
    }

    #[test]
    fn tau_and_sigma() {
        let r = TauRow::new("m", "discourse_markers", d(0), 1.60, 0.08);
        assert!((r.tau.unwrap() - 0.05).abs() < 1e-12);
        assert!((r.sigma.unwrap() - 0.95).abs() < 1e-12);
        let q = TauRow::new("m", "quotes", d(1), 6.90, 17.10);
        assert!((q.tau.unwrap() - 2.478).abs() < 1e-3);
        assert_eq!(q.sigma, Some(0.0));
        let e = TauRow::new("m", "x", d(1), 3.0, 3.0);
        assert_eq!((e.tau, e.sigma), (Some(1.0), Some(0.0)));
        let u = TauRow::new("m", "x", d(1), 0.0, 3.0);
        assert!(!u.defined);
        assert_eq!(u.sigma, None);
    }

    #[test]
    fn sigma_is_monotone() {
        let mut prev = f64::INFINITY;
        for i in 0..=100 {
            let t = f64::from(i) / 100.0;
            let s = sigma_from_tau(t);
            assert!(s < prev || t == 0.0);
            prev = s;
            assert!((0.0..=1.0).contains(&s));
        }
        assert_eq!(sigma_from_tau(1.5), 0.0);
        // the regression transform −ln(1 + τ) is strictly decreasing
        assert!(-(0.4f64.ln_1p()) > -(0.5f64.ln_1p()));
    }

    fn corpus(mode: DecodeMode, docs: &[(&str, &str)]) -> Corpus {
        let records = docs
            .iter()
            .enumerate()
            .map(|(i, (p, t))| {
                let mut r = DocumentRecord::new(format!("d{i}"), *t);
                r.prompt_id = Some(p.to_string());
                r
            })
            .collect();
        let mut meta = CorpusMeta::new("m", 0, mode);
        meta.params = DecodingParams::canonical_nucleus();
        Corpus::new(meta, records, None).unwrap()
    }

    #[test]
    fn compute_and_duplicate_invariance() {
        let specs = vec![feature("exclamation").unwrap(), feature("question_marks").unwrap()];
        let n = corpus(DecodeMode::Nucleus, &[("a", "Wow ! Really ? Yes ."), ("b", "Hmm ? No .")]);
        let g = corpus(DecodeMode::Greedy, &[("a", "Yes . Yes ."), ("b", "Why ? Why ?")]);
        let t = compute_tau(&n, &g, &specs).unwrap();
        assert_eq!(t.rows[0].f_greedy, 0.0);
        assert_eq!(t.rows[0].tau, Some(0.0));
        assert!(tau_warnings(&n, &g).is_empty());
        let n2 = corpus(
            DecodeMode::Nucleus,
            &[("a", "Wow ! Really ? Yes ."), ("b", "Hmm ? No ."), ("a", "Wow ! Really ? Yes ."), ("b", "Hmm ? No .")],
        );
        let t2 = compute_tau(&n2, &g, &specs).unwrap();
        assert!((t.rows[1].tau.unwrap() - t2.rows[1].tau.unwrap()).abs() < 1e-12);
    }

    #[test]
    fn non_canonical_nucleus_warns() {
        let mut n = corpus(DecodeMode::Nucleus, &[("a", "x .")]);
        n.meta.params = DecodingParams::self_training();
        let g = corpus(DecodeMode::Greedy, &[("a", "x .")]);
        assert_eq!(tau_warnings(&n, &g).len(), 1);
    }

    #[test]
    fn identical_halves_are_perfectly_stable() {
        let specs =
            vec![feature("exclamation").unwrap(), feature("question_marks").unwrap(), feature("colons").unwrap()];
        let docs: Vec<(String, &str)> = (0..8).map(|i| (format!("p{i}"), "A ! B ? C ? D : E .")).collect();
        let gdocs: Vec<(String, &str)> = (0..8).map(|i| (format!("p{i}"), "A ? B : C : D : E .")).collect();
        let nd: Vec<(&str, &str)> = docs.iter().map(|(p, t)| (p.as_str(), *t)).collect();
        let gd: Vec<(&str, &str)> = gdocs.iter().map(|(p, t)| (p.as_str(), *t)).collect();
        let pc =
            PromptCounts::from_corpora(&corpus(DecodeMode::Nucleus, &nd), &corpus(DecodeMode::Greedy, &gd), &specs)
                .unwrap();
        let s = half_split_stability(&pc, 10, 3).unwrap();
        assert!((s.kendall_w - 1.0).abs() < 1e-12);
        assert_eq!(s.binary_agreement, 1.0);
        assert!((s.mean_spearman - 1.0).abs() < 1e-12);
    }

    #[test]
    fn missing_prompt_ids_rejected() {
        let specs = vec![feature("exclamation").unwrap()];
        let n = Corpus::new(CorpusMeta::new("m", 0, DecodeMode::Nucleus), vec![DocumentRecord::new("a", "x !")], None)
            .unwrap();
        assert!(PromptCounts::from_corpora(&n, &n, &specs).is_err());
    }

    #[test]
    fn cross_model_identical_tables() {
        let t = TauTable::from_rates("a", &[("x", d(0), 1.0, 0.2), ("y", d(1), 1.0, 1.5), ("z", d(2), 2.0, 1.0)]);
        let mut u = t.clone();
        u.model_id = "b".into();
        let r = cross_model_tau_agreement(&[t.clone(), u], 0).unwrap();
        assert!((r.kendall_w - 1.0).abs() < 1e-12);
        assert_eq!(r.binary_agreement, 1.0);
        let v = TauTable::from_rates("c", &[("x", d(0), 1.0, 0.2), ("q", d(1), 1.0, 1.5), ("z", d(2), 2.0, 1.0)]);
        assert!(cross_model_tau_agreement(&[t, v], 0).is_err());
    }

    /// Five models whose log τ is a shared profile plus noise of scale `sd`.
    fn noisy_tables(sd: f64, seed: u64) -> Vec<TauTable> {
        use rand_distr::{Distribution, Normal};
        let mut rng = substream(seed, 0);
        let noise = Normal::new(0.0, 1.0).unwrap();
        (0..5)
            .map(|m| {
                let names: Vec<String> = (0..12).map(|f| format!("f{f}")).collect();
                let rates: Vec<(&str, Depth, f64, f64)> = names
                    .iter()
                    .enumerate()
                    .map(|(f, n)| {
                        let log_tau = (f as f64 - 6.0) / 3.0 + sd * noise.sample(&mut rng);
                        (n.as_str(), d((f % 4) as u8), 1.0, log_tau.exp())
                    })
                    .collect();
                TauTable::from_rates(&format!("m{m}"), &rates)
            })
            .collect()
    }

    #[test]
    fn concordance_falls_as_noise_rises() {
        let w: Vec<f64> = [0.0, 0.5, 2.0, 50.0]
            .iter()
            .map(|sd| {
                let reps: Vec<f64> =
                    (0..40).map(|r| cross_model_tau_agreement(&noisy_tables(*sd, r), 0).unwrap().kendall_w).collect();
                reps.iter().sum::<f64>() / reps.len() as f64
            })
            .collect();
        assert!((w[0] - 1.0).abs() < 1e-12);
        assert!(w.windows(2).all(|p| p[1] < p[0]), "{w:?}");
        // pure noise: E[W] = 1/m for m independent random rankings
        assert!((w[3] - 0.2).abs() < 0.05, "{w:?}");
    }
}
