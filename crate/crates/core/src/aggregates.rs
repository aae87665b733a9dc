//! Corpus-level complexity fingerprints.
//!
//! Each metric is a ratio of sums accumulated per document, so corpus
//! duplication and document order leave every value unchanged.

use std::collections::HashMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{is_word, Corpus, DocView, GenerationSeries};
use crate::error::Result;
use crate::io::write_csv;

/// Dependency relations counted as clause embeddings.
pub const CLAUSAL_RELATIONS: [&str; 5] = ["ccomp", "xcomp", "advcl", "relcl", "acl:relcl"];

pub const TTR_WINDOW: usize = 100;

/// Denominator for the hapax ratio.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HapaxBasis {
    /// Hapax types over all types.
    #[default]
    Types,
    /// Hapax types over word tokens.
    Tokens,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub generation: u32,
    /// Mean of (longest root-to-leaf edge count + 1) per sentence.
    pub dep_tree_depth: Option<f64>,
    /// Mean clausal dependents per sentence.
    pub clause_embedding: Option<f64>,
    pub avg_word_length: Option<f64>,
    /// Mean type/token ratio over full 100-word windows, times 100.
    pub ttr_100: Option<f64>,
    /// Per-document hapax ratio, averaged over documents.
    pub hapax_ratio: Option<f64>,
    /// Mean |position - head position| over non-root tokens.
    pub dep_link_length: Option<f64>,
}

impl AggregateRow {
    pub const METRICS: [&'static str; 6] =
        ["dep_tree_depth", "clause_embedding", "avg_word_length", "ttr_100", "hapax_ratio", "dep_link_length"];

    pub fn metric(&self, name: &str) -> Option<f64> {
        match name {
            "dep_tree_depth" => self.dep_tree_depth,
            "clause_embedding" => self.clause_embedding,
            "avg_word_length" => self.avg_word_length,
            "ttr_100" => self.ttr_100,
            "hapax_ratio" => self.hapax_ratio,
            "dep_link_length" => self.dep_link_length,
            _ => None,
        }
    }
}

/// One line of `aggregates.csv`. Absent metrics are written with an empty value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateCsvRow {
    pub model_id: String,
    pub generation: u32,
    pub metric: String,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Sums {
    sentences: u64,
    depth: u64,
    clausal: u64,
    word_chars: u64,
    words: u64,
    windows: u64,
    window_ttr: f64,
    docs_with_words: u64,
    hapax: f64,
    links: u64,
    link_len: u64,
}

impl Sums {
    fn merge(mut self, o: Sums) -> Sums {
        self.sentences += o.sentences;
        self.depth += o.depth;
        self.clausal += o.clausal;
        self.word_chars += o.word_chars;
        self.words += o.words;
        self.windows += o.windows;
        self.window_ttr += o.window_ttr;
        self.docs_with_words += o.docs_with_words;
        self.hapax += o.hapax;
        self.links += o.links;
        self.link_len += o.link_len;
        self
    }
}

fn document_sums(doc: &DocView<'_>, basis: HapaxBasis) -> Sums {
    let mut s = Sums::default();
    let mut lowered: Vec<String> = Vec::new();
    for sent in &doc.sentences {
        s.sentences += 1;
        for t in sent.tokens.iter().filter(|t| is_word(t)) {
            s.word_chars += t.chars().count() as u64;
            s.words += 1;
            lowered.push(t.to_lowercase());
        }
        if let Some(p) = sent.parse {
            let max_edges = (0..p.tokens.len()).filter_map(|i| p.depth_of(i)).max().unwrap_or(0);
            s.depth += max_edges as u64 + 1;
            s.clausal += p.tokens.iter().filter(|t| CLAUSAL_RELATIONS.contains(&t.deprel.as_str())).count() as u64;
            for (i, t) in p.tokens.iter().enumerate() {
                if let Some(h) = t.head {
                    s.links += 1;
                    s.link_len += i.abs_diff(h) as u64;
                }
            }
        }
    }
    for w in lowered.chunks_exact(TTR_WINDOW) {
        let mut types: Vec<&str> = w.iter().map(String::as_str).collect();
        types.sort_unstable();
        types.dedup();
        s.windows += 1;
        s.window_ttr += 100.0 * types.len() as f64 / TTR_WINDOW as f64;
    }
    if !lowered.is_empty() {
        let mut freq: HashMap<&str, u64> = HashMap::new();
        for w in &lowered {
            *freq.entry(w).or_default() += 1;
        }
        let hapax = freq.values().filter(|&&c| c == 1).count() as f64;
        let denom = match basis {
            HapaxBasis::Types => freq.len(),
            HapaxBasis::Tokens => lowered.len(),
        };
        s.docs_with_words += 1;
        s.hapax += hapax / denom as f64;
    }
    s
}

fn ratio(num: f64, den: u64) -> Option<f64> {
    (den > 0).then(|| num / den as f64)
}

pub fn compute_aggregates(corpus: &Corpus) -> AggregateRow {
    compute_aggregates_with(corpus, HapaxBasis::default())
}

pub fn compute_aggregates_with(corpus: &Corpus, basis: HapaxBasis) -> AggregateRow {
    // Collected in document order so the float sums are reproducible.
    let per_doc: Vec<Sums> =
        (0..corpus.len()).into_par_iter().map(|i| document_sums(&corpus.doc_view(i), basis)).collect();
    let s = per_doc.into_iter().fold(Sums::default(), Sums::merge);
    let parsed = corpus.has_parses();
    AggregateRow {
        generation: corpus.meta.generation,
        dep_tree_depth: ratio(s.depth as f64, s.sentences).filter(|_| parsed),
        clause_embedding: ratio(s.clausal as f64, s.sentences).filter(|_| parsed),
        avg_word_length: ratio(s.word_chars as f64, s.words),
        ttr_100: ratio(s.window_ttr, s.windows),
        hapax_ratio: ratio(s.hapax, s.docs_with_words),
        dep_link_length: ratio(s.link_len as f64, s.links).filter(|_| parsed),
    }
}

pub fn series_aggregates(series: &GenerationSeries, basis: HapaxBasis) -> Vec<AggregateRow> {
    series.corpora().iter().map(|c| compute_aggregates_with(c, basis)).collect()
}

/// Percent change of each metric from the first to the last row.
pub fn aggregate_change(first: &AggregateRow, last: &AggregateRow) -> Vec<(&'static str, Option<f64>)> {
    AggregateRow::METRICS
        .iter()
        .map(|&m| {
            let d = match (first.metric(m), last.metric(m)) {
                (Some(a), Some(b)) if a != 0.0 => Some(100.0 * (b - a) / a),
                _ => None,
            };
            (m, d)
        })
        .collect()
}

pub fn csv_rows(model_id: &str, rows: &[AggregateRow]) -> Vec<AggregateCsvRow> {
    rows.iter()
        .flat_map(|r| {
            AggregateRow::METRICS.iter().map(move |&m| AggregateCsvRow {
                model_id: model_id.to_string(),
                generation: r.generation,
                metric: m.to_string(),
                value: r.metric(m),
            })
        })
        .collect()
}

pub fn write_aggregates(path: &Path, rows: &[AggregateCsvRow]) -> Result<()> {
    write_csv(path, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CorpusMeta, DecodeMode, DocumentRecord, ParsedSentence, ParsedToken};

    fn corpus(texts: &[&str]) -> Corpus {
        let docs = texts.iter().enumerate().map(|(i, t)| DocumentRecord::new(format!("d{i}"), *t)).collect();
        Corpus::new(CorpusMeta::new("m", 0, DecodeMode::Nucleus), docs, None).unwrap()
    }

    fn tok(surface: &str, head: Option<usize>, deprel: &str) -> ParsedToken {
        ParsedToken {
            surface: surface.into(),
            lemma: surface.to_lowercase(),
            upos: "X".into(),
            xpos: None,
            head,
            deprel: deprel.into(),
        }
    }

    #[test]
    fn flat_parse_depths() {
        // "A B ." with A as root, B and "." attached to A: one edge deep
        let s = ParsedSentence {
            doc_id: "d0".into(),
            sentence_index: 0,
            tokens: vec![tok("A", None, "root"), tok("B", Some(0), "dep"), tok(".", Some(0), "punct")],
        };
        let c = Corpus::new(
            CorpusMeta::new("m", 0, DecodeMode::Nucleus),
            vec![DocumentRecord::new("d0", "A B.")],
            Some(vec![s]),
        )
        .unwrap();
        let a = compute_aggregates(&c);
        assert_eq!(a.dep_tree_depth, Some(2.0));
        assert_eq!(a.clause_embedding, Some(0.0));
        assert_eq!(a.dep_link_length, Some(1.5));
    }

    #[test]
    fn chain_parse_depth_and_clauses() {
        // root <- x (ccomp) <- y (advcl): two edges deep
        let s = ParsedSentence {
            doc_id: "d0".into(),
            sentence_index: 0,
            tokens: vec![tok("a", None, "root"), tok("b", Some(0), "ccomp"), tok("c", Some(1), "advcl")],
        };
        let c = Corpus::new(
            CorpusMeta::new("m", 0, DecodeMode::Nucleus),
            vec![DocumentRecord::new("d0", "a b c")],
            Some(vec![s]),
        )
        .unwrap();
        let a = compute_aggregates(&c);
        assert_eq!(a.dep_tree_depth, Some(3.0));
        assert_eq!(a.clause_embedding, Some(2.0));
    }

    #[test]
    fn all_distinct_window_is_maximal() {
        let words: Vec<String> = (0..100).map(|i| format!("w{i}")).collect();
        let text = words.join(" ");
        let a = compute_aggregates(&corpus(&[&text]));
        assert_eq!(a.ttr_100, Some(100.0));
        assert_eq!(a.hapax_ratio, Some(1.0));
    }

    #[test]
    fn repeated_word_is_minimal() {
        let text = vec!["cat"; 200].join(" ");
        let a = compute_aggregates(&corpus(&[&text]));
        assert_eq!(a.ttr_100, Some(1.0));
        assert_eq!(a.hapax_ratio, Some(0.0));
        assert_eq!(a.avg_word_length, Some(3.0));
    }

    #[test]
    fn short_tail_windows_are_discarded() {
        let text = vec!["cat"; 150].join(" ");
        let a = compute_aggregates(&corpus(&[&text]));
        assert_eq!(a.ttr_100, Some(1.0));
        assert_eq!(compute_aggregates(&corpus(&["too short"])).ttr_100, None);
    }

    #[test]
    fn dependency_metrics_absent_without_parses() {
        let a = compute_aggregates(&corpus(&["Plain text here."]));
        assert_eq!(a.dep_tree_depth, None);
        assert_eq!(a.clause_embedding, None);
        assert_eq!(a.dep_link_length, None);
        assert!(a.avg_word_length.is_some());
    }

    #[test]
    fn duplication_and_order_invariance() {
        let a: Vec<String> = (0..130).map(|i| format!("w{}", i % 70)).collect();
        let b: Vec<String> = (0..240).map(|i| format!("v{}", i % 13)).collect();
        let (a, b) = (a.join(" "), b.join(" "));
        let base = compute_aggregates(&corpus(&[&a, &b]));
        let swapped = compute_aggregates(&corpus(&[&b, &a]));
        let doubled = compute_aggregates(&corpus(&[&a, &b, &a, &b]));
        for m in AggregateRow::METRICS {
            let x = base.metric(m);
            assert_eq!(x.map(|v| v.to_bits()), swapped.metric(m).map(|v| v.to_bits()), "{m}");
            match (x, doubled.metric(m)) {
                (Some(x), Some(y)) => assert!((x - y).abs() < 1e-12, "{m}"),
                (x, y) => assert_eq!(x, y, "{m}"),
            }
        }
    }

    #[test]
    fn token_basis_hapax() {
        let a = compute_aggregates_with(&corpus(&["a a b c"]), HapaxBasis::Tokens);
        assert_eq!(a.hapax_ratio, Some(0.5));
        let a = compute_aggregates_with(&corpus(&["a a b c"]), HapaxBasis::Types);
        assert!((a.hapax_ratio.unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn change_between_rows() {
        let mut a = compute_aggregates(&corpus(&["cat dog"]));
        let mut b = a.clone();
        a.avg_word_length = Some(4.0);
        b.avg_word_length = Some(5.0);
        let d = aggregate_change(&a, &b);
        assert_eq!(d.iter().find(|(m, _)| *m == "avg_word_length").unwrap().1, Some(25.0));
        assert_eq!(d.iter().find(|(m, _)| *m == "dep_tree_depth").unwrap().1, None);
    }
}
