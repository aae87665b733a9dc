//! Generation-stamped corpora and their optional dependency parses.
//!
//! On disk a corpus is a directory holding `documents.jsonl` (one
//! `{"doc_id", "text"}` object per line), `meta.json` and optionally
//! `parses.conllu`. A model's generations live under
//! `<root>/<model_id>/gen<k>/`.

pub mod conllu;
pub mod tokenize;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use rand::seq::index;
use serde::{Deserialize, Serialize};

pub use conllu::{ParsedSentence, ParsedToken};
pub use tokenize::{is_word, split_sentences, tokenize};

use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::rng::substream;

pub const DOCUMENTS_FILE: &str = "documents.jsonl";
pub const META_FILE: &str = "meta.json";
pub const PARSES_FILE: &str = "parses.conllu";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeMode {
    Nucleus,
    Greedy,
    Ancestral,
    TightNucleus,
    HumanControl,
}

/// Decoding parameters recorded with a corpus. Absent keys mean "not used".
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecodingParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_k: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repetition_penalty: Option<f64>,
}

impl DecodingParams {
    /// The self-training decoder: top-p 0.95, T 0.9, top-k 50, repetition penalty 1.1.
    pub fn self_training() -> Self {
        DecodingParams { top_p: Some(0.95), temperature: Some(0.9), top_k: Some(50), repetition_penalty: Some(1.1) }
    }

    /// Canonical nucleus baseline for greedy/nucleus ratios: T 1.0, top-p 0.95,
    /// no top-k, no repetition penalty.
    pub fn canonical_nucleus() -> Self {
        DecodingParams { top_p: Some(0.95), temperature: Some(1.0), top_k: None, repetition_penalty: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusMeta {
    pub model_id: String,
    pub generation: u32,
    pub decode_mode: DecodeMode,
    pub seed: u64,
    #[serde(default)]
    pub params: DecodingParams,
}

impl CorpusMeta {
    pub fn new(model_id: impl Into<String>, generation: u32, decode_mode: DecodeMode) -> Self {
        CorpusMeta { model_id: model_id.into(), generation, decode_mode, seed: 0, params: DecodingParams::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.model_id.trim().is_empty() {
            return Err(Error::InvalidMeta("model_id is empty".into()));
        }
        if self.model_id.contains(['/', '\\']) {
            return Err(Error::InvalidMeta(format!("model_id {:?} contains a path separator", self.model_id)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentRecord {
    pub doc_id: String,
    pub text: String,
    /// Optional prompt identifier, used by prompt half-split analyses.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_id: Option<String>,
    #[serde(skip)]
    pub token_count: usize,
}

impl DocumentRecord {
    pub fn new(doc_id: impl Into<String>, text: impl Into<String>) -> Self {
        DocumentRecord { doc_id: doc_id.into(), text: text.into(), prompt_id: None, token_count: 0 }
    }
}

/// One sentence as seen by the detectors: its tokens and, when available,
/// the dependency parse they came from.
#[derive(Debug, Clone)]
pub struct SentenceView<'a> {
    pub tokens: Vec<&'a str>,
    pub parse: Option<&'a ParsedSentence>,
}

#[derive(Debug, Clone)]
pub struct DocView<'a> {
    pub text: &'a str,
    pub sentences: Vec<SentenceView<'a>>,
}

impl DocView<'_> {
    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(|s| s.tokens.len()).sum()
    }
}

/// A validated, immutable corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub meta: CorpusMeta,
    documents: Vec<DocumentRecord>,
    /// Parses grouped per document, aligned with `documents`.
    parses: Option<Vec<Vec<ParsedSentence>>>,
}

impl Corpus {
    /// Build a corpus from in-memory records, validating every invariant that
    /// [`ingest_corpus`] checks.
    pub fn new(meta: CorpusMeta, documents: Vec<DocumentRecord>, parses: Option<Vec<ParsedSentence>>) -> Result<Self> {
        meta.validate()?;
        let mut seen = HashSet::with_capacity(documents.len());
        for d in &documents {
            if d.doc_id.is_empty() {
                return Err(Error::InvalidMeta("document with empty doc_id".into()));
            }
            if d.text.trim().is_empty() {
                return Err(Error::EmptyDocument { doc_id: d.doc_id.clone() });
            }
            if !seen.insert(d.doc_id.as_str()) {
                return Err(Error::DuplicateDocId(d.doc_id.clone()));
            }
        }
        let grouped = match parses {
            None => None,
            Some(sentences) => {
                let pos: HashMap<&str, usize> =
                    documents.iter().enumerate().map(|(i, d)| (d.doc_id.as_str(), i)).collect();
                let mut grouped: Vec<Vec<ParsedSentence>> = vec![Vec::new(); documents.len()];
                for s in sentences {
                    let i = *pos.get(s.doc_id.as_str()).ok_or_else(|| Error::OrphanParse(s.doc_id.clone()))?;
                    grouped[i].push(s);
                }
                if let Some(i) = grouped.iter().position(Vec::is_empty) {
                    return Err(Error::InvalidMeta(format!(
                        "parses present but document {:?} has no parsed sentences",
                        documents[i].doc_id
                    )));
                }
                Some(grouped)
            }
        };
        let mut corpus = Corpus { meta, documents, parses: grouped };
        for i in 0..corpus.documents.len() {
            let n = corpus.doc_view(i).token_count();
            corpus.documents[i].token_count = n;
        }
        Ok(corpus)
    }

    pub fn documents(&self) -> &[DocumentRecord] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn has_parses(&self) -> bool {
        self.parses.is_some()
    }

    pub fn token_count(&self) -> usize {
        self.documents.iter().map(|d| d.token_count).sum()
    }

    /// All parsed sentences in document order, if parses are present.
    pub fn parses(&self) -> Option<impl Iterator<Item = &ParsedSentence>> {
        self.parses.as_ref().map(|g| g.iter().flatten())
    }

    /// Sentence/token view of document `i`. Parses, when present, define the
    /// tokenization; otherwise the built-in splitter and tokenizer are used.
    pub fn doc_view(&self, i: usize) -> DocView<'_> {
        let doc = &self.documents[i];
        let sentences = match &self.parses {
            Some(g) => g[i]
                .iter()
                .map(|s| SentenceView { tokens: s.tokens.iter().map(|t| t.surface.as_str()).collect(), parse: Some(s) })
                .collect(),
            None => split_sentences(&doc.text)
                .into_iter()
                .map(|r| SentenceView { tokens: tokenize(&doc.text[r]), parse: None })
                .collect(),
        };
        DocView { text: &doc.text, sentences }
    }

    /// Seeded subsample of `n` documents drawn without replacement; document
    /// order is preserved. Returns a clone when `n >= len`.
    pub fn subsample(&self, n: usize, seed: u64) -> Corpus {
        if n >= self.documents.len() {
            return self.clone();
        }
        let mut rng = substream(seed, 0);
        let mut picked = index::sample(&mut rng, self.documents.len(), n).into_vec();
        picked.sort_unstable();
        Corpus {
            meta: self.meta.clone(),
            documents: picked.iter().map(|&i| self.documents[i].clone()).collect(),
            parses: self.parses.as_ref().map(|g| picked.iter().map(|&i| g[i].clone()).collect()),
        }
    }

    /// Write the corpus in interchange layout under `dir`.
    pub fn export(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
        let mut jsonl = String::new();
        for d in &self.documents {
            jsonl.push_str(&serde_json::to_string(d)?);
            jsonl.push('\n');
        }
        write_atomic(&dir.join(DOCUMENTS_FILE), jsonl.as_bytes())?;
        write_atomic(&dir.join(META_FILE), serde_json::to_string_pretty(&self.meta)?.as_bytes())?;
        if let Some(g) = &self.parses {
            let flat: Vec<ParsedSentence> = g.iter().flatten().cloned().collect();
            write_atomic(&dir.join(PARSES_FILE), conllu::write_conllu(&flat).as_bytes())?;
        }
        Ok(())
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))
}

fn read_documents(path: &Path) -> Result<Vec<DocumentRecord>> {
    let file = fs::File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    let mut docs = Vec::new();
    for (k, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: DocumentRecord = serde_json::from_str(&line).map_err(|e| Error::MalformedJsonl {
            path: path.to_path_buf(),
            line: k + 1,
            msg: e.to_string(),
        })?;
        docs.push(doc);
    }
    Ok(docs)
}

/// Ingest the corpus in `dir` under the given metadata.
pub fn ingest_corpus(dir: &Path, meta: CorpusMeta) -> Result<Corpus> {
    let documents = read_documents(&dir.join(DOCUMENTS_FILE))?;
    let parses_path = dir.join(PARSES_FILE);
    let parses =
        if parses_path.exists() { Some(conllu::parse_conllu(&read_text(&parses_path)?, &parses_path)?) } else { None };
    Corpus::new(meta, documents, parses)
}

pub fn read_meta(dir: &Path) -> Result<CorpusMeta> {
    let path = dir.join(META_FILE);
    let meta: CorpusMeta =
        serde_json::from_str(&read_text(&path)?).map_err(|e| Error::InvalidMeta(format!("{}: {e}", path.display())))?;
    meta.validate()?;
    Ok(meta)
}

/// Ingest a corpus directory using its own `meta.json`.
pub fn load_corpus(dir: &Path) -> Result<Corpus> {
    let meta = read_meta(dir)?;
    ingest_corpus(dir, meta)
}

/// Generations `0..=T` of one model, in order.
#[derive(Debug, Clone)]
pub struct GenerationSeries {
    pub model_id: String,
    corpora: Vec<Corpus>,
}

impl GenerationSeries {
    pub fn new(model_id: impl Into<String>, corpora: Vec<Corpus>) -> Result<Self> {
        let model_id = model_id.into();
        if corpora.len() < 2 {
            return Err(Error::Series(format!("model {model_id:?}: need generations 0..T with T >= 1")));
        }
        for (k, c) in corpora.iter().enumerate() {
            if c.meta.generation as usize != k {
                return Err(Error::Series(format!(
                    "model {model_id:?}: missing generation {k} (found {})",
                    c.meta.generation
                )));
            }
            if c.meta.model_id != model_id {
                return Err(Error::Series(format!(
                    "generation {k} belongs to model {:?}, expected {model_id:?}",
                    c.meta.model_id
                )));
            }
        }
        Ok(GenerationSeries { model_id, corpora })
    }

    pub fn corpora(&self) -> &[Corpus] {
        &self.corpora
    }

    /// Index of the last generation, `T`.
    pub fn last_generation(&self) -> usize {
        self.corpora.len() - 1
    }
}

fn generation_dirs(model_dir: &Path) -> Result<BTreeMap<u32, PathBuf>> {
    let mut out = BTreeMap::new();
    let entries = fs::read_dir(model_dir).map_err(|e| Error::io(format!("listing {}", model_dir.display()), e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(format!("listing {}", model_dir.display()), e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(k) = name.strip_prefix("gen").and_then(|s| s.parse::<u32>().ok()) {
            if entry.path().is_dir() {
                out.insert(k, entry.path());
            }
        }
    }
    Ok(out)
}

/// Load `<root>/<model_id>/gen0..genT`, checking that generations are
/// contiguous and that every `meta.json` agrees with its location.
pub fn load_series(root: &Path, model_id: &str) -> Result<GenerationSeries> {
    let dirs = generation_dirs(&root.join(model_id))?;
    let mut corpora = Vec::with_capacity(dirs.len());
    for (expected, (k, dir)) in dirs.into_iter().enumerate() {
        if k as usize != expected {
            return Err(Error::Series(format!("model {model_id:?}: missing generation {expected}")));
        }
        let meta = read_meta(&dir)?;
        if meta.generation != k || meta.model_id != model_id {
            return Err(Error::Series(format!(
                "{}: meta.json says model {:?} generation {}",
                dir.display(),
                meta.model_id,
                meta.generation
            )));
        }
        corpora.push(ingest_corpus(&dir, meta)?);
    }
    GenerationSeries::new(model_id, corpora)
}

/// Model directories under `root` that contain at least a `gen0` directory,
/// sorted by name.
pub fn discover_models(root: &Path) -> Result<Vec<String>> {
    let entries = fs::read_dir(root).map_err(|e| Error::io(format!("listing {}", root.display()), e))?;
    let mut models = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(format!("listing {}", root.display()), e))?;
        if entry.path().join("gen0").is_dir() {
            models.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    models.sort();
    Ok(models)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> CorpusMeta {
        CorpusMeta::new("m", 0, DecodeMode::Nucleus)
    }

    fn write(dir: &Path, name: &str, body: &str) {
        fs::write(dir.join(name), body).unwrap();
    }

    #[test]
    fn ingests_three_records_without_parses() {
        let tmp = tempfile::tempdir().unwrap();
        write(
            tmp.path(),
            DOCUMENTS_FILE,
            "{\"doc_id\":\"a\",\"text\":\"One two.\"}\n{\"doc_id\":\"b\",\"text\":\"Three!\"}\n{\"doc_id\":\"c\",\"text\":\"x\"}\n",
        );
        let c = ingest_corpus(tmp.path(), meta()).unwrap();
        assert_eq!(c.len(), 3);
        assert!(!c.has_parses());
        assert_eq!(c.documents()[0].token_count, 3);
        assert_eq!(c.token_count(), 6);
    }

    #[test]
    fn empty_text_is_rejected() {
        let e = Corpus::new(meta(), vec![DocumentRecord::new("a", "")], None).unwrap_err();
        assert!(e.to_string().contains("empty document"), "{e}");
    }

    #[test]
    fn duplicate_doc_id_is_rejected() {
        let docs = vec![DocumentRecord::new("a", "x"), DocumentRecord::new("a", "y")];
        assert!(matches!(Corpus::new(meta(), docs, None), Err(Error::DuplicateDocId(_))));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let tmp = tempfile::tempdir().unwrap();
        write(tmp.path(), DOCUMENTS_FILE, "{\"doc_id\":\"a\",\"text\":\"x\"}\n{not json}\n");
        let e = ingest_corpus(tmp.path(), meta()).unwrap_err();
        assert!(matches!(e, Error::MalformedJsonl { line: 2, .. }), "{e}");
    }

    #[test]
    fn orphan_parse_is_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        write(tmp.path(), DOCUMENTS_FILE, "{\"doc_id\":\"a\",\"text\":\"x\"}\n");
        write(tmp.path(), PARSES_FILE, "# doc_id = zz\n1\tx\tx\tX\t_\t_\t0\troot\t_\t_\n\n");
        assert!(matches!(ingest_corpus(tmp.path(), meta()), Err(Error::OrphanParse(id)) if id == "zz"));
    }

    #[test]
    fn parse_tokenization_overrides_builtin() {
        let tmp = tempfile::tempdir().unwrap();
        write(tmp.path(), DOCUMENTS_FILE, "{\"doc_id\":\"a\",\"text\":\"don't stop\"}\n");
        write(
            tmp.path(),
            PARSES_FILE,
            "# doc_id = a\n1\tdo\tdo\tAUX\t_\t_\t3\taux\t_\t_\n2\tn't\tnot\tPART\t_\t_\t3\tadvmod\t_\t_\n3\tstop\tstop\tVERB\t_\t_\t0\troot\t_\t_\n\n",
        );
        let c = ingest_corpus(tmp.path(), meta()).unwrap();
        assert_eq!(c.token_count(), 3);
        let sum: usize = c.parses().unwrap().map(|s| s.tokens.len()).sum();
        assert_eq!(sum, c.token_count());
    }

    #[test]
    fn meta_uses_exact_keys() {
        let mut m = meta();
        m.params = DecodingParams::self_training();
        let json = serde_json::to_value(&m).unwrap();
        let mut keys: Vec<&str> = json.as_object().unwrap().keys().map(String::as_str).collect();
        keys.sort_unstable();
        assert_eq!(keys, vec!["decode_mode", "generation", "model_id", "params", "seed"]);
        assert_eq!(json["decode_mode"], "nucleus");
        let bad = r#"{"model_id":"m","generation":0,"decode_mode":"beam","seed":1,"params":{}}"#;
        assert!(serde_json::from_str::<CorpusMeta>(bad).is_err());
    }

    #[test]
    fn subsample_is_seeded_and_without_replacement() {
        let docs: Vec<_> = (0..50).map(|i| DocumentRecord::new(format!("d{i}"), "word")).collect();
        let c = Corpus::new(meta(), docs, None).unwrap();
        let a = c.subsample(20, 7);
        let b = c.subsample(20, 7);
        assert_eq!(a, b);
        let ids: HashSet<_> = a.documents().iter().map(|d| &d.doc_id).collect();
        assert_eq!(ids.len(), 20);
        assert_ne!(a, c.subsample(20, 8));
    }

    #[test]
    fn series_requires_contiguous_generations() {
        let mk = |g| {
            Corpus::new(CorpusMeta::new("m", g, DecodeMode::Nucleus), vec![DocumentRecord::new("a", "x")], None)
                .unwrap()
        };
        assert!(GenerationSeries::new("m", vec![mk(0), mk(1)]).is_ok());
        assert!(GenerationSeries::new("m", vec![mk(0), mk(2)]).is_err());
        assert!(GenerationSeries::new("m", vec![mk(0)]).is_err());
    }
}
