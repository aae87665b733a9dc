//! Minimal CoNLL-U reader and writer.
//!
//! Sentences are bound to documents through a `# doc_id = <id>` comment; the
//! binding stays in force until the next such comment. Multiword-token ranges
//! (`1-2`) and empty nodes (`1.1`) are skipped.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedToken {
    pub surface: String,
    pub lemma: String,
    pub upos: String,
    /// Language-specific tag, `None` when the column is `_`.
    pub xpos: Option<String>,
    /// 0-based index of the head within the sentence, `None` for ROOT.
    pub head: Option<usize>,
    pub deprel: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedSentence {
    pub doc_id: String,
    pub sentence_index: usize,
    pub tokens: Vec<ParsedToken>,
}

impl ParsedSentence {
    /// Check the head graph: indices in range, exactly one root, no cycles.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let n = self.tokens.len();
        if n == 0 {
            return Err("empty sentence".into());
        }
        let mut roots = 0;
        for (i, t) in self.tokens.iter().enumerate() {
            match t.head {
                None => roots += 1,
                Some(h) if h >= n => return Err(format!("token {} head {} out of range", i + 1, h + 1)),
                Some(h) if h == i => return Err(format!("token {} heads itself", i + 1)),
                Some(_) => {}
            }
        }
        if roots != 1 {
            return Err(format!("expected exactly one ROOT, found {roots}"));
        }
        for i in 0..n {
            if self.depth_of(i).is_none() {
                return Err(format!("cycle through token {}", i + 1));
            }
        }
        Ok(())
    }

    /// Number of edges from token `i` to the root, `None` on a cycle.
    pub fn depth_of(&self, i: usize) -> Option<usize> {
        let mut cur = i;
        let mut steps = 0;
        while let Some(h) = self.tokens.get(cur)?.head {
            cur = h;
            steps += 1;
            if steps > self.tokens.len() {
                return None;
            }
        }
        Some(steps)
    }
}

/// Parse CoNLL-U text. `path` is only used in error messages.
pub fn parse_conllu(text: &str, path: &Path) -> Result<Vec<ParsedSentence>> {
    let err = |line: usize, msg: String| Error::MalformedConllu { path: path.to_path_buf(), line, msg };

    let mut out = Vec::new();
    let mut doc_id: Option<String> = None;
    let mut per_doc: std::collections::HashMap<String, usize> = Default::default();
    let mut rows: Vec<(usize, [String; 10])> = Vec::new();
    let mut sent_start = 0;

    let mut flush = |rows: &mut Vec<(usize, [String; 10])>, doc_id: &Option<String>, start: usize| -> Result<()> {
        if rows.is_empty() {
            return Ok(());
        }
        let doc = doc_id.clone().ok_or_else(|| err(start, "sentence before any '# doc_id =' comment".into()))?;
        let mut tokens = Vec::with_capacity(rows.len());
        for (k, (line, cols)) in rows.iter().enumerate() {
            let id: usize = cols[0].parse().map_err(|_| err(*line, format!("bad ID {:?}", cols[0])))?;
            if id != k + 1 {
                return Err(err(*line, format!("expected ID {}, found {}", k + 1, id)));
            }
            let head: usize = cols[6].parse().map_err(|_| err(*line, format!("bad HEAD {:?}", cols[6])))?;
            tokens.push(ParsedToken {
                surface: cols[1].clone(),
                lemma: cols[2].clone(),
                upos: cols[3].clone(),
                xpos: (cols[4] != "_").then(|| cols[4].clone()),
                head: head.checked_sub(1),
                deprel: cols[7].clone(),
            });
        }
        let idx = per_doc.entry(doc.clone()).or_insert(0);
        let sentence = ParsedSentence { doc_id: doc, sentence_index: *idx, tokens };
        *idx += 1;
        sentence.validate().map_err(|m| err(start, m))?;
        out.push(sentence);
        rows.clear();
        Ok(())
    };

    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            flush(&mut rows, &doc_id, sent_start)?;
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                if key.trim() == "doc_id" {
                    flush(&mut rows, &doc_id, sent_start)?;
                    doc_id = Some(value.trim().to_string());
                }
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(err(line_no, format!("expected 10 tab-separated columns, found {}", cols.len())));
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        if rows.is_empty() {
            sent_start = line_no;
        }
        rows.push((line_no, std::array::from_fn(|i| cols[i].to_string())));
    }
    flush(&mut rows, &doc_id, sent_start)?;
    Ok(out)
}

/// Render sentences as CoNLL-U, emitting a `# doc_id` comment whenever the
/// document changes.
pub fn write_conllu(sentences: &[ParsedSentence]) -> String {
    let mut s = String::new();
    let mut current: Option<&str> = None;
    for sent in sentences {
        if current != Some(sent.doc_id.as_str()) {
            let _ = writeln!(s, "# doc_id = {}", sent.doc_id);
            current = Some(&sent.doc_id);
        }
        for (i, t) in sent.tokens.iter().enumerate() {
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}\t_\t{}\t{}\t_\t_",
                i + 1,
                t.surface,
                t.lemma,
                t.upos,
                t.xpos.as_deref().unwrap_or("_"),
                t.head.map_or(0, |h| h + 1),
                t.deprel
            );
        }
        s.push('\n');
    }
    s
}
