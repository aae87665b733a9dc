//! Per-document feature detectors.
//!
//! Every detector is local to a document, so corpus counts are plain sums
//! and concatenating corpora adds their counts.

use std::collections::BTreeSet;

use rayon::prelude::*;

use super::lexicon::{
    Lexicon, BE_FORMS, CLOSED_ADVERBS, ED_STOPLIST, IRREGULAR_PAST, MANDATIVE_TRIGGERS, MODAL_HEDGES,
    RELATIVE_PRONOUNS, SUBJECT_PRONOUNS,
};
use super::{FeatureSpec, Rule};
use crate::corpus::{is_word, Corpus, DocView, ParsedToken, SentenceView};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DocCounts {
    pub count: u64,
    /// Unpaired openers seen by the pairing detectors (quotes, parentheses).
    pub unpaired: u64,
}

impl std::ops::Add for DocCounts {
    type Output = DocCounts;
    fn add(self, o: DocCounts) -> DocCounts {
        DocCounts { count: self.count + o.count, unpaired: self.unpaired + o.unpaired }
    }
}

/// Count `spec` in one document.
pub fn count_document(spec: &FeatureSpec, doc: &DocView<'_>) -> Result<DocCounts> {
    if spec.rule.requires_parses() && doc.sentences.iter().any(|s| s.parse.is_none()) {
        return Err(Error::ParsesRequired(spec.name.clone()));
    }
    let per_sentence = |f: &dyn Fn(&SentenceView<'_>) -> u64| -> DocCounts {
        DocCounts { count: doc.sentences.iter().map(f).sum(), unpaired: 0 }
    };
    let counts = match &spec.rule {
        Rule::Lexicon(lex) => per_sentence(&|s| words(s).filter(|(_, w)| lex.contains(w)).count() as u64),
        Rule::Hedges(lex) => per_sentence(&|s| hedges(s, lex)),
        Rule::LowercaseWords(set) => {
            per_sentence(&|s| words(s).filter(|(_, w)| set.iter().any(|x| x == w)).count() as u64)
        }
        Rule::EmDash => DocCounts { count: em_dashes(doc.text), unpaired: 0 },
        Rule::Char(c) => DocCounts { count: doc.text.chars().filter(|x| x == c).count() as u64, unpaired: 0 },
        Rule::PairedQuotes => paired_quotes(doc.text),
        Rule::PairedParentheses => paired_parentheses(doc.text),
        Rule::RegularPast => per_sentence(&|s| words(s).filter(|(_, w)| is_regular_past(w)).count() as u64),
        Rule::IrregularPast => per_sentence(&|s| words(s).filter(|(_, w)| IRREGULAR_PAST.contains(w)).count() as u64),
        Rule::Passive => per_sentence(&passives),
        Rule::Subjunctive => per_sentence(&subjunctives),
        Rule::SentenceInitial(set) => {
            per_sentence(&|s| u64::from(words(s).next().is_some_and(|(_, w)| set.iter().any(|x| x == w))))
        }
        Rule::DepRelation(rels) => per_sentence(&|s| {
            s.parse.map_or(0, |p| p.tokens.iter().filter(|t| rels.iter().any(|r| r == &t.deprel)).count() as u64)
        }),
        Rule::Gerund => {
            per_sentence(&|s| s.parse.map_or(0, |p| p.tokens.iter().filter(|t| is_gerund(t)).count() as u64))
        }
        Rule::Infinitival => per_sentence(&infinitivals),
        Rule::Cleft => per_sentence(&clefts),
        Rule::LongWords(min) => per_sentence(&|s| words(s).filter(|(_, w)| w.chars().count() >= *min).count() as u64),
        Rule::Ellipsis => DocCounts { count: ellipses(doc.text), unpaired: 0 },
    };
    Ok(counts)
}

/// Count `spec` over the whole corpus. Returns the count and the corpus
/// token total used as the rate denominator.
pub fn detect_feature(spec: &FeatureSpec, corpus: &Corpus) -> Result<(u64, u64)> {
    if spec.rule.requires_parses() && !corpus.has_parses() {
        return Err(Error::ParsesRequired(spec.name.clone()));
    }
    let total = (0..corpus.len())
        .into_par_iter()
        .map(|i| count_document(spec, &corpus.doc_view(i)))
        .try_reduce(DocCounts::default, |a, b| Ok(a + b))?;
    Ok((total.count, corpus.token_count() as u64))
}

/// Word tokens of a sentence with their position in the full token list.
fn words<'a>(s: &'a SentenceView<'a>) -> impl Iterator<Item = (usize, &'a str)> + 'a {
    s.tokens.iter().copied().enumerate().filter(|(_, t)| is_word(t))
}

fn lower_words(s: &SentenceView<'_>) -> Vec<(usize, String)> {
    words(s).map(|(i, w)| (i, w.to_lowercase())).collect()
}

fn parse_token<'a>(s: &SentenceView<'a>, i: usize) -> Option<&'a ParsedToken> {
    s.parse.and_then(|p| p.tokens.get(i))
}

fn hedges(s: &SentenceView<'_>, lex: &Lexicon) -> u64 {
    let mut n = 0;
    for (k, (_, w)) in words(s).enumerate() {
        if MODAL_HEDGES.iter().any(|m| m.eq_ignore_ascii_case(w)) {
            if k > 0 && MODAL_HEDGES.contains(&w) {
                n += 1;
            }
        } else if lex.contains(w) {
            n += 1;
        }
    }
    n
}

fn is_regular_past(w: &str) -> bool {
    let lw = w.to_lowercase();
    lw.chars().count() >= 4 && lw.ends_with("ed") && !IRREGULAR_PAST.contains(&lw) && !ED_STOPLIST.contains(&lw)
}

fn is_participle(w: &str) -> bool {
    let lw = w.to_lowercase();
    lw.chars().count() >= 3 && lw.ends_with("ed") && !ED_STOPLIST.contains(&lw)
}

fn is_adverb(s: &SentenceView<'_>, i: usize) -> bool {
    if let Some(t) = parse_token(s, i) {
        return t.upos == "ADV";
    }
    let w = s.tokens[i].to_lowercase();
    (w.len() > 3 && w.ends_with("ly")) || CLOSED_ADVERBS.contains(&w.as_str())
}

fn passives(s: &SentenceView<'_>) -> u64 {
    let toks = &s.tokens;
    let mut n = 0;
    let mut i = 0;
    while i < toks.len() {
        let w = toks[i].to_lowercase();
        if BE_FORMS.contains(&w.as_str()) {
            let next = i + 1;
            let hit = if next < toks.len() && is_participle(toks[next]) {
                Some(next)
            } else if next + 1 < toks.len() && is_adverb(s, next) && is_participle(toks[next + 1]) {
                Some(next + 1)
            } else {
                None
            };
            if let Some(end) = hit {
                n += 1;
                i = end + 1;
                continue;
            }
        }
        i += 1;
    }
    n
}

fn is_noun(s: &SentenceView<'_>, i: usize) -> bool {
    parse_token(s, i).is_some_and(|t| t.upos == "NOUN" || t.upos == "PROPN")
}

fn is_base_verb(s: &SentenceView<'_>, i: usize) -> bool {
    parse_token(s, i).is_some_and(|t| {
        (t.upos == "VERB" || t.upos == "AUX")
            && match &t.xpos {
                Some(x) => x == "VB",
                None => t.lemma.to_lowercase() == t.surface.to_lowercase(),
            }
    })
}

/// Union of three subjunctive patterns, deduplicated by anchor token:
/// "if" ... "were" within six words; "were" + subject + "to"; and a
/// mandative verb + "that" + subject + bare verb (or "be") within eight words.
fn subjunctives(s: &SentenceView<'_>) -> u64 {
    let w = lower_words(s);
    let mut anchors = BTreeSet::new();
    for (k, (_, word)) in w.iter().enumerate() {
        match word.as_str() {
            "if" => {
                if let Some((pos, _)) = w.iter().skip(k + 1).take(6).find(|(_, x)| x == "were") {
                    anchors.insert(*pos);
                }
            }
            "were" => {
                if let (Some((subj_pos, subj)), Some((_, to))) = (w.get(k + 1), w.get(k + 2)) {
                    if to == "to" && (SUBJECT_PRONOUNS.contains(&subj.as_str()) || is_noun(s, *subj_pos)) {
                        anchors.insert(w[k].0);
                    }
                }
            }
            // the subject takes at least one word before the verb
            t if MANDATIVE_TRIGGERS.contains(&t)
                && w.get(k + 1).is_some_and(|(_, x)| x == "that")
                && w.iter().skip(k + 3).take(7).any(|(pos, x)| x == "be" || is_base_verb(s, *pos)) =>
            {
                anchors.insert(w[k].0);
            }
            _ => {}
        }
    }
    anchors.len() as u64
}

fn is_gerund(t: &ParsedToken) -> bool {
    t.upos == "VERB" && t.surface.to_lowercase().ends_with("ing") && t.deprel != "amod"
}

fn infinitivals(s: &SentenceView<'_>) -> u64 {
    (0..s.tokens.len().saturating_sub(1))
        .filter(|&i| s.tokens[i].eq_ignore_ascii_case("to") && is_base_verb(s, i + 1))
        .count() as u64
}

fn clefts(s: &SentenceView<'_>) -> u64 {
    let w = lower_words(s);
    let mut n = 0;
    for k in 0..w.len() {
        if w[k].1 != "it" || !w.get(k + 1).is_some_and(|(_, x)| BE_FORMS.contains(&x.as_str())) {
            continue;
        }
        // constituent of one to five words, then a relative pronoun
        if w.iter().skip(k + 3).take(5).any(|(_, x)| RELATIVE_PRONOUNS.contains(&x.as_str())) {
            n += 1;
        }
    }
    n
}

fn em_dashes(text: &str) -> u64 {
    let chars: Vec<char> = text.chars().collect();
    let mut n = 0;
    let mut i = 0;
    while i < chars.len() {
        match chars[i] {
            '\u{2014}' => n += 1,
            '\u{2013}' => {
                let before = i > 0 && chars[i - 1].is_whitespace();
                let after = chars.get(i + 1).is_some_and(|c| c.is_whitespace());
                if before && after {
                    n += 1;
                }
            }
            '-' => {
                let mut j = i;
                while j < chars.len() && chars[j] == '-' {
                    j += 1;
                }
                if j - i >= 2 {
                    n += 1;
                }
                i = j;
                continue;
            }
            _ => {}
        }
        i += 1;
    }
    n
}

fn ellipses(text: &str) -> u64 {
    let chars: Vec<char> = text.chars().collect();
    let mut n = 0;
    let mut i = 0;
    while i < chars.len() {
        if chars[i] == '\u{2026}' {
            n += 1;
        } else if chars[i] == '.' {
            let mut j = i;
            while j < chars.len() && chars[j] == '.' {
                j += 1;
            }
            if j - i >= 3 {
                n += 1;
            }
            i = j;
            continue;
        }
        i += 1;
    }
    n
}

/// Pairs of double or single quotation marks, straight or curly. A single
/// quote between two alphanumerics is an apostrophe.
fn paired_quotes(text: &str) -> DocCounts {
    let chars: Vec<char> = text.chars().collect();
    let alnum = |i: Option<usize>| i.and_then(|i| chars.get(i)).is_some_and(|c| c.is_alphanumeric());
    let (mut straight_double, mut curly_double, mut single) = (false, false, false);
    let mut pairs = 0;
    for (i, &c) in chars.iter().enumerate() {
        let prev = alnum(i.checked_sub(1));
        let next = alnum(Some(i + 1));
        match c {
            '"' => {
                if straight_double {
                    pairs += 1;
                }
                straight_double = !straight_double;
            }
            '\u{201C}' => curly_double = true,
            '\u{201D}' if curly_double => {
                pairs += 1;
                curly_double = false;
            }
            '\u{2018}' => single = true,
            '\'' | '\u{2019}' => {
                if prev && next {
                    continue;
                }
                if single {
                    pairs += 1;
                    single = false;
                } else if c == '\'' && next && !prev {
                    single = true;
                }
            }
            _ => {}
        }
    }
    let unpaired = [straight_double, curly_double, single].iter().filter(|&&b| b).count() as u64;
    DocCounts { count: pairs, unpaired }
}

fn paired_parentheses(text: &str) -> DocCounts {
    let mut open = 0u64;
    let mut pairs = 0;
    for c in text.chars() {
        match c {
            '(' => open += 1,
            ')' if open > 0 => {
                open -= 1;
                pairs += 1;
            }
            _ => {}
        }
    }
    DocCounts { count: pairs, unpaired: open }
}
