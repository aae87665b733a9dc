//! Deterministic rule-based tokenizer and sentence splitter.
//!
//! Used only when a corpus ships without dependency parses. When parses are
//! present their tokenization is authoritative for every count.

use std::ops::Range;

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || is_apostrophe(c)
}

/// True when the token contains at least one letter or digit.
pub fn is_word(token: &str) -> bool {
    token.chars().any(char::is_alphanumeric)
}

/// Split `text` into tokens.
///
/// Maximal runs of letters, digits and apostrophes form word tokens. Every
/// other non-whitespace character is a token of its own. Apostrophes at the
/// edge of a run are quotation marks, not contractions, so they are split
/// off as punctuation: `'hi'` yields `'`, `hi`, `'` while `don't` stays whole.
pub fn tokenize(text: &str) -> Vec<&str> {
    tokenize_spans(text).into_iter().map(|r| &text[r]).collect()
}

/// Byte spans of the tokens produced by [`tokenize`].
pub fn tokenize_spans(text: &str) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some((start, c)) = chars.next() {
        if c.is_whitespace() {
            continue;
        }
        if !is_word_char(c) {
            out.push(start..start + c.len_utf8());
            continue;
        }
        let mut end = start + c.len_utf8();
        while let Some(&(i, n)) = chars.peek() {
            if !is_word_char(n) {
                break;
            }
            end = i + n.len_utf8();
            chars.next();
        }
        push_run(text, start..end, &mut out);
    }
    out
}

fn push_run(text: &str, span: Range<usize>, out: &mut Vec<Range<usize>>) {
    let run = &text[span.clone()];
    let lead: Vec<(usize, char)> = run.char_indices().take_while(|&(_, c)| is_apostrophe(c)).collect();
    let core_start = span.start + lead.last().map_or(0, |&(i, c)| i + c.len_utf8());
    for &(i, c) in &lead {
        out.push(span.start + i..span.start + i + c.len_utf8());
    }
    if core_start == span.end {
        return;
    }
    let core = &text[core_start..span.end];
    let mut trail: Vec<Range<usize>> = Vec::new();
    let mut core_end = span.end;
    for (i, c) in core.char_indices().rev() {
        if !is_apostrophe(c) {
            break;
        }
        trail.push(core_start + i..core_start + i + c.len_utf8());
        core_end = core_start + i;
    }
    out.push(core_start..core_end);
    out.extend(trail.into_iter().rev());
}

/// Split `text` into sentence spans.
///
/// A boundary falls after `.`, `!` or `?` when the next characters are
/// whitespace followed by an uppercase letter, or at end of text. Abbreviations
/// such as "Dr." over-split; that is accepted. Spans are trimmed and empty
/// spans are dropped.
pub fn split_sentences(text: &str) -> Vec<Range<usize>> {
    let mut spans = Vec::new();
    let mut start = 0;
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    for (k, &(i, c)) in chars.iter().enumerate() {
        if !matches!(c, '.' | '!' | '?') {
            continue;
        }
        let end = i + c.len_utf8();
        let rest = &chars[k + 1..];
        let boundary = match rest.first() {
            None => true,
            Some(&(_, n)) if n.is_whitespace() => match rest.iter().find(|(_, ch)| !ch.is_whitespace()) {
                None => true,
                Some(&(_, ch)) => ch.is_uppercase(),
            },
            _ => false,
        };
        if boundary {
            push_trimmed(text, start..end, &mut spans);
            start = end;
        }
    }
    push_trimmed(text, start..text.len(), &mut spans);
    spans
}

fn push_trimmed(text: &str, span: Range<usize>, out: &mut Vec<Range<usize>>) {
    let s = &text[span.clone()];
    let lead = s.len() - s.trim_start().len();
    let trimmed = s.trim();
    if !trimmed.is_empty() {
        let a = span.start + lead;
        out.push(a..a + trimmed.len());
    }
}
