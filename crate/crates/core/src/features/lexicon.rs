//! Word lists shipped as plain-text assets, one entry per line.

use std::collections::HashSet;
use std::sync::LazyLock;

use crate::io::sha256_hex;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    pub name: String,
    entries: Vec<String>,
    lookup: HashSet<String>,
    checksum: String,
}

impl Lexicon {
    /// Parse one entry per line; blank lines and `#` comments are ignored.
    /// Entries are stored lowercase.
    pub fn parse(name: &str, text: &str) -> Self {
        let entries: Vec<String> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        let lookup = entries.iter().cloned().collect();
        Lexicon { name: name.to_string(), entries, lookup, checksum: sha256_hex(text.as_bytes()) }
    }

    pub fn from_words(name: &str, words: &[&str]) -> Self {
        let mut text = words.join("\n");
        text.push('\n');
        Self::parse(name, &text)
    }

    /// Case-insensitive membership.
    pub fn contains(&self, word: &str) -> bool {
        if word.chars().all(|c| !c.is_uppercase()) {
            self.lookup.contains(word)
        } else {
            self.lookup.contains(&word.to_lowercase())
        }
    }

    pub fn entries(&self) -> &[String] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// SHA-256 of the source text the lexicon was parsed from.
    pub fn checksum(&self) -> &str {
        &self.checksum
    }
}

pub static DISCOURSE_MARKERS: LazyLock<Lexicon> =
    LazyLock::new(|| Lexicon::parse("discourse_markers", include_str!("../../data/discourse_markers.txt")));

pub static HEDGES: LazyLock<Lexicon> =
    LazyLock::new(|| Lexicon::parse("hedging", include_str!("../../data/hedging.txt")));

pub static IRREGULAR_PAST: LazyLock<Lexicon> =
    LazyLock::new(|| Lexicon::parse("irregular_past", include_str!("../../data/irregular_past.txt")));

/// Words ending in "ed" that are not regular past forms.
pub static ED_STOPLIST: LazyLock<Lexicon> =
    LazyLock::new(|| Lexicon::parse("regular_past_stoplist", include_str!("../../data/regular_past_stoplist.txt")));

/// Modal hedges, counted only in lowercase non-sentence-initial position.
pub const MODAL_HEDGES: [&str; 3] = ["may", "might", "could"];

pub const COORDINATORS: [&str; 5] = ["and", "but", "or", "nor", "yet"];

pub const SENTENCE_INITIAL_CONJUNCTIONS: [&str; 6] = ["And", "But", "So", "Yet", "Or", "Nor"];

pub const BE_FORMS: [&str; 8] = ["am", "is", "are", "was", "were", "be", "been", "being"];

/// Adverbs allowed between a BE form and its participle when no parse is available.
pub const CLOSED_ADVERBS: [&str; 13] =
    ["not", "never", "also", "often", "always", "already", "still", "just", "then", "recently", "now", "even", "soon"];

pub const SUBJECT_PRONOUNS: [&str; 7] = ["i", "you", "he", "she", "it", "we", "they"];

pub const MANDATIVE_TRIGGERS: [&str; 24] = [
    "demand",
    "demands",
    "demanded",
    "demanding",
    "insist",
    "insists",
    "insisted",
    "insisting",
    "require",
    "requires",
    "required",
    "requiring",
    "suggest",
    "suggests",
    "suggested",
    "suggesting",
    "recommend",
    "recommends",
    "recommended",
    "recommending",
    "propose",
    "proposes",
    "proposed",
    "proposing",
];

pub const RELATIVE_PRONOUNS: [&str; 4] = ["that", "who", "which", "whom"];
