//! Depth-annotated feature registry.
//!
//! Three panels are defined: the seventeen primary features, two excluded
//! frequency aggregates (long words, ellipsis) and five held-out features
//! defined for prospective validation.

pub mod detect;
pub mod lexicon;
pub mod panel;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use lexicon::{Lexicon, DISCOURSE_MARKERS, HEDGES};

pub use detect::{count_document, detect_feature, DocCounts};
pub use panel::{extract_panel, extract_rates, RatePanel, RateRow};

/// Structural depth: the number of nested syntactic commitments a feature
/// needs, in `0..=3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Depth(u8);

impl Depth {
    pub const MAX: u8 = 3;

    pub fn new(d: u8) -> Result<Self> {
        if d > Self::MAX {
            return Err(Error::InvalidArgument(format!("depth {d} outside 0..=3")));
        }
        Ok(Depth(d))
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.0)
    }
}

impl TryFrom<u8> for Depth {
    type Error = Error;
    fn try_from(d: u8) -> Result<Self> {
        Depth::new(d)
    }
}

impl From<Depth> for u8 {
    fn from(d: Depth) -> u8 {
        d.0
    }
}

impl fmt::Display for Depth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    Lexicon,
    Punctuation,
    RegexMorph,
    SentenceInitial,
    DepRelation,
    LexicoSyntactic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Panel {
    Primary17,
    Excluded,
    Heldout5,
}

/// Which features an extraction run covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PanelSelection {
    #[default]
    Primary17,
    /// Primary panel plus the two excluded aggregates.
    WithExcluded,
    Heldout5,
}

impl PanelSelection {
    pub fn features(self) -> Vec<FeatureSpec> {
        match self {
            PanelSelection::Primary17 => primary17(),
            PanelSelection::WithExcluded => {
                let mut v = primary17();
                v.extend(excluded());
                v
            }
            PanelSelection::Heldout5 => heldout5(),
        }
    }
}

impl std::str::FromStr for PanelSelection {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "primary17" => Ok(PanelSelection::Primary17),
            "+excluded" | "with_excluded" | "primary17+excluded" => Ok(PanelSelection::WithExcluded),
            "heldout5" => Ok(PanelSelection::Heldout5),
            other => Err(Error::InvalidArgument(format!("unknown panel {other:?}"))),
        }
    }
}

/// How a feature is recognised. Variants carry their lexicon, pattern or
/// relation payload.
#[derive(Debug, Clone, PartialEq)]
pub enum Rule {
    /// Case-insensitive lexicon hits on word tokens.
    Lexicon(Lexicon),
    /// Hedging lexicon; the modal members only count in lowercase,
    /// non-sentence-initial position.
    Hedges(Lexicon),
    /// Exact lowercase word matches anywhere.
    LowercaseWords(Vec<String>),
    /// U+2014, U+2013 flanked by spaces, or a run of two or more ASCII hyphens.
    EmDash,
    Char(char),
    PairedQuotes,
    PairedParentheses,
    RegularPast,
    IrregularPast,
    /// BE form, at most one adverb, then an "-ed" participle.
    Passive,
    Subjunctive,
    /// First word token of a sentence, exact match.
    SentenceInitial(Vec<String>),
    /// Dependency relation of any token.
    DepRelation(Vec<String>),
    /// Verbal "-ing" token that is not an adjectival modifier.
    Gerund,
    /// "to" followed by a base-form verb.
    Infinitival,
    /// "it" + BE + constituent + relative pronoun.
    Cleft,
    LongWords(usize),
    Ellipsis,
}

impl Rule {
    pub fn detector_kind(&self) -> DetectorKind {
        match self {
            Rule::Lexicon(_) | Rule::Hedges(_) | Rule::LowercaseWords(_) => DetectorKind::Lexicon,
            Rule::EmDash | Rule::Char(_) | Rule::PairedQuotes | Rule::PairedParentheses | Rule::Ellipsis => {
                DetectorKind::Punctuation
            }
            Rule::RegularPast | Rule::IrregularPast | Rule::Passive | Rule::LongWords(_) => DetectorKind::RegexMorph,
            Rule::SentenceInitial(_) => DetectorKind::SentenceInitial,
            Rule::DepRelation(_) | Rule::Gerund => DetectorKind::DepRelation,
            Rule::Subjunctive | Rule::Cleft | Rule::Infinitival => DetectorKind::LexicoSyntactic,
        }
    }

    pub fn requires_parses(&self) -> bool {
        matches!(self, Rule::DepRelation(_) | Rule::Gerund | Rule::Infinitival)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSpec {
    pub name: String,
    pub depth: Depth,
    pub rule: Rule,
    pub panel: Panel,
}

impl FeatureSpec {
    fn new(name: &str, depth: u8, rule: Rule, panel: Panel) -> Self {
        FeatureSpec { name: name.to_string(), depth: Depth(depth), rule, panel }
    }

    pub fn detector(&self) -> DetectorKind {
        self.rule.detector_kind()
    }
}

fn words(ws: &[&str]) -> Vec<String> {
    ws.iter().map(|w| w.to_string()).collect()
}

/// The seventeen primary features in registry order (by depth, then as listed).
pub fn primary17() -> Vec<FeatureSpec> {
    use Panel::Primary17 as P;
    vec![
        FeatureSpec::new("discourse_markers", 0, Rule::Lexicon(DISCOURSE_MARKERS.clone()), P),
        FeatureSpec::new("hedging", 0, Rule::Hedges(HEDGES.clone()), P),
        FeatureSpec::new("em_dashes", 0, Rule::EmDash, P),
        FeatureSpec::new("exclamation", 0, Rule::Char('!'), P),
        FeatureSpec::new("regular_past_ed", 1, Rule::RegularPast, P),
        FeatureSpec::new(
            "sent_initial_conj",
            1,
            Rule::SentenceInitial(words(&lexicon::SENTENCE_INITIAL_CONJUNCTIONS)),
            P,
        ),
        FeatureSpec::new("coordination", 1, Rule::LowercaseWords(words(&lexicon::COORDINATORS)), P),
        FeatureSpec::new("quotes", 1, Rule::PairedQuotes, P),
        FeatureSpec::new("colons", 1, Rule::Char(':'), P),
        FeatureSpec::new("semicolons", 1, Rule::Char(';'), P),
        FeatureSpec::new("question_marks", 2, Rule::Char('?'), P),
        FeatureSpec::new("parentheses", 2, Rule::PairedParentheses, P),
        FeatureSpec::new("passive_voice", 2, Rule::Passive, P),
        FeatureSpec::new("irregular_past", 2, Rule::IrregularPast, P),
        FeatureSpec::new("relative_clauses", 2, Rule::DepRelation(words(&["relcl", "acl:relcl"])), P),
        FeatureSpec::new("adverbial_clauses", 2, Rule::DepRelation(words(&["advcl"])), P),
        FeatureSpec::new("subjunctive", 3, Rule::Subjunctive, P),
    ]
}

/// Frequency aggregates computed alongside the primary panel but kept out of it.
pub fn excluded() -> Vec<FeatureSpec> {
    vec![
        FeatureSpec::new("long_words", 0, Rule::LongWords(10), Panel::Excluded),
        FeatureSpec::new("ellipsis", 2, Rule::Ellipsis, Panel::Excluded),
    ]
}

pub fn heldout5() -> Vec<FeatureSpec> {
    use Panel::Heldout5 as H;
    vec![
        FeatureSpec::new("gerund_phrases", 1, Rule::Gerund, H),
        FeatureSpec::new("infinitival_to", 1, Rule::Infinitival, H),
        FeatureSpec::new("appositives", 2, Rule::DepRelation(words(&["appos"])), H),
        FeatureSpec::new("complement_clauses", 2, Rule::DepRelation(words(&["ccomp"])), H),
        FeatureSpec::new("clefts", 3, Rule::Cleft, H),
    ]
}

/// Look a feature up in any panel.
pub fn feature(name: &str) -> Option<FeatureSpec> {
    primary17().into_iter().chain(excluded()).chain(heldout5()).find(|f| f.name == name)
}

/// Reassign depths, e.g. `irregular_past -> 1`. Every override must name a
/// feature in `specs`.
pub fn apply_depth_overrides(specs: &mut [FeatureSpec], overrides: &BTreeMap<String, u8>) -> Result<()> {
    for (name, &d) in overrides {
        let spec = specs.iter_mut().find(|s| &s.name == name).ok_or_else(|| Error::UnknownFeature(name.clone()))?;
        spec.depth = Depth::new(d)?;
    }
    Ok(())
}

/// Drop the named features. Unknown names are an error.
pub fn apply_exclusions(specs: &mut Vec<FeatureSpec>, exclude: &[String]) -> Result<()> {
    for name in exclude {
        if !specs.iter().any(|s| &s.name == name) {
            return Err(Error::UnknownFeature(name.clone()));
        }
    }
    specs.retain(|s| !exclude.contains(&s.name));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primary_registry_matches_table() {
        let got: Vec<(String, u8)> = primary17().into_iter().map(|f| (f.name, f.depth.get())).collect();
        let want = [
            ("discourse_markers", 0),
            ("hedging", 0),
            ("em_dashes", 0),
            ("exclamation", 0),
            ("regular_past_ed", 1),
            ("sent_initial_conj", 1),
            ("coordination", 1),
            ("quotes", 1),
            ("colons", 1),
            ("semicolons", 1),
            ("question_marks", 2),
            ("parentheses", 2),
            ("passive_voice", 2),
            ("irregular_past", 2),
            ("relative_clauses", 2),
            ("adverbial_clauses", 2),
            ("subjunctive", 3),
        ];
        let want: Vec<(String, u8)> = want.iter().map(|(n, d)| (n.to_string(), *d)).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn heldout_depths() {
        let mut d: Vec<u8> = heldout5().iter().map(|f| f.depth.get()).collect();
        d.sort_unstable();
        assert_eq!(d, vec![1, 1, 2, 2, 3]);
        assert!(excluded().iter().all(|f| f.panel == Panel::Excluded));
    }

    #[test]
    fn overrides_and_exclusions() {
        let mut specs = primary17();
        let ov = BTreeMap::from([("irregular_past".to_string(), 1u8)]);
        apply_depth_overrides(&mut specs, &ov).unwrap();
        assert_eq!(specs.iter().find(|s| s.name == "irregular_past").unwrap().depth.get(), 1);
        let bad = BTreeMap::from([("nope".to_string(), 1u8)]);
        assert!(matches!(apply_depth_overrides(&mut specs, &bad), Err(Error::UnknownFeature(_))));
        let bad_depth = BTreeMap::from([("quotes".to_string(), 7u8)]);
        assert!(apply_depth_overrides(&mut specs, &bad_depth).is_err());
        apply_exclusions(&mut specs, &["subjunctive".to_string()]).unwrap();
        assert_eq!(specs.len(), 16);
    }

    #[test]
    fn depth_serde_rejects_out_of_range() {
        assert!(serde_json::from_str::<Depth>("4").is_err());
        assert_eq!(serde_json::from_str::<Depth>("2").unwrap().get(), 2);
    }

    #[test]
    fn panel_selection_parses() {
        assert_eq!("heldout5".parse::<PanelSelection>().unwrap().features().len(), 5);
        assert_eq!("+excluded".parse::<PanelSelection>().unwrap().features().len(), 19);
        assert!("bogus".parse::<PanelSelection>().is_err());
    }
}
