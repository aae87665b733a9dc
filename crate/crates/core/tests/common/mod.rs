//! Shared fixtures and brute-force oracles for the integration tests.
#![allow(dead_code)]

use std::path::Path;

use depthstrata::corpus::{
    Corpus, CorpusMeta, DecodeMode, DecodingParams, DocumentRecord, ParsedSentence, ParsedToken,
};

/// Published per-feature depth and total percent change, generation 0 to 10.
pub const PUBLISHED_DELTA: [(&str, u8, f64); 17] = [
    ("discourse_markers", 0, 126.2),
    ("hedging", 0, 44.2),
    ("em_dashes", 0, 28.6),
    ("exclamation", 0, -99.3),
    ("regular_past_ed", 1, 79.7),
    ("sent_initial_conj", 1, 19.0),
    ("coordination", 1, -14.4),
    ("quotes", 1, -14.9),
    ("colons", 1, -64.8),
    ("semicolons", 1, -64.4),
    ("question_marks", 2, -91.7),
    ("parentheses", 2, -56.8),
    ("passive_voice", 2, -55.5),
    ("irregular_past", 2, -52.3),
    ("relative_clauses", 2, -28.2),
    ("adverbial_clauses", 2, 1.6),
    ("subjunctive", 3, -52.7),
];

/// Published normalized trajectories at generations 0, 2, 4, 6, 8, 10.
pub const PUBLISHED_TRAJECTORIES: [(&str, [f64; 6]); 17] = [
    ("discourse_markers", [1.00, 1.45, 2.15, 2.36, 2.27, 2.26]),
    ("hedging", [1.00, 1.27, 1.59, 1.63, 1.53, 1.44]),
    ("em_dashes", [1.00, 1.10, 1.30, 1.34, 1.30, 1.29]),
    ("exclamation", [1.00, 0.17, 0.03, 0.02, 0.01, 0.01]),
    ("regular_past_ed", [1.00, 1.28, 1.53, 1.66, 1.77, 1.80]),
    ("sent_initial_conj", [1.00, 0.82, 0.98, 1.09, 1.14, 1.19]),
    ("coordination", [1.00, 0.91, 0.82, 0.82, 0.85, 0.86]),
    ("quotes", [1.00, 0.83, 0.89, 0.84, 0.87, 0.85]),
    ("colons", [1.00, 0.51, 0.37, 0.32, 0.35, 0.35]),
    ("semicolons", [1.00, 0.37, 0.28, 0.30, 0.34, 0.36]),
    ("question_marks", [1.00, 0.21, 0.05, 0.04, 0.08, 0.08]),
    ("parentheses", [1.00, 0.46, 0.36, 0.39, 0.42, 0.43]),
    ("passive_voice", [1.00, 0.49, 0.33, 0.40, 0.45, 0.45]),
    ("irregular_past", [1.00, 0.69, 0.54, 0.44, 0.46, 0.48]),
    ("relative_clauses", [1.00, 0.74, 0.66, 0.67, 0.68, 0.72]),
    ("adverbial_clauses", [1.00, 1.03, 1.08, 1.05, 1.03, 1.02]),
    ("subjunctive", [1.00, 0.38, 0.34, 0.35, 0.41, 0.47]),
];

/// Published nucleus and greedy rates per 1000 tokens and the reported τ.
pub const PUBLISHED_RATES: [(&str, u8, f64, f64, f64); 11] = [
    ("discourse_markers", 0, 1.60, 0.08, 0.05),
    ("hedging", 0, 1.16, 0.36, 0.31),
    ("em_dashes", 0, 2.42, 0.00, 0.00),
    ("exclamation", 0, 1.03, 0.00, 0.00),
    ("regular_past_ed", 1, 32.10, 26.35, 0.82),
    ("coordination", 1, 32.12, 18.49, 0.58),
    ("quotes", 1, 6.90, 17.10, 2.48),
    ("passive_voice", 2, 5.56, 13.24, 2.38),
    ("relative_clauses", 2, 12.14, 17.04, 1.40),
    ("parentheses", 2, 7.27, 8.11, 1.12),
    ("subjunctive", 3, 0.24, 0.26, 1.10),
];

/// Published per-model p-values for the depth correlation.
pub const PUBLISHED_MODEL_P: [f64; 5] = [0.140, 0.042, 0.002, 0.019, 0.009];

/// One sentence of the fixture corpora, with an optional dependency label
/// on its third token.
struct Carrier {
    tokens: &'static [&'static str],
    deprel: Option<&'static str>,
}

/// A sentence carrying exactly one instance of the named feature and no
/// instance of any other primary feature.
fn carrier(feature: &str) -> Carrier {
    let t: &'static [&'static str] = match feature {
        "discourse_markers" => &["However", "it", "rains", "."],
        "hedging" => &["It", "is", "perhaps", "fine", "."],
        "em_dashes" => &["It", "rains", "\u{2014}", "fine", "."],
        "exclamation" => &["It", "rains", "!"],
        "regular_past_ed" => &["It", "rained", "."],
        "sent_initial_conj" => &["So", "it", "rains", "."],
        "coordination" => &["It", "rains", "and", "pours", "."],
        "quotes" => &["It", "says", "\"", "hi", "\"", "."],
        "colons" => &["It", "rains", ":", "fine", "."],
        "semicolons" => &["It", "rains", ";", "fine", "."],
        "question_marks" => &["It", "rains", "?"],
        "parentheses" => &["It", "rains", "(", "here", ")", "."],
        "passive_voice" => &["They", "were", "wed", "."],
        "irregular_past" => &["It", "went", "."],
        "relative_clauses" | "adverbial_clauses" => &["It", "rains", "here", "."],
        "subjunctive" => &["If", "it", "were", "fine", "."],
        other => panic!("no carrier for {other}"),
    };
    let deprel = match feature {
        "relative_clauses" => Some("relcl"),
        "adverbial_clauses" => Some("advcl"),
        _ => None,
    };
    Carrier { tokens: t, deprel }
}

const FILLER_4: &[&str] = &["It", "rains", "here", "."];
const FILLER_3: &[&str] = &["It", "rains", "."];

fn parse_of(doc_id: &str, index: usize, tokens: &[&str], deprel: Option<&str>) -> ParsedSentence {
    // token 1 is the root; every other token attaches to it
    let tokens = tokens
        .iter()
        .enumerate()
        .map(|(i, s)| ParsedToken {
            surface: s.to_string(),
            lemma: s.to_lowercase(),
            upos: if s.chars().all(|c| c.is_alphanumeric()) { "X".into() } else { "PUNCT".into() },
            xpos: None,
            head: if i == 0 { None } else { Some(0) },
            deprel: match (i, deprel) {
                (0, _) => "root".into(),
                (2, Some(r)) => r.into(),
                _ => "dep".into(),
            },
        })
        .collect();
    ParsedSentence { doc_id: doc_id.to_string(), sentence_index: index, tokens }
}

/// Builder for parsed fixture corpora with exact token totals.
pub struct FixtureCorpus {
    sentences: Vec<(Vec<&'static str>, Option<&'static str>)>,
    tokens: usize,
}

impl FixtureCorpus {
    pub fn new() -> Self {
        FixtureCorpus { sentences: Vec::new(), tokens: 0 }
    }

    /// Add `n` carrier sentences for `feature`.
    pub fn carriers(&mut self, feature: &str, n: u64) -> &mut Self {
        let c = carrier(feature);
        for _ in 0..n {
            self.sentences.push((c.tokens.to_vec(), c.deprel));
            self.tokens += c.tokens.len();
        }
        self
    }

    /// Pad with feature-free sentences to exactly `total` tokens.
    pub fn pad_to(&mut self, total: usize) -> &mut Self {
        // any remainder of 6 or more is a sum of threes and fours
        assert!(total >= self.tokens + 6, "pad target {total} too small for {} tokens", self.tokens);
        let mut rest = total - self.tokens;
        while rest > 0 {
            let f = if rest.is_multiple_of(4) { FILLER_4 } else { FILLER_3 };
            self.sentences.push((f.to_vec(), None));
            rest -= f.len();
        }
        self.tokens = total;
        self
    }

    pub fn tokens(&self) -> usize {
        self.tokens
    }

    /// Pack into documents of at most `per_doc` sentences, each with a
    /// flat parse.
    pub fn build(&self, meta: CorpusMeta, per_doc: usize, prompts: Option<usize>) -> Corpus {
        let mut docs = Vec::new();
        let mut parses = Vec::new();
        for (d, chunk) in self.sentences.chunks(per_doc).enumerate() {
            let id = format!("d{d:05}");
            let text: Vec<String> = chunk.iter().map(|(t, _)| t.join(" ")).collect();
            let mut rec = DocumentRecord::new(&id, text.join(" "));
            rec.prompt_id = prompts.map(|p| format!("p{:03}", d % p));
            docs.push(rec);
            for (i, (t, rel)) in chunk.iter().enumerate() {
                parses.push(parse_of(&id, i, t, *rel));
            }
        }
        Corpus::new(meta, docs, Some(parses)).expect("fixture corpus is valid")
    }
}

/// Token total per generation of the trajectory fixture.
pub const TRAJECTORY_TOKENS: usize = 40_000;

/// Write `<root>/<model>/gen0..gen5` whose normalized trajectories equal
/// [`PUBLISHED_TRAJECTORIES`]; generation k stands for generation 2k.
pub fn write_trajectory_fixture(root: &Path, model: &str) {
    for g in 0..6 {
        let mut c = FixtureCorpus::new();
        for (name, values) in PUBLISHED_TRAJECTORIES {
            c.carriers(name, (values[g] * 100.0).round() as u64);
        }
        c.pad_to(TRAJECTORY_TOKENS);
        let mut meta = CorpusMeta::new(model, g as u32, DecodeMode::Nucleus);
        meta.params = DecodingParams::self_training();
        let corpus = c.build(meta, 25, None);
        corpus.export(&root.join(model).join(format!("gen{g}"))).expect("export fixture");
    }
}

/// Token total of each corpus in the τ fixture pair.
pub const TAU_TOKENS: usize = 100_000;

/// Nucleus and greedy corpora whose rates per 1000 tokens equal
/// [`PUBLISHED_RATES`], with prompt ids assigned round-robin.
pub fn tau_fixture(model: &str, prompts: usize) -> (Corpus, Corpus) {
    let per_thousand = TAU_TOKENS as f64 / 1000.0;
    let build = |mode: DecodeMode, pick: fn(&(&str, u8, f64, f64, f64)) -> f64| {
        let mut c = FixtureCorpus::new();
        for row in &PUBLISHED_RATES {
            c.carriers(row.0, (pick(row) * per_thousand).round() as u64);
        }
        c.pad_to(TAU_TOKENS);
        let mut meta = CorpusMeta::new(model, 0, mode);
        meta.params =
            if mode == DecodeMode::Nucleus { DecodingParams::canonical_nucleus() } else { DecodingParams::default() };
        c.build(meta, 20, Some(prompts))
    };
    (build(DecodeMode::Nucleus, |r| r.2), build(DecodeMode::Greedy, |r| r.3))
}

// ---------------------------------------------------------------------------
// oracles

/// Ranks by direct counting: 1 + #smaller + (#equal − 1)/2.
pub fn oracle_ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|v| {
            let less = x.iter().filter(|w| *w < v).count() as f64;
            let eq = x.iter().filter(|w| *w == v).count() as f64;
            1.0 + less + (eq - 1.0) / 2.0
        })
        .collect()
}

pub fn oracle_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sy): (f64, f64) = (x.iter().sum(), y.iter().sum());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

pub fn oracle_spearman(x: &[f64], y: &[f64]) -> f64 {
    oracle_pearson(&oracle_ranks(x), &oracle_ranks(y))
}

/// Every permutation of `0..n`, lexicographic, by recursion.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Every k-subset of `0..n`.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| (0..n).filter(|i| m >> i & 1 == 1).collect())
        .collect()
}

/// Two-sided exact Spearman p by enumerating every reordering of `y`.
pub fn oracle_spearman_exact_p(x: &[f64], y: &[f64]) -> f64 {
    let obs = oracle_spearman(x, y).abs();
    let perms = permutations(x.len());
    let hits = perms
        .iter()
        .filter(|p| {
            let yy: Vec<f64> = p.iter().map(|&i| y[i]).collect();
            oracle_spearman(x, &yy).abs() >= obs - 1e-9
        })
        .count();
    hits as f64 / perms.len() as f64
}

/// Exact one-sided permutation p for a statistic of (values, labels).
pub fn oracle_permutation_p(values: &[f64], labels: &[f64], stat: impl Fn(&[f64], &[f64]) -> f64) -> f64 {
    let obs = stat(values, labels);
    let perms = permutations(labels.len());
    let hits = perms
        .iter()
        .filter(|p| {
            let l: Vec<f64> = p.iter().map(|&i| labels[i]).collect();
            stat(values, &l) >= obs - 1e-9
        })
        .count();
    hits as f64 / perms.len() as f64
}

/// Number of adjacent depth groups (in label order) whose mean value rises.
pub fn oracle_monotonicity(values: &[f64], labels: &[f64]) -> f64 {
    let mut groups: Vec<f64> = labels.to_vec();
    groups.sort_by(f64::total_cmp);
    groups.dedup();
    let means: Vec<f64> = groups
        .iter()
        .map(|g| {
            let v: Vec<f64> = values.iter().zip(labels).filter(|(_, l)| *l == g).map(|(v, _)| *v).collect();
            v.iter().sum::<f64>() / v.len() as f64
        })
        .collect();
    means.windows(2).filter(|w| w[1] > w[0]).count() as f64
}

/// Mann–Whitney U of `a` by pair counting, and the exact two-sided p by
/// enumerating every split of the pooled sample.
pub fn oracle_mann_whitney(a: &[f64], b: &[f64]) -> (f64, f64) {
    let u_of = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .map(|x| {
                b.iter()
                    .map(|y| {
                        if x > y {
                            1.0
                        } else if x == y {
                            0.5
                        } else {
                            0.0
                        }
                    })
                    .sum::<f64>()
            })
            .sum()
    };
    let u = u_of(a, b);
    let mu = (a.len() * b.len()) as f64 / 2.0;
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let splits = subsets(pooled.len(), a.len());
    let hits = splits
        .iter()
        .filter(|s| {
            let aa: Vec<f64> = s.iter().map(|&i| pooled[i]).collect();
            let bb: Vec<f64> = (0..pooled.len()).filter(|i| !s.contains(i)).map(|i| pooled[i]).collect();
            (u_of(&aa, &bb) - mu).abs() >= (u - mu).abs() - 1e-9
        })
        .count();
    (u, hits as f64 / splits.len() as f64)
}

pub fn oracle_cohens_d(a: &[f64], b: &[f64]) -> f64 {
    let m = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
    let ss = |x: &[f64]| {
        let mx = m(x);
        x.iter().map(|v| (v - mx) * (v - mx)).sum::<f64>()
    };
    let sd = ((ss(a) + ss(b)) / (a.len() + b.len() - 2) as f64).sqrt();
    (m(a) - m(b)) / sd
}

/// Partial rank correlation by residualizing ranks of x and y on ranks of z
/// with least squares and correlating the residuals.
pub fn oracle_partial_spearman(x: &[f64], y: &[f64], z: &[f64]) -> f64 {
    let (rx, ry, rz) = (oracle_ranks(x), oracle_ranks(y), oracle_ranks(z));
    let resid = |v: &[f64]| -> Vec<f64> {
        let n = v.len() as f64;
        let (mz, mv) = (rz.iter().sum::<f64>() / n, v.iter().sum::<f64>() / n);
        let b = rz.iter().zip(v).map(|(a, c)| (a - mz) * (c - mv)).sum::<f64>()
            / rz.iter().map(|a| (a - mz) * (a - mz)).sum::<f64>();
        v.iter().zip(&rz).map(|(c, a)| c - mv - b * (a - mz)).collect()
    };
    oracle_pearson(&resid(&rx), &resid(&ry))
}

/// Kendall's W through the tie-corrected Friedman statistic,
/// W = χ²_F / (m (n − 1)).
pub fn oracle_kendall_w(scores: &[Vec<f64>]) -> f64 {
    let m = scores.len() as f64;
    let n = scores[0].len();
    let ranks: Vec<Vec<f64>> = scores.iter().map(|s| oracle_ranks(s)).collect();
    let totals: Vec<f64> = (0..n).map(|j| ranks.iter().map(|r| r[j]).sum()).collect();
    let nf = n as f64;
    let ties: f64 = scores
        .iter()
        .map(|s| {
            let mut seen: Vec<f64> = Vec::new();
            let mut t = 0.0;
            for v in s {
                if !seen.contains(v) {
                    seen.push(*v);
                    let c = s.iter().filter(|w| *w == v).count() as f64;
                    t += c * c * c - c;
                }
            }
            t
        })
        .sum();
    let s: f64 = totals.iter().map(|t| (t - m * (nf + 1.0) / 2.0).powi(2)).sum();
    let chi2 = 12.0 * s / (m * nf * (nf + 1.0) - ties / (nf - 1.0));
    chi2 / (m * (nf - 1.0))
}

/// Kendall's W from the mean pairwise Spearman ρ (valid without ties):
/// W = ((m − 1) ρ̄ + 1) / m.
pub fn oracle_kendall_w_pairwise(scores: &[Vec<f64>]) -> f64 {
    let m = scores.len();
    let mut sum = 0.0;
    let mut k = 0.0;
    for i in 0..m {
        for j in i + 1..m {
            sum += oracle_spearman(&scores[i], &scores[j]);
            k += 1.0;
        }
    }
    ((m as f64 - 1.0) * sum / k + 1.0) / m as f64
}

/// Least-squares slope by the textbook closed form.
pub fn oracle_slope(t: &[f64], y: &[f64]) -> f64 {
    let n = t.len() as f64;
    let st: f64 = t.iter().sum();
    let sy: f64 = y.iter().sum();
    let sty: f64 = t.iter().zip(y).map(|(a, b)| a * b).sum();
    let stt: f64 = t.iter().map(|a| a * a).sum();
    (n * sty - st * sy) / (n * stt - st * st)
}
