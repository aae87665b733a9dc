//! Ingest raw documents, extract the lexical and punctuation features and
//! write the long-format panel.
//!
//!     cargo run --example extract -- <out-dir>

use depthstrata::corpus::{load_series, Corpus, CorpusMeta, DecodeMode, DocumentRecord};
use depthstrata::features::{apply_exclusions, extract_panel, primary17, RatePanel};

const GENERATIONS: [&[&str]; 3] = [
    &[
        "However, the results were mixed; perhaps the sample was small.",
        "\"Why now?\" she asked. The answer (if any) was delayed.",
        "If it were up to me, I would wait: the data are noisy!",
    ],
    &[
        "However, the results were mixed. Perhaps the sample was small.",
        "She asked why. The answer was delayed, and it mattered.",
        "Moreover, we should wait. The data are noisy.",
    ],
    &[
        "However, moreover, the results were mixed. Perhaps, maybe, it was small.",
        "She asked. The answer was late and it mattered and it stayed.",
        "Furthermore, we waited. The data were noisy.",
    ],
];

fn main() -> anyhow::Result<()> {
    let out = std::env::args().nth(1).map(std::path::PathBuf::from).unwrap_or_else(std::env::temp_dir);
    let root = out.join("extract-demo");
    for (g, texts) in GENERATIONS.iter().enumerate() {
        let docs = texts.iter().enumerate().map(|(i, t)| DocumentRecord::new(format!("doc{i}"), *t)).collect();
        let meta = CorpusMeta::new("demo", g as u32, DecodeMode::Nucleus);
        Corpus::new(meta, docs, None)?.export(&root.join("demo").join(format!("gen{g}")))?;
    }

    // no parses here, so the two dependency-label features are left out
    let mut specs = primary17();
    apply_exclusions(&mut specs, &["relative_clauses".into(), "adverbial_clauses".into()])?;
    let series = load_series(&root, "demo")?;
    let panel = extract_panel(&series, &specs)?;
    for (f, (name, depth)) in panel.features.iter().enumerate() {
        let rates: Vec<String> = (0..panel.n_generations()).map(|g| format!("{:6.2}", panel.rate(f, g))).collect();
        println!("{name:<18} d={} {}", depth.get(), rates.join(" "));
    }
    println!("unusable (zero at generation 0): {:?}", panel.unusable_features());
    RatePanel::write_csv(&[panel], &root.join("panel.csv"))?;
    println!("wrote {}", root.join("panel.csv").display());
    Ok(())
}
