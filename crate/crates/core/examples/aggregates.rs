//! Corpus-level aggregates across a two-generation series built in memory.

use depthstrata::aggregates::{aggregate_change, series_aggregates, AggregateRow, HapaxBasis};
use depthstrata::corpus::{Corpus, CorpusMeta, DecodeMode, DocumentRecord, GenerationSeries};

fn corpus(generation: u32, texts: &[&str]) -> anyhow::Result<Corpus> {
    let docs = texts.iter().enumerate().map(|(i, t)| DocumentRecord::new(format!("d{i}"), *t)).collect();
    Ok(Corpus::new(CorpusMeta::new("demo", generation, DecodeMode::Nucleus), docs, None)?)
}

fn main() -> anyhow::Result<()> {
    let series = GenerationSeries::new(
        "demo",
        vec![
            corpus(
                0,
                &[
                    "The committee, which had met twice, postponed its decision until spring.",
                    "Rain fell; nobody minded.",
                ],
            )?,
            corpus(1, &["The committee met. It postponed the decision. It was spring.", "It rained. It was fine."])?,
        ],
    )?;
    let rows = series_aggregates(&series, HapaxBasis::Types);
    for name in AggregateRow::METRICS {
        let vals: Vec<String> =
            rows.iter().map(|r| r.metric(name).map_or("n/a".into(), |v| format!("{v:.3}"))).collect();
        println!("{name:<18} {}", vals.join("  "));
    }
    // parse-based metrics stay n/a without parses
    for (name, change) in aggregate_change(&rows[0], &rows[1]) {
        println!("{name:<18} change {change:?}");
    }
    Ok(())
}
