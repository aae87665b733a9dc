//! The fixture carriers each hit exactly one primary feature.

mod common;

use common::*;
use depthstrata::corpus::{CorpusMeta, DecodeMode, GenerationSeries};
use depthstrata::features::{extract_panel, primary17};

#[test]
fn each_carrier_counts_once_for_its_own_feature_only() {
    let specs = primary17();
    for target in &specs {
        let mut c = FixtureCorpus::new();
        c.carriers(&target.name, 1).pad_to(40);
        let gens: Vec<_> = (0..2).map(|g| c.build(CorpusMeta::new("m", g, DecodeMode::Nucleus), 50, None)).collect();
        assert_eq!(gens[0].token_count(), 40);
        let series = GenerationSeries::new("m", gens).unwrap();
        let panel = extract_panel(&series, &specs).unwrap();
        for (f, (name, _)) in panel.features.iter().enumerate() {
            let want = u64::from(name == &target.name);
            assert_eq!(
                panel.counts[f][0], want,
                "carrier for {} counted {} times as {name}",
                target.name, panel.counts[f][0]
            );
        }
    }
}

#[test]
fn padding_reaches_exact_totals() {
    for total in [20, 21, 22, 23, 37, 1001] {
        let mut c = FixtureCorpus::new();
        c.carriers("hedging", 2).pad_to(total);
        let corpus = c.build(CorpusMeta::new("m", 0, DecodeMode::Nucleus), 7, None);
        assert_eq!(corpus.token_count(), total);
    }
}
