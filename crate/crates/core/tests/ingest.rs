mod common;

use common::{tau_fixture, FixtureCorpus};
use depthstrata::corpus::{ingest_corpus, load_corpus, read_meta, CorpusMeta, DecodeMode};
use depthstrata::features::{extract_panel, primary17};
use depthstrata::Error;

#[test]
fn export_then_load_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let (nucleus, _) = tau_fixture("m", 4);
    nucleus.export(tmp.path()).unwrap();
    let back = load_corpus(tmp.path()).unwrap();
    assert_eq!(back.documents(), nucleus.documents());
    assert_eq!(back.meta, nucleus.meta);
    assert_eq!(back.token_count(), nucleus.token_count());
    assert!(back.has_parses());

    // the same documents ingested under other metadata keep their content
    let other = ingest_corpus(tmp.path(), CorpusMeta::new("m", 3, DecodeMode::Greedy)).unwrap();
    assert_eq!(other.documents(), nucleus.documents());
    assert_eq!(read_meta(tmp.path()).unwrap(), nucleus.meta);
}

#[test]
fn reexported_series_extracts_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = FixtureCorpus::new();
    c.carriers("relative_clauses", 3).carriers("quotes", 2).pad_to(200);
    let gens: Vec<_> = (0..2).map(|g| c.build(CorpusMeta::new("m", g, DecodeMode::Nucleus), 9, None)).collect();
    for g in &gens {
        g.export(&tmp.path().join("m").join(format!("gen{}", g.meta.generation))).unwrap();
    }
    let direct = depthstrata::corpus::GenerationSeries::new("m", gens).unwrap();
    let loaded = depthstrata::corpus::load_series(tmp.path(), "m").unwrap();
    let specs = primary17();
    assert_eq!(extract_panel(&direct, &specs).unwrap(), extract_panel(&loaded, &specs).unwrap());
}

#[test]
fn malformed_conllu_is_located() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("documents.jsonl"), "{\"doc_id\":\"a\",\"text\":\"x y\"}\n").unwrap();
    std::fs::write(tmp.path().join("parses.conllu"), "# doc_id = a\n1\tx\tx\tX\t_\t_\t0\troot\t_\t_\n2\ty\n\n")
        .unwrap();
    let e = ingest_corpus(tmp.path(), CorpusMeta::new("m", 0, DecodeMode::Nucleus)).unwrap_err();
    assert!(e.is_validation());
    assert!(e.to_string().contains('3'), "{e}");
}

#[test]
fn missing_documents_file_is_an_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    let e = ingest_corpus(tmp.path(), CorpusMeta::new("m", 0, DecodeMode::Nucleus)).unwrap_err();
    assert!(!e.is_validation());
    assert!(matches!(e, Error::Io { .. }), "{e}");
}
