use std::path::PathBuf;

use rand::Rng;
use serde::Deserialize;

use dialbench::domain::{load_ontology, DomainCode};
use dialbench::env::standard_ontology;
use dialbench::seeding::seed_stream;

fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

#[test]
fn shipped_ontologies_match_generator() {
    for code in DomainCode::ALL {
        let path = repo_root().join("data").join(format!("{code}.json"));
        let shipped = load_ontology(&path).unwrap();
        assert_eq!(
            &shipped,
            standard_ontology(code).as_ref(),
            "{} is stale",
            path.display()
        );
        let m = shipped.meta();
        assert_eq!(
            (m.n_constraint, m.n_requestable, m.total_requestable_values),
            code.table_counts()
        );
    }
}

#[derive(Deserialize)]
struct SeedFixture {
    run_seed: u64,
    index: u64,
    draws: Vec<u64>,
}

#[test]
fn seed_stream_fixture() {
    let text = std::fs::read_to_string(
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/seed_stream.json"),
    )
    .unwrap();
    let f: SeedFixture = serde_json::from_str(&text).unwrap();
    let mut r = seed_stream(f.run_seed, f.index);
    let got: Vec<u64> = (0..f.draws.len()).map(|_| r.random()).collect();
    assert_eq!(got, f.draws);
}

#[test]
fn parameter_ledger_lists_every_parameter() {
    use dialbench::error_channel::ErrorParams;
    use dialbench::user::UserParams;
    let ledger = std::fs::read_to_string(repo_root().join("docs/parameters.md")).unwrap();
    let rows: Vec<&str> = ledger
        .lines()
        .filter(|l| l.starts_with("| ") && l.contains('`'))
        .collect();
    assert_eq!(rows.len(), 26 + 41);
    for name in UserParams::NAMES.iter().chain(ErrorParams::NAMES.iter()) {
        assert!(
            ledger.contains(&format!("`{name}`")),
            "{name} missing from the ledger"
        );
    }
}
