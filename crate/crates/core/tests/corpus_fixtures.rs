//! Golden-file lock on the fixture tree under `corpus/`.
//!
//! Set `HYRA_BLESS=1` to rewrite the files from the builders.

use std::fs;
use std::path::PathBuf;

use hyra::corpus::{fixture_set, BenchmarkId};
use hyra::exec::Mode;

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

#[test]
fn fixtures_match_builders() {
    let bless = std::env::var_os("HYRA_BLESS").is_some_and(|v| v != "0");
    let mut stale = Vec::new();
    for id in BenchmarkId::ALL {
        let dir = corpus_dir().join(id.name());
        for (file, contents) in fixture_set(id, Mode::Parallel).unwrap() {
            let path = dir.join(file);
            if bless {
                fs::create_dir_all(&dir).unwrap();
                fs::write(&path, &contents).unwrap();
            } else if fs::read_to_string(&path).ok().as_deref() != Some(contents.as_str()) {
                stale.push(path.display().to_string());
            }
        }
    }
    assert!(
        stale.is_empty(),
        "fixtures differ from builder output (rerun with HYRA_BLESS=1): {stale:?}"
    );
}

#[test]
fn fixture_parallel_and_sequential_agree() {
    let id = BenchmarkId::Tank3;
    assert_eq!(
        fixture_set(id, Mode::Parallel).unwrap(),
        fixture_set(id, Mode::Sequential).unwrap()
    );
}

fn keys(v: &serde_json::Value) -> Vec<String> {
    let mut k: Vec<String> = v.as_object().unwrap().keys().cloned().collect();
    k.sort();
    k
}

fn required(v: &serde_json::Value) -> Vec<String> {
    let mut k: Vec<String> = v["required"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s.as_str().unwrap().to_string())
        .collect();
    k.sort();
    k
}

// the shipped schema names exactly the fields the writer produces
#[test]
fn schema_matches_written_json() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../docs/model.schema.json");
    let schema: serde_json::Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    let defs = &schema["$defs"];
    for id in BenchmarkId::ALL {
        let text = fs::read_to_string(corpus_dir().join(id.name()).join("model.json")).unwrap();
        let m: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(keys(&m), required(&schema), "{id}");
        assert_eq!(
            keys(&m["settings"]),
            required(&schema["properties"]["settings"]),
            "{id}"
        );
        assert_eq!(keys(&m["initial"]), required(&schema["properties"]["initial"]), "{id}");
        assert_eq!(keys(&m["locations"][0]), required(&defs["location"]), "{id}");
        if let Some(t) = m["transitions"].get(0) {
            assert_eq!(keys(t), required(&defs["transition"]), "{id}");
            if let Some(c) = t["guard"].get(0) {
                assert_eq!(keys(c), required(&defs["constraint"]), "{id}");
            }
        }
        assert_eq!(m["format"], schema["properties"]["format"]["const"]);
    }
}
