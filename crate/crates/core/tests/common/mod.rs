#![allow(dead_code)]

use std::path::PathBuf;

use serde::Deserialize;
use serde_json::Value;

pub const BUNDLE_VERSION: u64 = 1;

#[derive(Debug, Deserialize)]
pub struct Bundle {
    pub version: u64,
    pub entries: Vec<Entry>,
}

#[derive(Debug, Deserialize)]
pub struct Entry {
    pub kind: String,
    pub input: Value,
    pub expected: Value,
    pub tool_provenance: String,
}

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

pub fn bundle(name: &str) -> Bundle {
    let text = std::fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    let b: Bundle = serde_json::from_str(&text).unwrap();
    assert_eq!(b.version, BUNDLE_VERSION, "{name}: unsupported bundle version");
    assert!(b.entries.iter().all(|e| !e.tool_provenance.is_empty()));
    b
}

pub fn corpus() -> Vec<String> {
    std::fs::read_to_string(fixture_path("desk_corpus.smi"))
        .unwrap()
        .lines()
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}
