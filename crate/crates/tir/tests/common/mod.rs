#![allow(dead_code)]

use std::path::PathBuf;
use tir::TirModule;

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .canonicalize()
        .unwrap()
}

pub fn corpus_dir() -> PathBuf {
    repo_root().join("corpus")
}

pub fn platform_path(name: &str) -> PathBuf {
    repo_root().join("platforms").join(format!("{name}.platform"))
}

/// All corpus programs as (stem, source text, parsed module), sorted by name.
pub fn load_corpus() -> Vec<(String, String, TirModule)> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(corpus_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("tir") {
            continue;
        }
        let stem = path.file_stem().unwrap().to_string_lossy().into_owned();
        let text = std::fs::read_to_string(&path).unwrap();
        let module = tir::parse_module(&text)
            .unwrap_or_else(|e| panic!("corpus {stem} failed to parse: {e}"));
        out.push((stem, text, module));
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    assert!(out.len() >= 12, "corpus is incomplete: {} programs", out.len());
    out
}

pub fn corpus_module(stem: &str) -> TirModule {
    let path = corpus_dir().join(format!("{stem}.tir"));
    let text = std::fs::read_to_string(&path).unwrap();
    tir::parse_module(&text).unwrap()
}

pub fn run(m: &TirModule) -> i64 {
    tir::exec::interpret(m, tir::exec::DEFAULT_FUEL)
        .unwrap()
        .exit_value
}
