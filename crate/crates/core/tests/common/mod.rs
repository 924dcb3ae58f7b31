#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pattern_cse::io::to_jsonl;
use pattern_cse::pattern_sim::dataset::corpus_to_jsonl;
use pattern_cse::pattern_sim::PatternSource;
use pattern_cse::synthetic::{SyntheticWorld, WorldConfig};

pub struct Inputs {
    pub corpus: PathBuf,
    pub eval: PathBuf,
    pub pattern_source: PathBuf,
}

/// Writes a synthetic corpus, STS eval set and STS pattern source into `dir`.
pub fn write_inputs(dir: &Path, corpus_size: usize, eval_pairs: usize, seed: u64) -> Inputs {
    let world = SyntheticWorld::new(WorldConfig::default(), seed).unwrap();
    let inputs = Inputs {
        corpus: dir.join("corpus.jsonl"),
        eval: dir.join("eval.jsonl"),
        pattern_source: dir.join("sts_source.jsonl"),
    };
    std::fs::write(
        &inputs.corpus,
        corpus_to_jsonl(&world.corpus(corpus_size, seed)).unwrap(),
    )
    .unwrap();
    std::fs::write(
        &inputs.eval,
        to_jsonl(&world.sts_records(eval_pairs, seed)).unwrap(),
    )
    .unwrap();
    let PatternSource::Sts(records) = world.pattern_source(seed) else {
        unreachable!()
    };
    std::fs::write(&inputs.pattern_source, to_jsonl(&records).unwrap()).unwrap();
    inputs
}

pub fn pcse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcse"))
        .args(args)
        .output()
        .unwrap()
}

/// Runs `pcse`, panicking with its stderr on failure.
pub fn pcse_ok(args: &[&str]) -> String {
    let out = pcse(args);
    assert!(
        out.status.success(),
        "pcse {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

pub fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}
