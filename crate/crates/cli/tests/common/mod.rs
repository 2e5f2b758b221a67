#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hiertype::synthetic::{SyntheticSpec, ONTOLOGY_15};
use hiertype::DatasetRecord;

pub fn hiertype(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hiertype"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("spawn hiertype")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

pub fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

pub fn write_jsonl(path: &Path, records: &[DatasetRecord]) {
    let text: String = records
        .iter()
        .map(|r| serde_json::to_string(r).unwrap() + "\n")
        .collect();
    std::fs::write(path, text).unwrap();
}

/// Ontology, train/dev splits and a config for the 15-type synthetic task.
pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub ontology: PathBuf,
    pub train: PathBuf,
    pub dev: PathBuf,
    pub config: PathBuf,
    pub dev_records: Vec<DatasetRecord>,
}

pub fn synthetic_fixture(n: usize, n_train: usize, config: serde_json::Value) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let ontology = dir.path().join("types.txt");
    std::fs::write(&ontology, ONTOLOGY_15.join("\n") + "\n").unwrap();
    let records = SyntheticSpec::default().records(n, 1);
    let train = dir.path().join("train.jsonl");
    let dev = dir.path().join("dev.jsonl");
    write_jsonl(&train, &records[..n_train]);
    write_jsonl(&dev, &records[n_train..]);
    let cfg = dir.path().join("config.json");
    std::fs::write(&cfg, config.to_string()).unwrap();
    Fixture {
        ontology,
        train,
        dev,
        config: cfg,
        dev_records: records[n_train..].to_vec(),
        dir,
    }
}

pub fn small_config() -> serde_json::Value {
    serde_json::json!({
        "alpha": 0.15,
        "beta": 0.1,
        "lambda": 1e-4,
        "p_D": 0.1,
        "learning_rate": 5e-3,
        "batch_size": 16,
        "max_epochs": 100,
        "patience": 15,
        "d_t": 32,
        "k": [2, 1, 1],
        "hashed_dim": 16
    })
}

pub fn read_lines(path: &Path) -> Vec<serde_json::Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}
