#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use trace_topology::embedding::{write_matrix, EmbeddingMatrix};
use trace_topology::segment::StepSequence;

pub const BIN: &str = env!("CARGO_BIN_EXE_trace-topology");

pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("fixtures")
}

pub fn run(stage: &str, run_dir: &Path, extra: &[&str]) -> Outcome {
    let out = Command::new(BIN)
        .arg(stage)
        .arg("--run-dir")
        .arg(run_dir)
        .args(extra)
        .env_remove("TRACE_ENDPOINT")
        .env("RUST_LOG", "off")
        .output()
        .expect("binary runs");
    Outcome {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

pub fn run_ok(stage: &str, run_dir: &Path, extra: &[&str]) -> Outcome {
    let o = run(stage, run_dir, extra);
    assert_eq!(o.code, 0, "{stage} failed: {}{}", o.stdout, o.stderr);
    o
}

pub fn copy_dir(from: &Path, to: &Path) {
    fs::create_dir_all(to).unwrap();
    for entry in fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        let target = to.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            copy_dir(&entry.path(), &target);
        } else {
            fs::copy(entry.path(), target).unwrap();
        }
    }
}

pub fn generate_fixture(run_dir: &Path) {
    let fx = fixtures();
    let corpus = fx.join("corpus.json");
    let stub = fx.join("stub_responses.json");
    run_ok(
        "generate",
        run_dir,
        &[
            "--corpus",
            corpus.to_str().unwrap(),
            "--stub",
            "--stub-responses",
            stub.to_str().unwrap(),
        ],
    );
    run_ok("segment", run_dir, &[]);
    copy_dir(&fx.join("embed"), &run_dir.join("embed"));
}

/// Full pipeline over the bundled four-problem fixture.
pub fn run_fixture_pipeline(run_dir: &Path, workers: &str) {
    generate_fixture(run_dir);
    for stage in ["align", "tda", "graph", "stats", "report"] {
        run_ok(stage, run_dir, &["--workers", workers]);
    }
}

pub fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn manifest(run_dir: &Path) -> Value {
    serde_json::from_str(&read(&run_dir.join("manifest.json"))).unwrap()
}

pub fn read_jsonl(path: &Path) -> Vec<Value> {
    read(path)
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

pub fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect();
    (header, rows)
}

/// Writes a corpus of `n` problems whose canned responses vary in length,
/// generates and segments it, then embeds every step with random vectors
/// drawn around a per-item drift so features differ between items.
pub fn synthetic_run(run_dir: &Path, n: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    fs::create_dir_all(run_dir).unwrap();
    let mut corpus = Vec::new();
    let mut stub = serde_json::Map::new();
    for i in 0..n {
        let id = format!("syn-{i:03}");
        let gold_len = rng.gen_range(3..7);
        let trace_len = rng.gen_range(4..14);
        let gold: Vec<String> = (0..gold_len)
            .map(|k| format!("Gold step {k} of {id}."))
            .collect();
        let trace: Vec<String> = (0..trace_len)
            .map(|k| format!("Trace step {k} of {id}."))
            .collect();
        corpus.push(json!({
            "id": id,
            "year": 2020 + (i % 6),
            "statement": format!("Problem {i}."),
            "answer": i % 1000,
            "solutions": [gold.join(" ")],
        }));
        stub.insert(id, Value::String(trace.join(" ")));
    }
    let corpus_path = run_dir.join("input_corpus.json");
    let stub_path = run_dir.join("input_stub.json");
    fs::write(&corpus_path, serde_json::to_vec(&corpus).unwrap()).unwrap();
    fs::write(&stub_path, serde_json::to_vec(&stub).unwrap()).unwrap();
    run_ok(
        "generate",
        run_dir,
        &[
            "--corpus",
            corpus_path.to_str().unwrap(),
            "--stub",
            "--stub-responses",
            stub_path.to_str().unwrap(),
        ],
    );
    run_ok("segment", run_dir, &[]);

    let dim = 8;
    for row in read_jsonl(&run_dir.join("steps.jsonl")) {
        let seq: StepSequence = serde_json::from_value(row).unwrap();
        let drift: f32 = rng.gen_range(0.05..0.8);
        let mut x: Vec<f32> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let rows: Vec<Vec<f32>> = seq
            .steps
            .iter()
            .map(|_| {
                for v in x.iter_mut() {
                    *v += drift * rng.gen_range(-1.0f32..1.0);
                }
                x.clone()
            })
            .collect();
        let path = run_dir
            .join("embed")
            .join(seq.role.as_str())
            .join(format!("{}.emb1", seq.source_id));
        write_matrix(&EmbeddingMatrix::from_rows(&rows).unwrap(), &path).unwrap();
    }
}
