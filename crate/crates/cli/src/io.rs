//! Run-directory layout and file helpers. Every write goes through a temp
//! file and rename.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use trace_topology::embedding::{read_matrix, write_atomic, EmbeddingError};
use trace_topology::segment::Role;
use trace_topology::EmbeddingMatrix;

use crate::error::CliError;

pub const CORPUS: &str = "corpus.json";
pub const TRACES_DIR: &str = "traces";
pub const TRACES: &str = "traces.jsonl";
pub const STEPS: &str = "steps.jsonl";
pub const EMBED_DIR: &str = "embed";
pub const ALIGN: &str = "align.jsonl";
pub const DIAGRAMS_DIR: &str = "diagrams";
pub const FEATURES: &str = "features.jsonl";
pub const GRAPH: &str = "graph.jsonl";
pub const STATS_DIR: &str = "stats";
pub const REPORT_DIR: &str = "report";

pub fn embedding_rel(role: Role, id: &str) -> String {
    format!("{EMBED_DIR}/{role}/{id}.emb1")
}

pub fn diagram_rel(role: Role, id: &str) -> String {
    format!("{DIAGRAMS_DIR}/{role}/{id}.json")
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    write_atomic(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::format(path, e))?;
    bytes.push(b'\n');
    write_bytes(path, &bytes)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::format(path, e))
}

pub fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let mut out = Vec::new();
    for row in rows {
        serde_json::to_writer(&mut out, row).map_err(|e| CliError::format(path, e))?;
        out.push(b'\n');
    }
    write_bytes(path, &out)
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            serde_json::from_str(l)
                .map_err(|e| CliError::format(path, format!("line {}: {e}", n + 1)))
        })
        .collect()
}

/// CSV with a header row; an empty `rows` still yields the header.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::format(path, e);
    w.write_record(header).map_err(fail)?;
    for r in rows {
        w.write_record(r).map_err(fail)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::format(path, e))?;
    write_bytes(path, &bytes)
}

/// Shortest round-trip decimal; `inf`, `-inf` and `NaN` for non-finite values.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x}")
    }
}

/// Existing embedding files for `ids` under both roles; missing ones listed.
pub fn missing_embeddings(run_dir: &Path, ids: &[String]) -> Vec<String> {
    ids.iter()
        .flat_map(|id| Role::ALL.iter().map(move |&r| embedding_rel(r, id)))
        .filter(|rel| !run_dir.join(rel).is_file())
        .collect()
}

/// Reads an embedding and checks it has one row per step.
pub fn load_embedding(
    run_dir: &Path,
    role: Role,
    id: &str,
    steps: usize,
) -> Result<EmbeddingMatrix, String> {
    let path: PathBuf = run_dir.join(embedding_rel(role, id));
    let m = read_matrix(&path).map_err(|e: EmbeddingError| e.to_string())?;
    if m.rows() != steps {
        return Err(format!(
            "{} has {} rows but {} steps were segmented",
            path.display(),
            m.rows(),
            steps
        ));
    }
    Ok(m)
}
