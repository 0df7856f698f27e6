//! Offline stand-in for the external embedder: hashes the words of each step
//! into a fixed-width vector and writes `embed/<role>/<id>.emb1` for every
//! row of `<run-dir>/steps.jsonl`.
//!
//! ```text
//! cargo run -p trace-topology --example hash_embed -- <run-dir> [dim]
//! ```

use std::path::Path;

use trace_topology::embedding::{write_matrix, EmbeddingMatrix};
use trace_topology::segment::StepSequence;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(FNV_OFFSET, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(FNV_PRIME)
    })
}

/// Signed feature hashing of lowercase word tokens and their bigrams.
pub fn hash_step(text: &str, dim: usize) -> Vec<f32> {
    let words: Vec<String> = text
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect();
    let mut v = vec![0.0f32; dim];
    let bigrams = words.windows(2).map(|w| format!("{} {}", w[0], w[1]));
    for tok in words.iter().cloned().chain(bigrams) {
        let h = fnv1a(&tok);
        let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
        v[(h % dim as u64) as usize] += sign;
    }
    v
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let run_dir = args.next().ok_or("usage: hash_embed <run-dir> [dim]")?;
    let dim: usize = args.next().map_or(Ok(32), |d| d.parse())?;
    let run_dir = Path::new(&run_dir);
    let text = std::fs::read_to_string(run_dir.join("steps.jsonl"))?;
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let seq: StepSequence = serde_json::from_str(line)?;
        if seq.steps.is_empty() {
            continue;
        }
        let rows: Vec<Vec<f32>> = seq.steps.iter().map(|s| hash_step(s, dim)).collect();
        let path = run_dir
            .join("embed")
            .join(seq.role.as_str())
            .join(format!("{}.emb1", seq.source_id));
        write_matrix(&EmbeddingMatrix::from_rows(&rows)?, &path)?;
        println!("{} ({} x {dim})", path.display(), rows.len());
    }
    Ok(())
}
