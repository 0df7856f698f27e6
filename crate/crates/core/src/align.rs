//! Step alignment between a model trace and gold steps in embedding space.
//!
//! Two dynamic programs are provided. [`align_global`] is the default: a
//! forward-relaxation DP over an `(n+1) x (m+1)` table seeded with `-inf`,
//! backtracked from `(n, m)`. [`align_local`] is the Smith-Waterman
//! recurrence with a zero floor, backtracked from the best cell.
//!
//! Both score the recovered pairs the same way: `score` is the mean cosine
//! similarity over aligned pairs and `coverage` the fraction of gold steps
//! that appear in some pair.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::{cosine_unchecked, EmbeddingMatrix};

pub const DEFAULT_GAP: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlignMode {
    #[default]
    Global,
    Local,
}

impl AlignMode {
    pub fn as_str(self) -> &'static str {
        match self {
            AlignMode::Global => "global",
            AlignMode::Local => "local",
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum AlignError {
    #[error("embedding dimension mismatch: trace has {trace} columns, gold has {gold}")]
    Dimension { trace: usize, gold: usize },
    #[error("gap penalty must be finite and non-negative (positive for local mode), got {0}")]
    Gap(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentResult {
    /// `(trace_index, gold_index)`, strictly increasing in both coordinates.
    pub pairs: Vec<(usize, usize)>,
    pub score: f64,
    pub coverage: f64,
}

impl AlignmentResult {
    fn empty() -> Self {
        Self {
            pairs: Vec::new(),
            score: 0.0,
            coverage: 0.0,
        }
    }

    fn from_pairs(pairs: Vec<(usize, usize)>, sim: &SimilarityMatrix) -> Self {
        let score = if pairs.is_empty() {
            0.0
        } else {
            pairs.iter().map(|&(i, j)| sim.get(i, j)).sum::<f64>() / pairs.len() as f64
        };
        let mut gold: Vec<usize> = pairs.iter().map(|&(_, j)| j).collect();
        gold.sort_unstable();
        gold.dedup();
        let coverage = gold.len() as f64 / sim.cols.max(1) as f64;
        Self {
            pairs,
            score,
            coverage,
        }
    }
}

/// Row-major `n x m` cosine similarities between trace rows and gold rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), rows * cols, "similarity shape");
        Self { rows, cols, values }
    }

    pub fn between(trace: &EmbeddingMatrix, gold: &EmbeddingMatrix) -> Result<Self, AlignError> {
        if trace.cols() != gold.cols() {
            return Err(AlignError::Dimension {
                trace: trace.cols(),
                gold: gold.cols(),
            });
        }
        let values = trace
            .iter_rows()
            .flat_map(|r| gold.iter_rows().map(move |g| cosine_unchecked(r, g)))
            .collect();
        Ok(Self::new(trace.rows(), gold.rows(), values))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }
}

/// Global alignment of trace steps `xr` against gold steps `xs`.
pub fn align_global(
    xr: &EmbeddingMatrix,
    xs: &EmbeddingMatrix,
    gap: f64,
) -> Result<AlignmentResult, AlignError> {
    if !(gap.is_finite() && gap >= 0.0) {
        return Err(AlignError::Gap(gap));
    }
    let sim = SimilarityMatrix::between(xr, xs)?;
    Ok(global_from_similarity(&sim, gap).0)
}

/// Local (Smith-Waterman) alignment of trace steps `xr` against gold steps `xs`.
pub fn align_local(
    xr: &EmbeddingMatrix,
    xs: &EmbeddingMatrix,
    gap: f64,
) -> Result<AlignmentResult, AlignError> {
    if !(gap.is_finite() && gap > 0.0) {
        return Err(AlignError::Gap(gap));
    }
    let sim = SimilarityMatrix::between(xr, xs)?;
    Ok(local_from_similarity(&sim, gap).0)
}

pub fn align(
    mode: AlignMode,
    xr: &EmbeddingMatrix,
    xs: &EmbeddingMatrix,
    gap: f64,
) -> Result<AlignmentResult, AlignError> {
    match mode {
        AlignMode::Global => align_global(xr, xs, gap),
        AlignMode::Local => align_local(xr, xs, gap),
    }
}

/// Runs the global DP on a precomputed similarity matrix. Returns the
/// alignment and the terminal value `dp[n][m]`.
pub fn global_from_similarity(sim: &SimilarityMatrix, gap: f64) -> (AlignmentResult, f64) {
    let (n, m) = (sim.rows, sim.cols);
    if n == 0 || m == 0 {
        return (AlignmentResult::empty(), 0.0);
    }
    let w = m + 1;
    let mut dp = vec![f64::NEG_INFINITY; (n + 1) * w];
    let mut back = vec![(usize::MAX, usize::MAX); (n + 1) * w];
    dp[0] = 0.0;
    for i in 0..=n {
        for j in 0..=m {
            let cur = dp[i * w + j];
            if i < n && j < m {
                let cand = cur + sim.get(i, j);
                let to = (i + 1) * w + j + 1;
                if cand > dp[to] {
                    dp[to] = cand;
                    back[to] = (i, j);
                }
            }
            if i < n {
                let cand = cur - gap;
                let to = (i + 1) * w + j;
                if cand > dp[to] {
                    dp[to] = cand;
                    back[to] = (i, j);
                }
            }
            if j < m {
                let cand = cur - gap;
                let to = i * w + j + 1;
                if cand > dp[to] {
                    dp[to] = cand;
                    back[to] = (i, j);
                }
            }
        }
    }

    let (mut i, mut j) = (n, m);
    let mut pairs = Vec::new();
    while i > 0 || j > 0 {
        let (pi, pj) = back[i * w + j];
        if pi + 1 == i && pj + 1 == j {
            pairs.push((pi, pj));
        }
        i = pi;
        j = pj;
    }
    pairs.reverse();
    (AlignmentResult::from_pairs(pairs, sim), dp[n * w + m])
}

/// Runs the local DP on a precomputed similarity matrix. Returns the
/// alignment and the best cell value.
pub fn local_from_similarity(sim: &SimilarityMatrix, gap: f64) -> (AlignmentResult, f64) {
    let (n, m) = (sim.rows, sim.cols);
    if n == 0 || m == 0 {
        return (AlignmentResult::empty(), 0.0);
    }
    let w = m + 1;
    let mut h = vec![0.0f64; (n + 1) * w];
    let mut best = (0.0, 0, 0);
    for u in 1..=n {
        for v in 1..=m {
            let val = 0.0f64
                .max(h[(u - 1) * w + v - 1] + sim.get(u - 1, v - 1))
                .max(h[(u - 1) * w + v] - gap)
                .max(h[u * w + v - 1] - gap);
            h[u * w + v] = val;
            if val > best.0 {
                best = (val, u, v);
            }
        }
    }

    let (best_val, mut u, mut v) = best;
    let mut pairs = Vec::new();
    while u > 0 && v > 0 && h[u * w + v] > 0.0 {
        let here = h[u * w + v];
        if here == h[(u - 1) * w + v - 1] + sim.get(u - 1, v - 1) {
            pairs.push((u - 1, v - 1));
            u -= 1;
            v -= 1;
        } else if here == h[(u - 1) * w + v] - gap {
            u -= 1;
        } else {
            v -= 1;
        }
    }
    pairs.reverse();
    (AlignmentResult::from_pairs(pairs, sim), best_val)
}
