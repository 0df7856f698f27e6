//! Embedding matrices, the `EMB1` file format and cosine kernels.
//!
//! `EMB1` layout (little-endian throughout, no padding or footer):
//!
//! | bytes      | content                          |
//! |------------|----------------------------------|
//! | 0..4       | magic `b"EMB1"`                  |
//! | 4..8       | row count `u32`                  |
//! | 8..12      | column count `u32`               |
//! | 12..       | `rows * cols` `f32`, row-major   |

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"EMB1";
pub const HEADER_LEN: usize = 12;

/// Norm guard used by [`cosine_similarity`].
pub const COSINE_EPS: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("storage error at {path}: {source}")]
    Storage {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: bad magic {found:?}, expected \"EMB1\"")]
    BadMagic { path: PathBuf, found: [u8; 4] },
    #[error("{path}: truncated file, expected {expected} bytes but found {actual}")]
    Truncated {
        path: PathBuf,
        expected: u64,
        actual: u64,
    },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    Dimension { left: usize, right: usize },
    #[error("matrix data has {len} values, expected {rows}x{cols}")]
    Shape {
        rows: usize,
        cols: usize,
        len: usize,
    },
    #[error("column count must be at least 1")]
    ZeroColumns,
    #[error("empty matrix")]
    Empty,
}

/// Row-major `rows x cols` matrix of step embeddings, one row per step.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self, EmbeddingError> {
        if cols == 0 {
            return Err(EmbeddingError::ZeroColumns);
        }
        if data.len() != rows * cols {
            return Err(EmbeddingError::Shape {
                rows,
                cols,
                len: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(EmbeddingError::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R]) -> Result<Self, EmbeddingError> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(EmbeddingError::Dimension {
                    left: cols,
                    right: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self, EmbeddingError> {
        Self::new(rows, cols, vec![0.0; rows * cols])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.cols)
    }

    /// Serializes to the `EMB1` byte layout.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * self.data.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.rows as u32).to_le_bytes());
        out.extend_from_slice(&(self.cols as u32).to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    /// Parses the `EMB1` byte layout. `origin` is only used in error messages.
    pub fn from_bytes(bytes: &[u8], origin: &Path) -> Result<Self, EmbeddingError> {
        if bytes.len() < HEADER_LEN {
            return Err(EmbeddingError::Truncated {
                path: origin.to_path_buf(),
                expected: HEADER_LEN as u64,
                actual: bytes.len() as u64,
            });
        }
        let magic: [u8; 4] = bytes[0..4].try_into().expect("4-byte slice");
        if &magic != MAGIC {
            return Err(EmbeddingError::BadMagic {
                path: origin.to_path_buf(),
                found: magic,
            });
        }
        let rows = u32::from_le_bytes(bytes[4..8].try_into().expect("4-byte slice")) as usize;
        let cols = u32::from_le_bytes(bytes[8..12].try_into().expect("4-byte slice")) as usize;
        let expected = HEADER_LEN as u64 + 4 * rows as u64 * cols as u64;
        if bytes.len() as u64 != expected {
            return Err(EmbeddingError::Truncated {
                path: origin.to_path_buf(),
                expected,
                actual: bytes.len() as u64,
            });
        }
        let data = bytes[HEADER_LEN..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4-byte chunk")))
            .collect();
        Self::new(rows, cols, data)
    }
}

/// Writes `m` to `path` in `EMB1` format via a sibling temp file and rename.
pub fn write_matrix(m: &EmbeddingMatrix, path: &Path) -> Result<(), EmbeddingError> {
    write_atomic(path, &m.to_bytes()).map_err(|source| EmbeddingError::Storage {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_matrix(path: &Path) -> Result<EmbeddingMatrix, EmbeddingError> {
    let bytes = fs::read(path).map_err(|source| EmbeddingError::Storage {
        path: path.to_path_buf(),
        source,
    })?;
    EmbeddingMatrix::from_bytes(&bytes, path)
}

/// Replaces `path` with `contents` so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    // Temp files are created owner-only; artifacts should read like normal files.
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file()
            .set_permissions(fs::Permissions::from_mode(0o644))?;
    }
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// `(a . b) / ((|a| + eps) (|b| + eps))`, accumulated in `f64`.
pub fn cosine_similarity(a: &[f32], b: &[f32]) -> Result<f64, EmbeddingError> {
    if a.len() != b.len() {
        return Err(EmbeddingError::Dimension {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(cosine_unchecked(a, b))
}

pub(crate) fn cosine_unchecked(a: &[f32], b: &[f32]) -> f64 {
    let mut dot = 0.0f64;
    let mut na = 0.0f64;
    let mut nb = 0.0f64;
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (f64::from(x), f64::from(y));
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    dot / ((na.sqrt() + COSINE_EPS) * (nb.sqrt() + COSINE_EPS))
}

/// Symmetric `n x n` matrix of pairwise distances with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    values: Vec<f64>,
}

#[derive(Debug, Error, PartialEq)]
pub enum DistanceError {
    #[error("distance matrix has {len} values, expected {n}x{n}")]
    Shape { n: usize, len: usize },
    #[error("entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("entry ({row}, {col}) is negative")]
    Negative { row: usize, col: usize },
    #[error("entries ({row}, {col}) and ({col}, {row}) differ")]
    Asymmetric { row: usize, col: usize },
    #[error("diagonal entry {index} is not zero")]
    NonZeroDiagonal { index: usize },
}

impl DistanceMatrix {
    /// Validates a row-major matrix: finite, non-negative, symmetric (to 1e-9
    /// relative), zero diagonal. The stored matrix is exactly symmetric, taken
    /// from the upper triangle.
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self, DistanceError> {
        if values.len() != n * n {
            return Err(DistanceError::Shape {
                n,
                len: values.len(),
            });
        }
        for r in 0..n {
            for c in 0..n {
                let v = values[r * n + c];
                if !v.is_finite() {
                    return Err(DistanceError::NonFinite { row: r, col: c });
                }
                if v < 0.0 {
                    return Err(DistanceError::Negative { row: r, col: c });
                }
            }
            if values[r * n + r] != 0.0 {
                return Err(DistanceError::NonZeroDiagonal { index: r });
            }
        }
        let mut values = values;
        for r in 0..n {
            for c in r + 1..n {
                let (a, b) = (values[r * n + c], values[c * n + r]);
                if (a - b).abs() > 1e-9 * a.abs().max(b.abs()).max(1.0) {
                    return Err(DistanceError::Asymmetric { row: r, col: c });
                }
                values[c * n + r] = a;
            }
        }
        Ok(Self { n, values })
    }

    pub fn from_fn(
        n: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self, DistanceError> {
        let mut values = vec![0.0; n * n];
        for r in 0..n {
            for c in r + 1..n {
                let v = f(r, c);
                values[r * n + c] = v;
                values[c * n + r] = v;
            }
        }
        Self::new(n, values)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.n + c]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest entry, 0 for matrices with fewer than two points.
    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Returns the matrix with every entry multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            n: self.n,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }
}

/// Pairwise `1 - cosine_similarity` between the rows of `x`, clamped to
/// `[0, 2]`, with an exactly zero diagonal.
pub fn cosine_distance_matrix(x: &EmbeddingMatrix) -> Result<DistanceMatrix, EmbeddingError> {
    let n = x.rows();
    if n == 0 {
        return Err(EmbeddingError::Empty);
    }
    // Row norms once; the kernel is the same guarded formula as cosine_similarity.
    let norms: Vec<f64> = x
        .iter_rows()
        .map(|r| {
            r.iter()
                .map(|&v| f64::from(v) * f64::from(v))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let mut values = vec![0.0; n * n];
    for p in 0..n {
        for q in p + 1..n {
            let dot: f64 = x
                .row(p)
                .iter()
                .zip(x.row(q))
                .map(|(&a, &b)| f64::from(a) * f64::from(b))
                .sum();
            let sim_pq = dot / ((norms[p] + COSINE_EPS) * (norms[q] + COSINE_EPS));
            let sim_qp = dot / ((norms[q] + COSINE_EPS) * (norms[p] + COSINE_EPS));
            let d = (0.5 * ((1.0 - sim_pq) + (1.0 - sim_qp))).clamp(0.0, 2.0);
            values[p * n + q] = d;
            values[q * n + p] = d;
        }
    }
    Ok(DistanceMatrix { n, values })
}
