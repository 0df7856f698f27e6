//! Regression and feature-clustering statistics over tabular feature sets.

mod cluster;
mod ols;

use std::collections::HashSet;

use thiserror::Error;

pub use cluster::{
    average_linkage, cluster_aggregate, corr_distance, silhouette, silhouette_sweep,
    ClusterPartition, Silhouette,
};
pub use ols::{delta_pct, least_squares, ols_fit, stars, vif, LeastSquares, RegressionReport};

/// Relative pivot tolerance for rank detection.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("design matrix: {0}")]
    Design(String),
    #[error("no usable columns remain after dropping constants")]
    EmptyDesign,
    #[error("need more observations: n={n}, at least {needed} required")]
    TooFewObservations { n: usize, needed: usize },
    #[error("rank-deficient design; dependent columns: {}", .0.join(", "))]
    RankDeficient(Vec<String>),
    #[error("response is constant, R^2 is undefined")]
    ConstantResponse,
    #[error("cluster count {k} outside [{min}, {max}]")]
    ClusterCount { k: usize, min: usize, max: usize },
    #[error("partition does not match distance matrix: {0}")]
    Partition(String),
}

/// Column-major `n x p` design with unique column names.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    n: usize,
}

impl DesignMatrix {
    pub fn new(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self, StatsError> {
        if names.len() != columns.len() {
            return Err(StatsError::Design(format!(
                "{} names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        let n = columns.first().map_or(0, Vec::len);
        let mut seen = HashSet::new();
        for (name, col) in names.iter().zip(&columns) {
            if !seen.insert(name.as_str()) {
                return Err(StatsError::Design(format!("duplicate column {name:?}")));
            }
            if col.len() != n {
                return Err(StatsError::Design(format!(
                    "column {name:?} has {} rows, expected {n}",
                    col.len()
                )));
            }
            if col.iter().any(|v| !v.is_finite()) {
                return Err(StatsError::Design(format!(
                    "column {name:?} has a non-finite value"
                )));
            }
        }
        Ok(Self { names, columns, n })
    }

    /// Builds from row-major records.
    pub fn from_rows(names: Vec<String>, rows: &[Vec<f64>]) -> Result<Self, StatsError> {
        let p = names.len();
        if let Some(r) = rows.iter().find(|r| r.len() != p) {
            return Err(StatsError::Design(format!(
                "row of length {} for {p} columns",
                r.len()
            )));
        }
        let columns = (0..p)
            .map(|j| rows.iter().map(|r| r[j]).collect())
            .collect();
        let mut d = Self::new(names, columns)?;
        d.n = rows.len();
        Ok(d)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.columns[j][i]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    /// Columns of `self` followed by columns of `other`.
    pub fn hconcat(&self, other: &DesignMatrix) -> Result<Self, StatsError> {
        if self.p() > 0 && other.p() > 0 && self.n != other.n {
            return Err(StatsError::Design(format!(
                "row counts differ: {} vs {}",
                self.n, other.n
            )));
        }
        let mut names = self.names.clone();
        names.extend(other.names.iter().cloned());
        let mut columns = self.columns.clone();
        columns.extend(other.columns.iter().cloned());
        let mut d = Self::new(names, columns)?;
        d.n = if self.p() > 0 { self.n } else { other.n };
        Ok(d)
    }

    /// Keeps only the named columns, in the order of `self`.
    pub fn without(&self, drop: &[String]) -> Self {
        let (names, columns) = self
            .names
            .iter()
            .zip(&self.columns)
            .filter(|(n, _)| !drop.contains(n))
            .map(|(n, c)| (n.clone(), c.clone()))
            .unzip();
        Self {
            names,
            columns,
            n: self.n,
        }
    }
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population (divide-by-N) standard deviation.
pub(crate) fn pop_std(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Z-scores each column with its population standard deviation. Columns
/// whose deviation is zero up to rounding (`σ <= 1e-12 (1 + |μ|)`) are dropped
/// and their names returned.
pub fn standardize(x: &DesignMatrix) -> Result<(DesignMatrix, Vec<String>), StatsError> {
    if x.n() < 2 {
        return Err(StatsError::TooFewObservations {
            n: x.n(),
            needed: 2,
        });
    }
    let mut names = Vec::new();
    let mut columns = Vec::new();
    let mut dropped = Vec::new();
    for (name, col) in x.names.iter().zip(&x.columns) {
        let mu = mean(col);
        let sigma = pop_std(col);
        if sigma <= 1e-12 * (1.0 + mu.abs()) {
            dropped.push(name.clone());
            continue;
        }
        names.push(name.clone());
        columns.push(col.iter().map(|v| (v - mu) / sigma).collect());
    }
    if columns.is_empty() {
        return Err(StatsError::EmptyDesign);
    }
    let mut z = DesignMatrix::new(names, columns)?;
    z.n = x.n();
    Ok((z, dropped))
}
