use serde::Serialize;

use super::{mean, DesignMatrix, StatsError};
use crate::embedding::DistanceMatrix;

/// Pearson correlation distance `1 - |r|` between the columns of `z`.
/// A column without variance is treated as uncorrelated with everything.
pub fn corr_distance(z: &DesignMatrix) -> DistanceMatrix {
    let centred: Vec<Vec<f64>> = z
        .columns()
        .iter()
        .map(|c| {
            let m = mean(c);
            c.iter().map(|v| v - m).collect()
        })
        .collect();
    let norms: Vec<f64> = centred
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    DistanceMatrix::from_fn(z.p(), |a, b| {
        let denom = norms[a] * norms[b];
        let r = if denom > 0.0 {
            centred[a]
                .iter()
                .zip(&centred[b])
                .map(|(x, y)| x * y)
                .sum::<f64>()
                / denom
        } else {
            0.0
        };
        (1.0 - r.abs()).clamp(0.0, 1.0)
    })
    .expect("correlation distances are finite, symmetric and in [0, 1]")
}

/// Flat clustering of features. Cluster ids follow the smallest member.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClusterPartition {
    pub k: usize,
    pub assignment: Vec<usize>,
}

impl ClusterPartition {
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (j, &c) in self.assignment.iter().enumerate() {
            out[c].push(j);
        }
        out
    }
}

/// Greedy agglomeration from singletons under mean pairwise distance. Ties
/// go to the lexicographically first pair of cluster positions.
pub fn average_linkage(d: &DistanceMatrix, k: usize) -> Result<ClusterPartition, StatsError> {
    let p = d.len();
    if k == 0 || k > p {
        return Err(StatsError::ClusterCount { k, min: 1, max: p });
    }
    let mut clusters: Vec<Vec<usize>> = (0..p).map(|j| vec![j]).collect();
    // Sum of pairwise distances between clusters, indexed by position.
    let mut sums: Vec<Vec<f64>> = (0..p)
        .map(|a| (0..p).map(|b| d.get(a, b)).collect())
        .collect();
    while clusters.len() > k {
        let c = clusters.len();
        let mut best = (f64::INFINITY, 0, 1);
        for a in 0..c {
            for b in a + 1..c {
                let delta = sums[a][b] / (clusters[a].len() * clusters[b].len()) as f64;
                if delta < best.0 {
                    best = (delta, a, b);
                }
            }
        }
        let (_, a, b) = best;
        let moved = clusters.remove(b);
        clusters[a].extend(moved);
        for t in 0..c {
            let merged = sums[a][t] + sums[b][t];
            sums[a][t] = merged;
            sums[t][a] = merged;
        }
        sums[a][a] = 0.0;
        sums.remove(b);
        for row in sums.iter_mut() {
            row.remove(b);
        }
    }
    let mut assignment = vec![0; p];
    for (id, members) in clusters.iter().enumerate() {
        for &j in members {
            assignment[j] = id;
        }
    }
    Ok(ClusterPartition { k, assignment })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Silhouette {
    pub per_feature: Vec<f64>,
    pub overall: f64,
}

pub fn silhouette(d: &DistanceMatrix, part: &ClusterPartition) -> Result<Silhouette, StatsError> {
    let p = d.len();
    if part.assignment.len() != p {
        return Err(StatsError::Partition(format!(
            "{} assignments for {p} features",
            part.assignment.len()
        )));
    }
    let members = part.members();
    if members.iter().any(Vec::is_empty) {
        return Err(StatsError::Partition("empty cluster".into()));
    }
    if part.k < 2 {
        return Err(StatsError::ClusterCount {
            k: part.k,
            min: 2,
            max: p,
        });
    }
    let per_feature: Vec<f64> = (0..p)
        .map(|j| {
            let own = part.assignment[j];
            let a = if members[own].len() == 1 {
                0.0
            } else {
                members[own].iter().map(|&i| d.get(j, i)).sum::<f64>()
                    / (members[own].len() - 1) as f64
            };
            let b = members
                .iter()
                .enumerate()
                .filter(|&(c, _)| c != own)
                .map(|(_, m)| m.iter().map(|&i| d.get(j, i)).sum::<f64>() / m.len() as f64)
                .fold(f64::INFINITY, f64::min);
            let denom = a.max(b);
            if denom > 0.0 {
                (b - a) / denom
            } else {
                0.0
            }
        })
        .collect();
    let overall = mean(&per_feature);
    Ok(Silhouette {
        per_feature,
        overall,
    })
}

/// Overall silhouette for each requested cluster count.
pub fn silhouette_sweep(d: &DistanceMatrix, ks: &[usize]) -> Result<Vec<(usize, f64)>, StatsError> {
    ks.iter()
        .map(|&k| {
            if k < 2 || k > d.len() {
                return Err(StatsError::ClusterCount {
                    k,
                    min: 2,
                    max: d.len(),
                });
            }
            let part = average_linkage(d, k)?;
            Ok((k, silhouette(d, &part)?.overall))
        })
        .collect()
}

/// Mean of member columns per cluster, named `C1`, `C2`, ... by cluster id.
pub fn cluster_aggregate(
    z: &DesignMatrix,
    part: &ClusterPartition,
) -> Result<DesignMatrix, StatsError> {
    if part.assignment.len() != z.p() {
        return Err(StatsError::Partition(format!(
            "{} assignments for {} columns",
            part.assignment.len(),
            z.p()
        )));
    }
    let members = part.members();
    if members.iter().any(Vec::is_empty) {
        return Err(StatsError::Partition("empty cluster".into()));
    }
    let names = (1..=part.k).map(|r| format!("C{r}")).collect();
    let columns = members
        .iter()
        .map(|m| {
            (0..z.n())
                .map(|i| m.iter().map(|&j| z.get(i, j)).sum::<f64>() / m.len() as f64)
                .collect()
        })
        .collect();
    DesignMatrix::new(names, columns)
}
