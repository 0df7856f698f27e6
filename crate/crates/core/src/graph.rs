//! Graph baseline: cluster step embeddings with k-means, read the trace as a
//! walk over cluster labels, and summarise the resulting directed graph.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::EmbeddingMatrix;

pub const DEFAULT_CLUSTER_BUDGET: usize = 200;
pub const KMEANS_MAX_ITER: usize = 100;
pub const KMEANS_REL_TOL: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("k-means needs 1 <= k <= rows, got k={k} for {rows} rows")]
    ClusterCount { k: usize, rows: usize },
    #[error("graph needs at least 2 steps, got {0}")]
    TooFewSteps(usize),
    #[error("invalid step path: {0}")]
    InvalidPath(String),
}

/// 64-bit linear congruential generator (Knuth MMIX constants:
/// multiplier 6364136223846793005, increment 1442695040888963407).
/// Uniform reals use the top 53 bits of the state.
#[derive(Debug, Clone)]
pub struct Lcg64 {
    state: u64,
}

impl Lcg64 {
    pub const MULTIPLIER: u64 = 6364136223846793005;
    pub const INCREMENT: u64 = 1442695040888963407;

    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self
            .state
            .wrapping_mul(Self::MULTIPLIER)
            .wrapping_add(Self::INCREMENT);
        self.state
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    pub inertia: f64,
    pub iterations: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(p: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = sq_dist(p, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Within-cluster sum of squared distances for `labels` against `centers`.
pub fn inertia(points: &[Vec<f64>], labels: &[usize], centers: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .zip(labels)
        .map(|(p, &l)| sq_dist(p, &centers[l]))
        .sum()
}

fn plus_plus_init(points: &[Vec<f64>], k: usize, rng: &mut Lcg64) -> Vec<Vec<f64>> {
    let n = points.len();
    let first = ((rng.next_f64() * n as f64) as usize).min(n - 1);
    let mut chosen = vec![first];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[first])).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.next_f64() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                acc += w;
                pick = Some(i);
                if acc > target {
                    break;
                }
            }
            pick.expect("positive total has a positive weight")
        } else {
            // Every point coincides with a chosen center.
            (0..n).find(|i| !chosen.contains(i)).unwrap_or(first)
        };
        chosen.push(next);
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &points[next]));
        }
    }
    chosen.iter().map(|&i| points[i].clone()).collect()
}

/// Lloyd's algorithm with k-means++ seeding from [`Lcg64`]. Stops after
/// [`KMEANS_MAX_ITER`] rounds or when inertia changes by less than
/// [`KMEANS_REL_TOL`] relative. An empty cluster takes over the point
/// farthest from its current center, when that distance is positive.
pub fn kmeans(x: &EmbeddingMatrix, k: usize, seed: u64) -> Result<KMeansResult, GraphError> {
    let n = x.rows();
    if k == 0 || k > n {
        return Err(GraphError::ClusterCount { k, rows: n });
    }
    let points: Vec<Vec<f64>> = x
        .iter_rows()
        .map(|r| r.iter().map(|&v| f64::from(v)).collect())
        .collect();
    let dim = x.cols();
    let mut rng = Lcg64::new(seed);
    let mut centers = plus_plus_init(&points, k, &mut rng);
    let mut labels = vec![0; n];
    let mut prev = f64::INFINITY;
    let mut current = f64::INFINITY;
    let mut iterations = 0;

    for _ in 0..KMEANS_MAX_ITER {
        iterations += 1;
        let mut dist = vec![0.0; n];
        for (i, p) in points.iter().enumerate() {
            let (c, d) = nearest(p, &centers);
            labels[i] = c;
            dist[i] = d;
        }
        let mut sizes = vec![0usize; k];
        for &l in &labels {
            sizes[l] += 1;
        }
        for c in 0..k {
            if sizes[c] > 0 {
                continue;
            }
            let far = (0..n)
                .filter(|&i| sizes[labels[i]] > 1)
                .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)));
            if let Some(i) = far.filter(|&i| dist[i] > 0.0) {
                sizes[labels[i]] -= 1;
                labels[i] = c;
                sizes[c] = 1;
                dist[i] = 0.0;
                centers[c] = points[i].clone();
            }
        }

        let mut sums = vec![vec![0.0; dim]; k];
        for (p, &l) in points.iter().zip(&labels) {
            for (s, v) in sums[l].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if sizes[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / sizes[c] as f64).collect();
            }
        }

        current = inertia(&points, &labels, &centers);
        if current == 0.0 || (prev - current).abs() <= KMEANS_REL_TOL * prev {
            break;
        }
        prev = current;
    }

    Ok(KMeansResult {
        labels,
        centers,
        inertia: current,
        iterations,
    })
}

/// A walk over cluster labels with the center-to-center length of each step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepPath {
    pub path: Vec<usize>,
    pub edge_dists: Vec<f64>,
}

impl StepPath {
    pub fn new(path: Vec<usize>, edge_dists: Vec<f64>) -> Result<Self, GraphError> {
        if edge_dists.len() != path.len().saturating_sub(1) {
            return Err(GraphError::InvalidPath(format!(
                "{} labels need {} edge distances, got {}",
                path.len(),
                path.len().saturating_sub(1),
                edge_dists.len()
            )));
        }
        if let Some(d) = edge_dists.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
            return Err(GraphError::InvalidPath(format!("bad edge distance {d}")));
        }
        Ok(Self { path, edge_dists })
    }
}

pub fn build_graph(x: &EmbeddingMatrix, k: usize) -> Result<StepPath, GraphError> {
    let n = x.rows();
    if n < 2 {
        return Err(GraphError::TooFewSteps(n));
    }
    let km = kmeans(x, k.min(n), 0)?;
    let edge_dists = km
        .labels
        .windows(2)
        .map(|w| sq_dist(&km.centers[w[1]], &km.centers[w[0]]).sqrt())
        .collect();
    Ok(StepPath {
        path: km.labels,
        edge_dists,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphFeatureVector {
    pub has_loop: bool,
    pub loop_count: usize,
    pub diameter: f64,
    pub avg_path_length: f64,
    pub avg_clustering: f64,
    pub small_world_index: f64,
}

impl GraphFeatureVector {
    pub const NAMES: [&'static str; 6] = [
        "avg_clustering",
        "avg_path_length",
        "diameter",
        "has_loop",
        "loop_count",
        "small_world_index",
    ];

    /// Numeric values in [`Self::NAMES`] order, booleans as 0/1.
    pub fn as_row(&self) -> [f64; 6] {
        [
            self.avg_clustering,
            self.avg_path_length,
            self.diameter,
            f64::from(u8::from(self.has_loop)),
            self.loop_count as f64,
            self.small_world_index,
        ]
    }
}

type Adjacency = BTreeMap<usize, Vec<(usize, f64)>>;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Dist(f64);

impl Eq for Dist {}

impl PartialOrd for Dist {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dist {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Shortest distances from `source` to every node it reaches (itself at 0).
pub fn dijkstra(adj: &BTreeMap<usize, Vec<(usize, f64)>>, source: usize) -> BTreeMap<usize, f64> {
    let mut dist = BTreeMap::from([(source, 0.0)]);
    let mut heap = BinaryHeap::from([Reverse((Dist(0.0), source))]);
    while let Some(Reverse((Dist(d), u))) = heap.pop() {
        if d > dist[&u] {
            continue;
        }
        for &(v, w) in adj.get(&u).map(Vec::as_slice).unwrap_or(&[]) {
            let cand = d + w;
            if dist.get(&v).is_none_or(|&cur| cand < cur) {
                dist.insert(v, cand);
                heap.push(Reverse((Dist(cand), v)));
            }
        }
    }
    dist
}

/// Directed adjacency from consecutive labels, skipping self-transitions.
pub fn adjacency(p: &StepPath) -> Adjacency {
    let mut adj: Adjacency = BTreeMap::new();
    for (w, &d) in p.path.windows(2).zip(&p.edge_dists) {
        if w[0] != w[1] {
            adj.entry(w[0]).or_default().push((w[1], d));
        }
    }
    adj
}

pub fn analyze_graph(p: &StepPath) -> GraphFeatureVector {
    let adj = adjacency(p);

    let mut seen = HashSet::new();
    let mut has_loop = false;
    let mut loop_count = 0;
    for &node in &p.path {
        if !seen.insert(node) {
            has_loop = true;
            loop_count = p.path.iter().filter(|&&x| x == node).count() - 1;
            break;
        }
    }

    let maps: Vec<BTreeMap<usize, f64>> = adj.keys().map(|&s| dijkstra(&adj, s)).collect();
    let diameter = maps
        .iter()
        .flat_map(|m| m.values().copied())
        .fold(0.0, f64::max);
    let total: f64 = maps.iter().map(|m| m.values().sum::<f64>()).sum();
    let pairs: usize = maps.iter().map(|m| m.len() - 1).sum();
    let avg_path_length = if pairs > 0 { total / pairs as f64 } else { 0.0 };

    let mut undirected: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for (&u, outs) in &adj {
        for &(v, _) in outs {
            undirected.entry(u).or_default().insert(v);
            undirected.entry(v).or_default().insert(u);
        }
    }
    let mut sum_c = 0.0;
    let mut counted = 0usize;
    for nbrs in undirected.values() {
        let deg = nbrs.len();
        if deg < 2 {
            continue;
        }
        let list: Vec<usize> = nbrs.iter().copied().collect();
        let mut links = 0usize;
        for (i, &v) in list.iter().enumerate() {
            for &w in &list[i + 1..] {
                if undirected[&v].contains(&w) {
                    links += 1;
                }
            }
        }
        sum_c += links as f64 / (deg * (deg - 1) / 2) as f64;
        counted += 1;
    }
    let avg_clustering = if counted > 0 {
        sum_c / counted as f64
    } else {
        0.0
    };

    let nodes = undirected.len() as f64;
    let mean_degree = if nodes > 0.0 {
        undirected.values().map(|s| s.len()).sum::<usize>() as f64 / nodes
    } else {
        0.0
    };
    let c_rand = if nodes > 1.0 {
        mean_degree / (nodes - 1.0)
    } else {
        0.0
    };
    let l_rand = if nodes > 1.0 && mean_degree > 1.0 {
        nodes.ln() / mean_degree.ln()
    } else {
        f64::INFINITY
    };
    let c_norm = if c_rand > 0.0 {
        avg_clustering / c_rand
    } else {
        0.0
    };
    let l_norm = if l_rand.is_finite() {
        avg_path_length / l_rand
    } else {
        0.0
    };
    let small_world_index = if l_norm > 0.0 { c_norm / l_norm } else { 0.0 };

    GraphFeatureVector {
        has_loop,
        loop_count,
        diameter,
        avg_path_length,
        avg_clustering,
        small_world_index,
    }
}
