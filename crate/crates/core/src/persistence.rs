//! Vietoris-Rips persistent homology in dimensions 0 and 1.
//!
//! The filtration runs up to the largest pairwise distance, so the final
//! complex is the full 2-skeleton: H0 keeps one essential class and every H1
//! class dies.
//!
//! Simplices are totally ordered by (filtration value, dimension, sorted
//! vertex tuple). An edge's value is its length; a triangle's value is its
//! longest edge.
//!
//! * H0 is computed with union-find over edges in that order. Each merging
//!   edge of length `w` closes an interval `(0, w)`.
//! * H1 is computed by reducing the coboundary matrix of the edges (the
//!   anti-transpose of the edge/triangle boundary matrix). Its persistence
//!   pairs coincide with those of the ordinary column reduction of the
//!   boundary matrix. Edges that merged components in H0 are cleared, since
//!   their columns are known to reduce to zero.
//!
//! Zero-length intervals are dropped from both diagrams.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::DistanceMatrix;

/// Point clouds above this size are refused (triangle count grows as n^3).
pub const MAX_POINTS: usize = 2048;

#[derive(Debug, Error, PartialEq)]
pub enum PhError {
    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("{n} points exceeds the supported maximum of {max}")]
    TooManyPoints { n: usize, max: usize },
    #[error("maxdim must be 0 or 1, got {0}")]
    MaxDim(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub birth: f64,
    /// `f64::INFINITY` for essential classes.
    pub death: f64,
}

impl Interval {
    pub fn new(birth: f64, death: f64) -> Self {
        Self { birth, death }
    }

    pub fn is_finite(&self) -> bool {
        self.death.is_finite()
    }

    pub fn lifetime(&self) -> f64 {
        self.death - self.birth
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistenceDiagram {
    pub dim: usize,
    pub intervals: Vec<Interval>,
}

impl PersistenceDiagram {
    pub fn new(dim: usize, mut intervals: Vec<Interval>) -> Self {
        intervals.sort_by(|a, b| {
            a.birth
                .total_cmp(&b.birth)
                .then(a.death.total_cmp(&b.death))
        });
        Self { dim, intervals }
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            intervals: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Multiplies every birth and death by `c` (infinite deaths stay infinite).
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            dim: self.dim,
            intervals: self
                .intervals
                .iter()
                .map(|iv| Interval::new(iv.birth * c, iv.death * c))
                .collect(),
        }
    }
}

/// Diagrams of one point cloud together with the filtration threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Persistence {
    pub h0: PersistenceDiagram,
    /// Empty when computed with `maxdim = 0`.
    pub h1: PersistenceDiagram,
    /// Largest pairwise distance; the filtration is complete at this scale.
    pub threshold: f64,
}

pub fn vr_persistence(d: &DistanceMatrix, maxdim: usize) -> Result<Persistence, PhError> {
    let n = d.len();
    if maxdim > 1 {
        return Err(PhError::MaxDim(maxdim));
    }
    if n < 2 {
        return Err(PhError::TooFewPoints(n));
    }
    if n > MAX_POINTS {
        return Err(PhError::TooManyPoints { n, max: MAX_POINTS });
    }

    let edges = sorted_edges(d);
    let (h0, cleared) = zero_dim(n, &edges);
    let h1 = if maxdim >= 1 {
        one_dim(d, &edges, &cleared)
    } else {
        PersistenceDiagram::empty(1)
    };
    Ok(Persistence {
        h0,
        h1,
        threshold: d.max_value(),
    })
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Edge {
    pub value: f64,
    pub a: u32,
    pub b: u32,
}

/// All `a < b` pairs, in filtration order.
pub(crate) fn sorted_edges(d: &DistanceMatrix) -> Vec<Edge> {
    let n = d.len();
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for a in 0..n {
        for b in a + 1..n {
            edges.push(Edge {
                value: d.get(a, b),
                a: a as u32,
                b: b as u32,
            });
        }
    }
    edges.sort_by(|x, y| {
        x.value
            .total_cmp(&y.value)
            .then((x.a, x.b).cmp(&(y.a, y.b)))
    });
    edges
}

struct UnionFind {
    parent: Vec<u32>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = p;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra as usize].cmp(&self.rank[rb as usize]) {
            Ordering::Less => self.parent[ra as usize] = rb,
            Ordering::Greater => self.parent[rb as usize] = ra,
            Ordering::Equal => {
                self.parent[rb as usize] = ra;
                self.rank[ra as usize] += 1;
            }
        }
        true
    }
}

/// H0 diagram plus a flag per sorted edge marking the merging edges.
fn zero_dim(n: usize, edges: &[Edge]) -> (PersistenceDiagram, Vec<bool>) {
    let mut uf = UnionFind::new(n);
    let mut cleared = vec![false; edges.len()];
    let mut intervals = Vec::with_capacity(n);
    let mut merges = 0;
    for (idx, e) in edges.iter().enumerate() {
        if uf.union(e.a, e.b) {
            cleared[idx] = true;
            if e.value > 0.0 {
                intervals.push(Interval::new(0.0, e.value));
            }
            merges += 1;
            if merges == n - 1 {
                break;
            }
        }
    }
    intervals.push(Interval::new(0.0, f64::INFINITY));
    (PersistenceDiagram::new(0, intervals), cleared)
}

/// Triangle with sorted vertices `a < b < c` and its filtration value.
#[derive(Debug, Clone, Copy)]
struct Triangle {
    value: f64,
    a: u32,
    b: u32,
    c: u32,
}

impl Triangle {
    fn new(d: &DistanceMatrix, x: u32, y: u32, z: u32) -> Self {
        let mut v = [x, y, z];
        v.sort_unstable();
        let [a, b, c] = v;
        let value = d
            .get(a as usize, b as usize)
            .max(d.get(a as usize, c as usize))
            .max(d.get(b as usize, c as usize));
        Self { value, a, b, c }
    }

    fn key(&self) -> (u32, u32, u32) {
        (self.a, self.b, self.c)
    }
}

impl PartialEq for Triangle {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Triangle {}

impl PartialOrd for Triangle {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Triangle {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value
            .total_cmp(&other.value)
            .then(self.key().cmp(&other.key()))
    }
}

/// Working column: a lazy mod-2 sum of triangles, smallest on top.
struct Column(BinaryHeap<Reverse<Triangle>>);

impl Column {
    fn push_coboundary(&mut self, d: &DistanceMatrix, e: &Edge) {
        let n = d.len() as u32;
        for k in (0..n).filter(|&k| k != e.a && k != e.b) {
            self.0.push(Reverse(Triangle::new(d, e.a, e.b, k)));
        }
    }

    /// Earliest triangle with odd multiplicity, left in the column.
    fn pivot(&mut self) -> Option<Triangle> {
        while let Some(Reverse(top)) = self.0.pop() {
            let mut odd = true;
            while matches!(self.0.peek(), Some(Reverse(t)) if *t == top) {
                self.0.pop();
                odd = !odd;
            }
            if odd {
                self.0.push(Reverse(top));
                return Some(top);
            }
        }
        None
    }
}

fn one_dim(d: &DistanceMatrix, edges: &[Edge], cleared: &[bool]) -> PersistenceDiagram {
    let mut pivot_owner: HashMap<(u32, u32, u32), usize> = HashMap::new();
    // Reduction combinations (edge indices) of already-paired columns.
    let mut combos: Vec<Vec<usize>> = Vec::new();
    let mut intervals = Vec::new();

    for idx in (0..edges.len()).rev() {
        if cleared[idx] {
            continue;
        }
        let edge = &edges[idx];
        let mut column = Column(BinaryHeap::new());
        column.push_coboundary(d, edge);
        let mut combo = vec![idx];
        loop {
            match column.pivot() {
                None => {
                    // Unreachable on a full 2-skeleton; kept for completeness.
                    intervals.push(Interval::new(edge.value, f64::INFINITY));
                    break;
                }
                Some(pivot) => match pivot_owner.get(&pivot.key()) {
                    Some(&owner) => {
                        for &e in &combos[owner] {
                            column.push_coboundary(d, &edges[e]);
                        }
                        combo.extend_from_slice(&combos[owner]);
                    }
                    None => {
                        if pivot.value > edge.value {
                            intervals.push(Interval::new(edge.value, pivot.value));
                        }
                        pivot_owner.insert(pivot.key(), combos.len());
                        combos.push(cancel_pairs(combo));
                        break;
                    }
                },
            }
        }
    }
    PersistenceDiagram::new(1, intervals)
}

/// Reduces a multiset of indices mod 2.
fn cancel_pairs(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    let mut out = Vec::with_capacity(v.len());
    for x in v {
        if out.last() == Some(&x) {
            out.pop();
        } else {
            out.push(x);
        }
    }
    out
}
