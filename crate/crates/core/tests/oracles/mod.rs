//! Slow, direct reference implementations used by the integration and
//! acceptance tests. Nothing here calls the library's algorithms.

#![allow(dead_code)]

pub mod criteria;

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use trace_topology::DistanceMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- geometry

pub fn random_cloud(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect()
}

pub fn euclidean(points: &[Vec<f64>]) -> DistanceMatrix {
    DistanceMatrix::from_fn(points.len(), |a, b| {
        points[a]
            .iter()
            .zip(&points[b])
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    })
    .unwrap()
}

/// Symmetric random matrix; with `ties` the entries come from a coarse set.
pub fn random_distances(rng: &mut ChaCha8Rng, n: usize, ties: bool) -> DistanceMatrix {
    let mut vals = vec![0.0; n * n];
    for a in 0..n {
        for b in a + 1..n {
            let v = if ties {
                f64::from(rng.gen_range(1..6u8)) / 5.0
            } else {
                rng.gen_range(0.01..1.0)
            };
            vals[a * n + b] = v;
            vals[b * n + a] = v;
        }
    }
    DistanceMatrix::new(n, vals).unwrap()
}

// ------------------------------------------------------------- persistence

/// `(birth, death)` pairs with positive length, sorted; death may be infinite.
pub type Bars = Vec<(f64, f64)>;

fn sorted_bars(mut bars: Bars) -> Bars {
    bars.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    bars
}

/// H0 and H1 of the Vietoris-Rips filtration by textbook column reduction of
/// the full boundary matrix of the 2-skeleton.
pub fn naive_persistence(d: &DistanceMatrix) -> (Bars, Bars) {
    let n = d.len();
    let mut simplices: Vec<(f64, Vec<usize>)> = Vec::new();
    for a in 0..n {
        simplices.push((0.0, vec![a]));
    }
    for a in 0..n {
        for b in a + 1..n {
            simplices.push((d.get(a, b), vec![a, b]));
        }
    }
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                let v = d.get(a, b).max(d.get(a, c)).max(d.get(b, c));
                simplices.push((v, vec![a, b, c]));
            }
        }
    }
    // Filtration order: value, then dimension (faces first), then vertices.
    simplices.sort_by(|x, y| {
        x.0.total_cmp(&y.0)
            .then(x.1.len().cmp(&y.1.len()))
            .then(x.1.cmp(&y.1))
    });
    let index: BTreeMap<Vec<usize>, usize> = simplices
        .iter()
        .enumerate()
        .map(|(i, (_, s))| (s.clone(), i))
        .collect();

    let mut columns: Vec<BTreeSet<usize>> = simplices
        .iter()
        .map(|(_, s)| {
            if s.len() == 1 {
                return BTreeSet::new();
            }
            (0..s.len())
                .map(|skip| {
                    let face: Vec<usize> = s
                        .iter()
                        .enumerate()
                        .filter(|&(i, _)| i != skip)
                        .map(|(_, &v)| v)
                        .collect();
                    index[&face]
                })
                .collect()
        })
        .collect();

    let mut low_owner: BTreeMap<usize, usize> = BTreeMap::new();
    for j in 0..columns.len() {
        while let Some(&low) = columns[j].iter().next_back() {
            match low_owner.get(&low) {
                Some(&k) => {
                    let other = columns[k].clone();
                    let col = &mut columns[j];
                    for r in other {
                        if !col.remove(&r) {
                            col.insert(r);
                        }
                    }
                }
                None => {
                    low_owner.insert(low, j);
                    break;
                }
            }
        }
    }

    let mut h0 = Vec::new();
    let mut h1 = Vec::new();
    let mut paired = BTreeSet::new();
    for (&birth_idx, &death_idx) in &low_owner {
        paired.insert(birth_idx);
        paired.insert(death_idx);
        let (b, d) = (simplices[birth_idx].0, simplices[death_idx].0);
        if d > b {
            match simplices[birth_idx].1.len() {
                1 => h0.push((b, d)),
                2 => h1.push((b, d)),
                _ => unreachable!(),
            }
        }
    }
    for (i, (v, s)) in simplices.iter().enumerate() {
        if paired.contains(&i) {
            continue;
        }
        match s.len() {
            1 => h0.push((*v, f64::INFINITY)),
            2 => h1.push((*v, f64::INFINITY)),
            _ => {}
        }
    }
    (sorted_bars(h0), sorted_bars(h1))
}

/// Edge weights of a minimum spanning tree (Kruskal, plain vector scan).
pub fn kruskal_weights(d: &DistanceMatrix) -> Vec<f64> {
    let n = d.len();
    let mut edges: Vec<(f64, usize, usize)> = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            edges.push((d.get(a, b), a, b));
        }
    }
    edges.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut comp: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    for (w, a, b) in edges {
        let (ca, cb) = (comp[a], comp[b]);
        if ca != cb {
            for c in comp.iter_mut() {
                if *c == cb {
                    *c = ca;
                }
            }
            out.push(w);
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

// --------------------------------------------------------------- alignment

/// Best total over every monotone path from `(0,0)` to `(n,m)` using match
/// (+sim), trace-gap and gold-gap (-gap) moves.
pub fn exhaustive_global(sim: &[Vec<f64>], gap: f64) -> f64 {
    fn walk(sim: &[Vec<f64>], gap: f64, i: usize, j: usize, acc: f64, best: &mut f64) {
        let (n, m) = (sim.len(), sim.first().map_or(0, Vec::len));
        if i == n && j == m {
            *best = best.max(acc);
            return;
        }
        if i < n && j < m {
            walk(sim, gap, i + 1, j + 1, acc + sim[i][j], best);
        }
        if i < n {
            walk(sim, gap, i + 1, j, acc - gap, best);
        }
        if j < m {
            walk(sim, gap, i, j + 1, acc - gap, best);
        }
    }
    let mut best = f64::NEG_INFINITY;
    walk(sim, gap, 0, 0, 0.0, &mut best);
    best
}

/// Best total over every monotone path starting and ending anywhere (the
/// empty path scores 0).
pub fn exhaustive_local(sim: &[Vec<f64>], gap: f64) -> f64 {
    fn walk(sim: &[Vec<f64>], gap: f64, i: usize, j: usize, acc: f64, best: &mut f64) {
        *best = best.max(acc);
        let (n, m) = (sim.len(), sim[0].len());
        if i < n && j < m {
            walk(sim, gap, i + 1, j + 1, acc + sim[i][j], best);
        }
        if i < n {
            walk(sim, gap, i + 1, j, acc - gap, best);
        }
        if j < m {
            walk(sim, gap, i, j + 1, acc - gap, best);
        }
    }
    let mut best = 0.0;
    for i in 0..sim.len() {
        for j in 0..sim[0].len() {
            walk(sim, gap, i, j, 0.0, &mut best);
        }
    }
    best
}

// ------------------------------------------------------------------- graph

/// `(diameter, avg_path_length)` from all-pairs Floyd-Warshall, averaging over
/// sources that have an outgoing edge and counting each source's zero distance.
pub fn floyd_path_stats(path: &[usize], dists: &[f64]) -> (f64, f64) {
    let nodes: Vec<usize> = path
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let pos = |x: usize| nodes.iter().position(|&v| v == x).unwrap();
    let k = nodes.len();
    let mut w = vec![vec![f64::INFINITY; k]; k];
    for (i, row) in w.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    let mut has_out = vec![false; k];
    for (t, &dd) in dists.iter().enumerate() {
        let (u, v) = (path[t], path[t + 1]);
        if u == v {
            continue;
        }
        let (a, b) = (pos(u), pos(v));
        has_out[a] = true;
        w[a][b] = w[a][b].min(dd);
    }
    for via in 0..k {
        for a in 0..k {
            for b in 0..k {
                let cand = w[a][via] + w[via][b];
                if cand < w[a][b] {
                    w[a][b] = cand;
                }
            }
        }
    }
    let mut diameter = 0.0f64;
    let mut total = 0.0;
    let mut count = 0usize;
    for a in (0..k).filter(|&a| has_out[a]) {
        let reach: Vec<f64> = w[a].iter().copied().filter(|x| x.is_finite()).collect();
        for &x in &reach {
            diameter = diameter.max(x);
            total += x;
        }
        count += reach.len() - 1;
    }
    (diameter, if count > 0 { total / count as f64 } else { 0.0 })
}

/// Occurrences beyond the first of the first label seen twice.
pub fn count_loops(path: &[usize]) -> (bool, usize) {
    for i in 0..path.len() {
        if path[..i].contains(&path[i]) {
            return (true, path.iter().filter(|&&x| x == path[i]).count() - 1);
        }
    }
    (false, 0)
}

// ------------------------------------------------------------- statistics

pub fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

/// Exact solve of `A x = b` by Gauss-Jordan elimination.
fn solve_exact(mut a: Vec<Vec<BigRational>>, mut b: Vec<BigRational>) -> Vec<BigRational> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).find(|&r| !a[r][c].is_zero()).expect("nonsingular");
        a.swap(c, p);
        b.swap(c, p);
        let pivot = a[c][c].clone();
        for t in c..n {
            a[c][t] = &a[c][t] / &pivot;
        }
        b[c] = &b[c] / &pivot;
        for r in 0..n {
            if r == c || a[r][c].is_zero() {
                continue;
            }
            let f = a[r][c].clone();
            for t in c..n {
                let sub = &f * &a[c][t];
                a[r][t] = &a[r][t] - sub;
            }
            let sub = &f * &b[c];
            b[r] = &b[r] - sub;
        }
    }
    b
}

pub struct ExactOls {
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub r_squared: f64,
}

/// Normal-equations OLS with intercept in exact rational arithmetic.
pub fn exact_ols(columns: &[Vec<f64>], y: &[f64]) -> ExactOls {
    let n = y.len();
    let mut x: Vec<Vec<BigRational>> = vec![vec![BigRational::one(); n]];
    x.extend(
        columns
            .iter()
            .map(|c| c.iter().map(|&v| rational(v)).collect()),
    );
    let yr: Vec<BigRational> = y.iter().map(|&v| rational(v)).collect();
    let q = x.len();
    let dot = |a: &[BigRational], b: &[BigRational]| {
        a.iter()
            .zip(b)
            .fold(BigRational::zero(), |s, (u, v)| s + u * v)
    };
    let gram: Vec<Vec<BigRational>> = (0..q)
        .map(|i| (0..q).map(|j| dot(&x[i], &x[j])).collect())
        .collect();
    let xty: Vec<BigRational> = (0..q).map(|i| dot(&x[i], &yr)).collect();
    let beta = solve_exact(gram.clone(), xty);

    let mut rss = BigRational::zero();
    for i in 0..n {
        let fit = (0..q).fold(BigRational::zero(), |s, j| s + &beta[j] * &x[j][i]);
        let r = &yr[i] - fit;
        rss += &r * &r;
    }
    let ybar = yr.iter().fold(BigRational::zero(), |s, v| s + v)
        / BigRational::from_integer(BigInt::from(n));
    let tss = yr.iter().fold(BigRational::zero(), |s, v| {
        let c = v - &ybar;
        s + &c * &c
    });
    let df = BigRational::from_integer(BigInt::from(n - q));
    let sigma2 = &rss / df;
    let std_errors = (0..q)
        .map(|j| {
            let mut e = vec![BigRational::zero(); q];
            e[j] = BigRational::one();
            let inv_col = solve_exact(gram.clone(), e);
            (&sigma2 * &inv_col[j]).abs().to_f64().unwrap().sqrt()
        })
        .collect();
    ExactOls {
        coefficients: beta.iter().map(|b| b.to_f64().unwrap()).collect(),
        std_errors,
        r_squared: (BigRational::one() - rss / tss).to_f64().unwrap(),
    }
}

/// Greedy average linkage recomputing every inter-cluster mean from scratch.
pub fn greedy_linkage(d: &DistanceMatrix, k: usize) -> Vec<usize> {
    let p = d.len();
    let mut clusters: Vec<Vec<usize>> = (0..p).map(|j| vec![j]).collect();
    while clusters.len() > k {
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let mut s = 0.0;
                for &i in &clusters[a] {
                    for &j in &clusters[b] {
                        s += d.get(i, j);
                    }
                }
                let delta = s / (clusters[a].len() * clusters[b].len()) as f64;
                if best.is_none_or(|(v, _, _)| delta < v) {
                    best = Some((delta, a, b));
                }
            }
        }
        let (_, a, b) = best.unwrap();
        let moved = clusters.remove(b);
        clusters[a].extend(moved);
        clusters.sort_by_key(|c| *c.iter().min().unwrap());
    }
    let mut out = vec![0; p];
    for (id, c) in clusters.iter().enumerate() {
        for &j in c {
            out[j] = id;
        }
    }
    out
}

/// Feature-level silhouettes straight from the definition.
pub fn brute_silhouette(d: &DistanceMatrix, assignment: &[usize]) -> (Vec<f64>, f64) {
    let p = assignment.len();
    let k = assignment.iter().max().map_or(0, |m| m + 1);
    let s: Vec<f64> = (0..p)
        .map(|j| {
            let own: Vec<usize> = (0..p).filter(|&i| assignment[i] == assignment[j]).collect();
            let a = if own.len() == 1 {
                0.0
            } else {
                own.iter()
                    .filter(|&&i| i != j)
                    .map(|&i| d.get(j, i))
                    .sum::<f64>()
                    / (own.len() - 1) as f64
            };
            let mut b = f64::INFINITY;
            for c in (0..k).filter(|&c| c != assignment[j]) {
                let other: Vec<usize> = (0..p).filter(|&i| assignment[i] == c).collect();
                let mean = other.iter().map(|&i| d.get(j, i)).sum::<f64>() / other.len() as f64;
                b = b.min(mean);
            }
            let m = a.max(b);
            if m == 0.0 {
                0.0
            } else {
                (b - a) / m
            }
        })
        .collect();
    let overall = s.iter().sum::<f64>() / p as f64;
    (s, overall)
}
