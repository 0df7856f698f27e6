//! Fixed-length topological feature vectors built from H0/H1 diagrams:
//! diagram statistics, Betti-curve shape summaries and level-0 persistence
//! landscape summaries.
//!
//! Betti curves and landscapes share one grid of `T` evenly spaced samples
//! over `[0, threshold]`. Four H0 entries are omitted because they are
//! constant or duplicate others on Vietoris-Rips input: betti peak (equals
//! the count), betti location and max birth (always 0), and max death
//! (equals max life).

use serde::ser::{Serialize, SerializeMap, Serializer};

use crate::persistence::{Persistence, PersistenceDiagram};

pub const DEFAULT_GRID: usize = 200;

pub const FEATURE_NAMES: [&str; 28] = [
    "H0_count",
    "H0_total_life",
    "H0_max_life",
    "H0_mean_life",
    "H0_entropy",
    "H0_skewness",
    "H0_betti_centroid",
    "H0_betti_spread",
    "H0_betti_width",
    "H0_landscape_mean",
    "H0_landscape_max",
    "H0_landscape_area",
    "H1_count",
    "H1_total_life",
    "H1_max_life",
    "H1_mean_life",
    "H1_entropy",
    "H1_skewness",
    "H1_max_birth",
    "H1_max_death",
    "H1_betti_peak",
    "H1_betti_location",
    "H1_betti_centroid",
    "H1_betti_spread",
    "H1_betti_width",
    "H1_landscape_mean",
    "H1_landscape_max",
    "H1_landscape_area",
];

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DiagramStats {
    pub count: f64,
    pub total_life: f64,
    pub max_life: f64,
    pub mean_life: f64,
    pub entropy: f64,
    pub skewness: f64,
    pub max_birth: f64,
    pub max_death: f64,
}

pub fn diagram_stats(diag: &PersistenceDiagram) -> DiagramStats {
    let count = diag.intervals.len();
    let lifetimes: Vec<f64> = diag
        .intervals
        .iter()
        .filter(|iv| iv.is_finite())
        .map(|iv| iv.lifetime())
        .collect();
    let total_life: f64 = lifetimes.iter().sum();
    let max_life = lifetimes.iter().copied().fold(0.0, f64::max);
    let mean_life = if count == 0 {
        0.0
    } else {
        total_life / count as f64
    };

    let positive: Vec<f64> = lifetimes.iter().copied().filter(|&l| l > 0.0).collect();
    let pos_total: f64 = positive.iter().sum();
    let entropy = if pos_total > 0.0 {
        -positive
            .iter()
            .map(|&l| {
                let p = l / pos_total;
                p * p.ln()
            })
            .sum::<f64>()
    } else {
        0.0
    };

    let max_birth = diag.intervals.iter().map(|iv| iv.birth).fold(0.0, f64::max);
    let max_death = diag
        .intervals
        .iter()
        .filter(|iv| iv.is_finite())
        .map(|iv| iv.death)
        .fold(0.0, f64::max);

    DiagramStats {
        count: count as f64,
        total_life,
        max_life,
        mean_life,
        entropy,
        skewness: skewness(&lifetimes),
        max_birth,
        max_death,
    }
}

/// Population Fisher-Pearson skewness `m3 / m2^1.5`; 0 for fewer than three
/// values or zero variance.
pub fn skewness(xs: &[f64]) -> f64 {
    if xs.len() < 3 {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m3 = xs.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
    if m2 <= 0.0 {
        return 0.0;
    }
    m3 / m2.powf(1.5)
}

/// `t` evenly spaced samples over `[0, end]`. A non-positive `end` (all
/// points coincide) falls back to the unit interval so the grid stays
/// strictly increasing.
pub fn grid(t: usize, end: f64) -> Vec<f64> {
    assert!(t >= 2, "grid needs at least two samples");
    let end = if end > 0.0 { end } else { 1.0 };
    (0..t).map(|i| end * i as f64 / (t - 1) as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BettiCurve {
    pub dim: usize,
    pub grid: Vec<f64>,
    pub counts: Vec<u32>,
}

/// Number of intervals alive (`birth <= x < death`) at each grid sample.
/// Infinite deaths count as alive one grid step past the end.
pub fn betti_curve(diag: &PersistenceDiagram, t: usize, threshold: f64) -> BettiCurve {
    let grid = grid(t, threshold);
    let end = grid[t - 1];
    let step = grid[1] - grid[0];
    let counts = grid
        .iter()
        .map(|&x| {
            diag.intervals
                .iter()
                .filter(|iv| {
                    let death = if iv.is_finite() { iv.death } else { end + step };
                    iv.birth <= x && x < death
                })
                .count() as u32
        })
        .collect();
    BettiCurve {
        dim: diag.dim,
        grid,
        counts,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BettiSummary {
    pub peak: f64,
    pub location: f64,
    pub width: f64,
    pub centroid: f64,
    pub spread: f64,
}

pub fn betti_features(curve: &BettiCurve) -> BettiSummary {
    let t = curve.counts.len();
    let peak = curve.counts.iter().copied().max().unwrap_or(0);
    if peak == 0 || t < 2 {
        return BettiSummary::default();
    }
    let last = (t - 1) as f64;
    let location = curve.counts.iter().position(|&c| c == peak).unwrap_or(0) as f64 / last;
    let half = f64::from(peak) / 2.0;
    let above: Vec<usize> = (0..t)
        .filter(|&i| f64::from(curve.counts[i]) >= half)
        .collect();
    let width = (above[above.len() - 1] - above[0]) as f64 / last;

    let (g0, g1) = (curve.grid[0], curve.grid[t - 1]);
    let span = g1 - g0;
    let mass: f64 = curve.counts.iter().map(|&c| f64::from(c)).sum();
    let center = curve
        .grid
        .iter()
        .zip(&curve.counts)
        .map(|(g, &c)| g * f64::from(c))
        .sum::<f64>()
        / mass;
    let var = curve
        .grid
        .iter()
        .zip(&curve.counts)
        .map(|(g, &c)| f64::from(c) * (g - center).powi(2))
        .sum::<f64>()
        / mass;
    BettiSummary {
        peak: f64::from(peak),
        location,
        width,
        centroid: ((center - g0) / span).clamp(0.0, 1.0),
        spread: (var.sqrt() / span).clamp(0.0, 1.0),
    }
}

/// Level-0 persistence landscape sampled on `grid`. Deaths are clipped to
/// the grid end.
pub fn landscape0(diag: &PersistenceDiagram, grid: &[f64]) -> Vec<f64> {
    let end = grid.last().copied().unwrap_or(0.0);
    grid.iter()
        .map(|&x| {
            diag.intervals
                .iter()
                .map(|iv| (x - iv.birth).min(iv.death.min(end) - x).max(0.0))
                .fold(0.0, f64::max)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LandscapeSummary {
    pub mean: f64,
    pub max: f64,
    pub area: f64,
}

pub fn landscape_features(grid: &[f64], values: &[f64]) -> LandscapeSummary {
    if values.is_empty() {
        return LandscapeSummary::default();
    }
    let area = grid
        .windows(2)
        .zip(values.windows(2))
        .map(|(g, v)| 0.5 * (g[1] - g[0]) * (v[0] + v[1]))
        .sum();
    LandscapeSummary {
        mean: values.iter().sum::<f64>() / values.len() as f64,
        max: values.iter().copied().fold(0.0, f64::max),
        area,
    }
}

/// The 28 named topological features, in [`FEATURE_NAMES`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct TdaFeatureVector {
    values: [f64; 28],
}

impl TdaFeatureVector {
    pub fn values(&self) -> &[f64; 28] {
        &self.values
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        FEATURE_NAMES
            .iter()
            .position(|&n| n == name)
            .map(|i| self.values[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, f64)> + '_ {
        FEATURE_NAMES
            .iter()
            .copied()
            .zip(self.values.iter().copied())
    }

    pub fn from_values(values: [f64; 28]) -> Self {
        Self { values }
    }
}

impl Serialize for TdaFeatureVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(28))?;
        for (name, value) in self.iter() {
            map.serialize_entry(name, &value)?;
        }
        map.end()
    }
}

pub fn assemble_features(
    h0: &PersistenceDiagram,
    h1: &PersistenceDiagram,
    threshold: f64,
    t: usize,
) -> TdaFeatureVector {
    let s0 = diagram_stats(h0);
    let c0 = betti_curve(h0, t, threshold);
    let b0 = betti_features(&c0);
    let l0 = landscape_features(&c0.grid, &landscape0(h0, &c0.grid));

    let s1 = diagram_stats(h1);
    let c1 = betti_curve(h1, t, threshold);
    let b1 = betti_features(&c1);
    let l1 = landscape_features(&c1.grid, &landscape0(h1, &c1.grid));

    TdaFeatureVector {
        values: [
            s0.count,
            s0.total_life,
            s0.max_life,
            s0.mean_life,
            s0.entropy,
            s0.skewness,
            b0.centroid,
            b0.spread,
            b0.width,
            l0.mean,
            l0.max,
            l0.area,
            s1.count,
            s1.total_life,
            s1.max_life,
            s1.mean_life,
            s1.entropy,
            s1.skewness,
            s1.max_birth,
            s1.max_death,
            b1.peak,
            b1.location,
            b1.centroid,
            b1.spread,
            b1.width,
            l1.mean,
            l1.max,
            l1.area,
        ],
    }
}

pub fn features_from_persistence(p: &Persistence, t: usize) -> TdaFeatureVector {
    assemble_features(&p.h0, &p.h1, p.threshold, t)
}
