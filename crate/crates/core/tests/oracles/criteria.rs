//! Randomised checks shared by the integration tests and the acceptance
//! report. Each returns a short summary on success and the first mismatch
//! on failure.

use rand::Rng;
use trace_topology::align::{global_from_similarity, local_from_similarity, SimilarityMatrix};
use trace_topology::features::{features_from_persistence, FEATURE_NAMES};
use trace_topology::graph::{analyze_graph, StepPath};
use trace_topology::stats::{
    average_linkage, ols_fit, silhouette, silhouette_sweep, vif, DesignMatrix,
};
use trace_topology::{vr_persistence, DistanceMatrix};

use super::*;

pub type Outcome = Result<String, String>;

fn bars(diag: &trace_topology::PersistenceDiagram) -> Bars {
    diag.intervals
        .iter()
        .map(|iv| (iv.birth, iv.death))
        .collect()
}

pub fn h0_matches_mst(trials: usize, seed: u64) -> Outcome {
    let mut r = rng(seed);
    for t in 0..trials {
        let n = r.gen_range(2..=64);
        let d = euclidean(&random_cloud(&mut r, n, 8));
        let ph = vr_persistence(&d, 0).map_err(|e| e.to_string())?;
        let mut deaths: Vec<f64> = ph
            .h0
            .intervals
            .iter()
            .filter(|iv| iv.is_finite())
            .map(|iv| iv.death)
            .collect();
        deaths.sort_by(f64::total_cmp);
        let mst: Vec<f64> = kruskal_weights(&d)
            .into_iter()
            .filter(|&w| w > 0.0)
            .collect();
        if deaths != mst {
            return Err(format!(
                "trial {t} (n={n}): H0 deaths {deaths:?} vs MST {mst:?}"
            ));
        }
        let essential = ph.h0.intervals.iter().filter(|iv| !iv.is_finite()).count();
        if essential != 1 {
            return Err(format!("trial {t}: {essential} infinite H0 bars"));
        }
    }
    Ok(format!("{trials} clouds"))
}

pub fn persistence_matches_naive(trials: usize, seed: u64) -> Outcome {
    let mut r = rng(seed);
    for t in 0..trials {
        let n = r.gen_range(2..=12);
        let d = random_distances(&mut r, n, t % 2 == 1);
        let ph = vr_persistence(&d, 1).map_err(|e| e.to_string())?;
        let (h0, h1) = naive_persistence(&d);
        if bars(&ph.h0) != h0 || bars(&ph.h1) != h1 {
            return Err(format!(
                "trial {t} (n={n}): got H0 {:?} H1 {:?}, expected H0 {h0:?} H1 {h1:?}",
                bars(&ph.h0),
                bars(&ph.h1)
            ));
        }
    }
    Ok(format!("{trials} matrices"))
}

pub fn circle_has_one_dominant_loop() -> Outcome {
    let pts: Vec<Vec<f64>> = (0..24)
        .map(|i| {
            let a = std::f64::consts::TAU * i as f64 / 24.0;
            vec![a.cos(), a.sin()]
        })
        .collect();
    let ph = vr_persistence(&euclidean(&pts), 1).map_err(|e| e.to_string())?;
    let mut lives: Vec<f64> = ph.h1.intervals.iter().map(|iv| iv.lifetime()).collect();
    lives.sort_by(|a, b| b.total_cmp(a));
    match lives.as_slice() {
        [] => Err("no H1 bar".into()),
        [only] => Ok(format!("single bar, lifetime {only:.4}")),
        [first, second, ..] if *first >= 5.0 * second => {
            Ok(format!("lifetimes {first:.4} vs {second:.4}"))
        }
        [first, second, ..] => Err(format!("dominant {first} vs second {second}")),
    }
}

fn monotone(pairs: &[(usize, usize)]) -> bool {
    pairs.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1)
}

pub fn alignment_matches_enumeration(trials: usize, seed: u64) -> Outcome {
    let mut r = rng(seed);
    for t in 0..trials {
        let n = r.gen_range(1..=6);
        let m = r.gen_range(1..=6);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..m).map(|_| r.gen_range(-1.0..1.0)).collect())
            .collect();
        let gap = r.gen_range(0.01..0.6);
        let sim = SimilarityMatrix::new(n, m, rows.concat());
        let (g, gv) = global_from_similarity(&sim, gap);
        let want = exhaustive_global(&rows, gap);
        if gv != want {
            return Err(format!(
                "trial {t}: global value {gv} vs enumeration {want}"
            ));
        }
        let (l, lv) = local_from_similarity(&sim, gap);
        let want = exhaustive_local(&rows, gap);
        if lv != want {
            return Err(format!("trial {t}: local value {lv} vs enumeration {want}"));
        }
        if !monotone(&g.pairs) || !monotone(&l.pairs) {
            return Err(format!("trial {t}: non-monotone pairs"));
        }
        let path_value = g.pairs.iter().map(|&(i, j)| rows[i][j]).sum::<f64>()
            - gap * (n + m - 2 * g.pairs.len()) as f64;
        if (path_value - gv).abs() > 1e-12 {
            return Err(format!(
                "trial {t}: backtracked path scores {path_value}, DP {gv}"
            ));
        }
    }
    Ok(format!("{trials} instances"))
}

pub fn graph_matches_floyd(trials: usize, seed: u64) -> Outcome {
    let worked = analyze_graph(&StepPath::new(vec![0, 1, 0, 2], vec![1.0; 3]).unwrap());
    let expected = (true, 1, 2.0, 1.25, 0.0, 0.0);
    let got = (
        worked.has_loop,
        worked.loop_count,
        worked.diameter,
        worked.avg_path_length,
        worked.avg_clustering,
        worked.small_world_index,
    );
    if got != expected {
        return Err(format!("worked example gave {got:?}"));
    }
    let mut r = rng(seed);
    for t in 0..trials {
        let len = r.gen_range(1..=50);
        let labels = r.gen_range(1..=12);
        let path: Vec<usize> = (0..len).map(|_| r.gen_range(0..labels)).collect();
        let dists: Vec<f64> = (1..len).map(|_| r.gen_range(0.0..2.0)).collect();
        let g = analyze_graph(&StepPath::new(path.clone(), dists.clone()).unwrap());
        let (diam, apl) = floyd_path_stats(&path, &dists);
        if (g.diameter - diam).abs() > 1e-9 || (g.avg_path_length - apl).abs() > 1e-9 {
            return Err(format!(
                "trial {t}: ({}, {}) vs Floyd-Warshall ({diam}, {apl})",
                g.diameter, g.avg_path_length
            ));
        }
        if (g.has_loop, g.loop_count) != count_loops(&path) {
            return Err(format!(
                "trial {t}: loop count {} for {path:?}",
                g.loop_count
            ));
        }
    }
    Ok(format!("worked example + {trials} paths"))
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

pub fn ols_matches_exact(trials: usize, seed: u64) -> Outcome {
    let mut r = rng(seed);
    let names: Vec<String> = (1..=4).map(|j| format!("x{j}")).collect();
    for t in 0..trials {
        let cols: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..50).map(|_| r.gen_range(-3.0..3.0)).collect())
            .collect();
        let y: Vec<f64> = (0..50)
            .map(|i| 0.5 + cols[0][i] - 2.0 * cols[2][i] + r.gen_range(-1.0..1.0))
            .collect();
        let x = DesignMatrix::new(names.clone(), cols.clone()).unwrap();
        let rep = ols_fit(&x, &y).map_err(|e| e.to_string())?;
        let exact = exact_ols(&cols, &y);
        for j in 0..5 {
            if !close(rep.coefficients[j], exact.coefficients[j], 1e-8)
                || !close(rep.std_errors[j], exact.std_errors[j], 1e-8)
            {
                return Err(format!(
                    "trial {t} term {j}: ({}, {}) vs exact ({}, {})",
                    rep.coefficients[j],
                    rep.std_errors[j],
                    exact.coefficients[j],
                    exact.std_errors[j]
                ));
            }
        }
        if !close(rep.r_squared, exact.r_squared, 1e-10) {
            return Err(format!(
                "trial {t}: R² {} vs {}",
                rep.r_squared, exact.r_squared
            ));
        }
    }

    let xs = vec![0.0, 1.0, 2.0, 3.0, 4.0];
    let y: Vec<f64> = xs.iter().map(|v| 2.0 * v + 1.0).collect();
    let line = DesignMatrix::new(vec!["x".into()], vec![xs.clone()]).unwrap();
    let fit = ols_fit(&line, &y).map_err(|e| e.to_string())?;
    if !close(fit.r_squared, 1.0, 1e-12) {
        return Err(format!("exact fit R² = {}", fit.r_squared));
    }

    let c = vec![0.3, 1.2, -0.7, 2.2, 0.1, -1.4];
    let other = vec![1.0, 0.0, 2.0, -1.0, 0.5, 0.25];
    let dup = DesignMatrix::new(
        vec!["a".into(), "b".into(), "c".into()],
        vec![c.clone(), c, other],
    )
    .unwrap();
    let v = vif(&dup).map_err(|e| e.to_string())?;
    if !(v[0].is_infinite() && v[1].is_infinite()) {
        return Err(format!("duplicated column VIF {v:?}"));
    }

    let orth = DesignMatrix::new(
        vec!["a".into(), "b".into(), "c".into()],
        vec![
            vec![1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0],
            vec![1.0, 1.0, -1.0, -1.0, 1.0, 1.0, -1.0, -1.0],
            vec![1.0, 1.0, 1.0, 1.0, -1.0, -1.0, -1.0, -1.0],
        ],
    )
    .unwrap();
    let v = vif(&orth).map_err(|e| e.to_string())?;
    if v.iter().any(|x| (x - 1.0).abs() > 1e-9) {
        return Err(format!("orthogonal VIF {v:?}"));
    }
    Ok(format!(
        "{trials} fits + exact-fit, duplicate and orthogonal cases"
    ))
}

pub fn clustering_matches_brute_force(trials: usize, seed: u64) -> Outcome {
    let mut r = rng(seed);
    for t in 0..trials {
        let p = r.gen_range(2..=8);
        let d = random_distances(&mut r, p, false);
        for k in 1..=p {
            let part = average_linkage(&d, k).map_err(|e| e.to_string())?;
            let want = greedy_linkage(&d, k);
            if part.assignment != want {
                return Err(format!(
                    "trial {t} K={k}: {:?} vs oracle {want:?}",
                    part.assignment
                ));
            }
            if k < 2 {
                continue;
            }
            let s = silhouette(&d, &part).map_err(|e| e.to_string())?;
            let (per, overall) = brute_silhouette(&d, &want);
            let ok = per
                .iter()
                .zip(&s.per_feature)
                .all(|(a, b)| (a - b).abs() <= 1e-12)
                && (overall - s.overall).abs() <= 1e-12;
            if !ok {
                return Err(format!("trial {t} K={k}: silhouette {s:?} vs {per:?}"));
            }
        }
    }

    let block = DistanceMatrix::from_fn(9, |a, b| if a / 3 == b / 3 { 0.0 } else { 0.9 }).unwrap();
    let sweep =
        silhouette_sweep(&block, &(2..=8).collect::<Vec<_>>()).map_err(|e| e.to_string())?;
    let best =
        sweep.iter().copied().fold(
            (0, f64::NEG_INFINITY),
            |acc, x| if x.1 > acc.1 { x } else { acc },
        );
    if best.0 != 3 {
        return Err(format!("3-block sweep peaked at K={} ({sweep:?})", best.0));
    }
    Ok(format!(
        "{trials} matrices, all K; 3-block sweep peaks at K=3"
    ))
}

const EXPECTED_NAMES: [&str; 28] = [
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

const SCALE_LINEAR: [&str; 14] = [
    "H0_total_life",
    "H0_max_life",
    "H0_mean_life",
    "H0_landscape_mean",
    "H0_landscape_max",
    "H1_total_life",
    "H1_max_life",
    "H1_mean_life",
    "H1_max_birth",
    "H1_max_death",
    "H1_landscape_mean",
    "H1_landscape_max",
    "H0_landscape_area",
    "H1_landscape_area",
];

const SCALE_FREE: [&str; 6] = [
    "H0_count",
    "H0_entropy",
    "H0_skewness",
    "H1_count",
    "H1_entropy",
    "H1_skewness",
];

const GRID_NORMALISED: [&str; 8] = [
    "H0_betti_centroid",
    "H0_betti_spread",
    "H0_betti_width",
    "H1_betti_peak",
    "H1_betti_location",
    "H1_betti_centroid",
    "H1_betti_spread",
    "H1_betti_width",
];

pub fn feature_contract(trials: usize, seed: u64) -> Outcome {
    if FEATURE_NAMES != EXPECTED_NAMES {
        return Err(format!("feature names {FEATURE_NAMES:?}"));
    }
    for missing in [
        "H0_max_birth",
        "H0_max_death",
        "H0_betti_peak",
        "H0_betti_location",
    ] {
        if FEATURE_NAMES.contains(&missing) {
            return Err(format!("{missing} should be omitted"));
        }
    }
    let t = 200;
    let step = 1.0 / (t - 1) as f64;
    let mut r = rng(seed);
    for trial in 0..trials {
        let n = r.gen_range(4..=30);
        let d = euclidean(&random_cloud(&mut r, n, 3));
        let c = [0.37, 2.5, 11.0][trial % 3];
        let base = features_from_persistence(&vr_persistence(&d, 1).unwrap(), t);
        let scaled = features_from_persistence(&vr_persistence(&d.scaled(c), 1).unwrap(), t);
        let json = serde_json::to_value(&base).unwrap();
        let keys: Vec<&String> = json.as_object().unwrap().keys().collect();
        if keys.len() != 28 || base.values().iter().any(|v| !v.is_finite()) {
            return Err(format!("trial {trial}: bad vector {json}"));
        }
        for name in SCALE_LINEAR {
            let power = if name.ends_with("area") { 2 } else { 1 };
            let (b, s) = (base.get(name).unwrap(), scaled.get(name).unwrap());
            if (s - b * c.powi(power)).abs() > 1e-9 * (b * c.powi(power)).abs().max(1e-12) {
                return Err(format!("trial {trial}: {name} {b} scaled by {c} gave {s}"));
            }
        }
        for name in SCALE_FREE {
            let (b, s) = (base.get(name).unwrap(), scaled.get(name).unwrap());
            if (s - b).abs() > 1e-9 * b.abs().max(1.0) {
                return Err(format!("trial {trial}: {name} changed from {b} to {s}"));
            }
        }
        for name in GRID_NORMALISED {
            let (b, s) = (base.get(name).unwrap(), scaled.get(name).unwrap());
            let tol = if name.ends_with("peak") {
                0.0
            } else {
                step + 1e-9
            };
            if (s - b).abs() > tol {
                return Err(format!("trial {trial}: {name} moved from {b} to {s}"));
            }
        }
    }
    Ok(format!("names + {trials} scaled clouds"))
}
