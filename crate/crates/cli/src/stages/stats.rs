use std::collections::BTreeMap;

use serde_json::json;
use trace_topology::features::FEATURE_NAMES;
use trace_topology::graph::GraphFeatureVector;
use trace_topology::segment::Role;
use trace_topology::stats::{
    average_linkage, cluster_aggregate, corr_distance, delta_pct, ols_fit, silhouette,
    silhouette_sweep, standardize, stars, vif, DesignMatrix, RegressionReport, StatsError,
};

use super::align::AlignRow;
use super::graph::GraphRow;
use super::tda::FeatureRow;
use super::{load_steps, Context};
use crate::config::Target;
use crate::error::CliError;
use crate::io::{self, num, ALIGN, FEATURES, GRAPH, STATS_DIR};
use crate::manifest::{ledger, ItemOutcome, StageRecord};

pub const SUMMARY_HEADER: [&str; 9] = [
    "model", "status", "n", "p", "r2", "adj_r2", "f", "f_p", "dropped",
];
pub const REGRESSION_HEADER: [&str; 6] = ["term", "coef", "se", "t", "p", "stars"];
pub const COMPARISON_HEADER: [&str; 9] = [
    "model",
    "graph_r2",
    "graph_adj_r2",
    "tda_r2",
    "tda_adj_r2",
    "combined_r2",
    "combined_r2_delta_pct",
    "combined_adj_r2",
    "combined_adj_r2_delta_pct",
];

/// One regression and how its design was reduced before fitting.
#[derive(Debug, Clone)]
pub struct Fit {
    pub label: &'static str,
    pub status: String,
    pub p: usize,
    pub dropped: Vec<String>,
    pub report: Option<RegressionReport>,
}

/// Drops constant predictors (and, with `scale`, z-scores the rest), then
/// fits. Columns reported as collinear are removed and the fit retried.
pub fn fit_model(label: &'static str, x: &DesignMatrix, y: &[f64], scale: bool) -> Fit {
    let skipped = |status: String, p: usize, dropped: Vec<String>| Fit {
        label,
        status,
        p,
        dropped,
        report: None,
    };
    let (z, mut dropped) = match standardize(x) {
        Ok(v) => v,
        Err(StatsError::EmptyDesign) => {
            return skipped(
                "skipped: all predictors constant".into(),
                0,
                x.names().to_vec(),
            )
        }
        Err(e) => return skipped(format!("skipped: {e}"), x.p(), Vec::new()),
    };
    let mut design = if scale { z } else { x.without(&dropped) };
    loop {
        let (n, p) = (design.n(), design.p());
        if n <= p + 1 {
            return skipped(
                format!("skipped: insufficient observations (n={n}, p={p})"),
                p,
                dropped,
            );
        }
        match ols_fit(&design, y) {
            Ok(report) => {
                return Fit {
                    label,
                    status: "ok".into(),
                    p,
                    dropped,
                    report: Some(report),
                }
            }
            Err(StatsError::RankDeficient(cols)) => {
                let cols: Vec<String> = cols.into_iter().filter(|c| c != "const").collect();
                if cols.is_empty() {
                    return skipped("skipped: intercept is collinear".into(), p, dropped);
                }
                design = design.without(&cols);
                dropped.extend(cols);
                if design.p() == 0 {
                    return skipped("skipped: no independent predictors".into(), 0, dropped);
                }
            }
            Err(e) => return skipped(format!("skipped: {e}"), p, dropped),
        }
    }
}

fn regression_rows(fit: &Fit) -> Vec<Vec<String>> {
    let Some(r) = &fit.report else {
        return Vec::new();
    };
    (0..r.terms.len())
        .map(|j| {
            vec![
                r.terms[j].clone(),
                num(r.coefficients[j]),
                num(r.std_errors[j]),
                num(r.t_values[j]),
                num(r.p_values[j]),
                stars(r.p_values[j]).to_string(),
            ]
        })
        .collect()
}

fn summary_row(fit: &Fit, n: usize) -> Vec<String> {
    let (r2, adj, f, fp) = match &fit.report {
        Some(r) => (
            num(r.r_squared),
            num(r.adj_r_squared),
            num(r.f_statistic),
            num(r.f_p_value),
        ),
        None => Default::default(),
    };
    vec![
        fit.label.into(),
        fit.status.clone(),
        n.to_string(),
        fit.p.to_string(),
        r2,
        adj,
        f,
        fp,
        fit.dropped.join(";"),
    ]
}

fn comparison_row(model: &str, graph: &Fit, tda: &Fit, combined: &Fit) -> Vec<String> {
    let r2 = |f: &Fit| f.report.as_ref().map(|r| r.r_squared);
    let adj = |f: &Fit| f.report.as_ref().map(|r| r.adj_r_squared);
    let cell = |v: Option<f64>| v.map(num).unwrap_or_default();
    let delta = |a: Option<f64>, b: Option<f64>| a.zip(b).and_then(|(a, b)| delta_pct(a, b));
    vec![
        model.into(),
        cell(r2(graph)),
        cell(adj(graph)),
        cell(r2(tda)),
        cell(adj(tda)),
        cell(r2(combined)),
        cell(delta(r2(combined), r2(tda))),
        cell(adj(combined)),
        cell(delta(adj(combined), adj(tda))),
    ]
}

struct Joined {
    ids: Vec<String>,
    y: Vec<f64>,
    tda: Vec<Vec<f64>>,
    graph: Vec<Vec<f64>>,
}

pub fn run(ctx: &Context) -> Result<StageRecord, CliError> {
    let dir = ctx.run_dir;
    let items = load_steps(dir)?;
    let aligns: BTreeMap<String, AlignRow> = io::read_jsonl::<AlignRow>(&dir.join(ALIGN))?
        .into_iter()
        .map(|r| (r.id.clone(), r))
        .collect();
    let feats: BTreeMap<String, FeatureRow> = io::read_jsonl::<FeatureRow>(&dir.join(FEATURES))?
        .into_iter()
        .filter(|r| r.split == Role::Trace)
        .map(|r| (r.id.clone(), r))
        .collect();
    let graphs: BTreeMap<String, GraphRow> = io::read_jsonl::<GraphRow>(&dir.join(GRAPH))?
        .into_iter()
        .filter(|r| r.split == Role::Trace)
        .map(|r| (r.id.clone(), r))
        .collect();

    let mut outcomes = Vec::new();
    let mut joined = Joined {
        ids: Vec::new(),
        y: Vec::new(),
        tda: Vec::new(),
        graph: Vec::new(),
    };
    for it in &items {
        let (a, f, g) = (aligns.get(&it.id), feats.get(&it.id), graphs.get(&it.id));
        let mut missing = Vec::new();
        if a.is_none() {
            missing.push("alignment");
        }
        if f.is_none() {
            missing.push("tda features");
        }
        if g.is_none() {
            missing.push("graph features");
        }
        if let (Some(a), Some(f), Some(g)) = (a, f, g) {
            let tda_row: Option<Vec<f64>> = FEATURE_NAMES
                .iter()
                .map(|n| f.features.get(*n).copied())
                .collect();
            let Some(tda_row) = tda_row else {
                outcomes.push((
                    it.id.clone(),
                    ItemOutcome::Failed("incomplete feature row".into()),
                ));
                continue;
            };
            joined.ids.push(it.id.clone());
            joined.y.push(match ctx.cfg.target {
                Target::Score => a.score,
                Target::Coverage => a.coverage,
            });
            joined.tda.push(tda_row);
            joined.graph.push(g.features.as_row().to_vec());
            outcomes.push((it.id.clone(), ItemOutcome::done((), Vec::new())));
        } else {
            log::warn!("stats: dropping {} (missing {})", it.id, missing.join(", "));
            outcomes.push((
                it.id.clone(),
                ItemOutcome::Skipped(format!("missing {}", missing.join(", "))),
            ));
        }
    }
    let (mut record, _) = ledger(outcomes);

    let names = |ns: &[&str]| ns.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let design = |ns: &[&str], rows: &[Vec<f64>]| {
        DesignMatrix::from_rows(names(ns), rows)
            .map_err(|e| CliError::Config(format!("feature table: {e}")))
    };
    let tda_x = design(&FEATURE_NAMES, &joined.tda)?;
    let graph_x = design(&GraphFeatureVector::NAMES, &joined.graph)?;
    let combined_x = graph_x
        .hconcat(&tda_x)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let y = &joined.y;
    let n = y.len();

    let scale = ctx.cfg.standardize;
    let graph_fit = fit_model("graph", &graph_x, y, scale);
    let tda_fit = fit_model("tda", &tda_x, y, scale);
    let combined_fit = fit_model("graph+tda", &combined_x, y, scale);

    let out = dir.join(STATS_DIR);
    let mut outputs = Vec::new();
    let mut write = |name: &str, header: &[&str], rows: &[Vec<String>]| -> Result<(), CliError> {
        io::write_csv(&out.join(name), header, rows)?;
        outputs.push(format!("{STATS_DIR}/{name}"));
        Ok(())
    };
    write(
        "regression_graph.csv",
        &REGRESSION_HEADER,
        &regression_rows(&graph_fit),
    )?;
    write(
        "regression_tda.csv",
        &REGRESSION_HEADER,
        &regression_rows(&tda_fit),
    )?;
    write(
        "regression_combined.csv",
        &REGRESSION_HEADER,
        &regression_rows(&combined_fit),
    )?;
    write(
        "comparison.csv",
        &COMPARISON_HEADER,
        &[comparison_row(
            &ctx.cfg.model,
            &graph_fit,
            &tda_fit,
            &combined_fit,
        )],
    )?;

    // Multicollinearity of the TDA block, constants removed.
    let mut vif_rows = Vec::new();
    match standardize(&tda_x) {
        Ok((z, _)) => match vif(&z) {
            Ok(v) => {
                vif_rows = z
                    .names()
                    .iter()
                    .zip(&v)
                    .map(|(n, v)| vec![n.clone(), num(*v)])
                    .collect()
            }
            Err(e) => record.notes.push(format!("vif skipped: {e}")),
        },
        Err(e) => record.notes.push(format!("vif skipped: {e}")),
    }
    write("vif.csv", &["feature", "vif"], &vif_rows)?;

    // Correlation clustering of standardized TDA features.
    let mut sweep_rows = Vec::new();
    let mut clusters = json!(null);
    let mut cluster_fit = Fit {
        label: "clusters",
        status: "skipped: clustering unavailable".into(),
        p: 0,
        dropped: Vec::new(),
        report: None,
    };
    match standardize(&tda_x) {
        Ok((z, dropped)) if z.p() >= 2 => {
            let d = corr_distance(&z);
            let p = z.p();
            let ks: Vec<usize> = if p == 2 { vec![2] } else { (2..p).collect() };
            match silhouette_sweep(&d, &ks) {
                Ok(sweep) => {
                    sweep_rows = sweep
                        .iter()
                        .map(|(k, s)| vec![k.to_string(), num(*s)])
                        .collect()
                }
                Err(e) => record.notes.push(format!("silhouette sweep failed: {e}")),
            }
            let k = ctx.cfg.clusters.min(p);
            let part = average_linkage(&d, k).map_err(|e| CliError::Config(e.to_string()))?;
            let sil = silhouette(&d, &part).ok();
            let features: Vec<_> = z
                .names()
                .iter()
                .enumerate()
                .map(|(j, name)| {
                    json!({
                        "name": name,
                        "cluster": format!("C{}", part.assignment[j] + 1),
                        "silhouette": sil.as_ref().map(|s| s.per_feature[j]),
                    })
                })
                .collect();
            clusters = json!({
                "k": k,
                "requested_k": ctx.cfg.clusters,
                "dropped_constant": dropped,
                "overall_silhouette": sil.as_ref().map(|s| s.overall),
                "features": features,
            });
            let agg = cluster_aggregate(&z, &part).map_err(|e| CliError::Config(e.to_string()))?;
            cluster_fit = fit_model("clusters", &agg, y, false);
        }
        Ok(_) => record
            .notes
            .push("clustering skipped: fewer than 2 non-constant features".into()),
        Err(e) => record.notes.push(format!("clustering skipped: {e}")),
    }
    write("silhouette.csv", &["k", "silhouette"], &sweep_rows)?;
    write(
        "regression_clusters.csv",
        &REGRESSION_HEADER,
        &regression_rows(&cluster_fit),
    )?;
    let summary: Vec<Vec<String>> = [&graph_fit, &tda_fit, &combined_fit, &cluster_fit]
        .iter()
        .map(|f| summary_row(f, n))
        .collect();
    write("summary.csv", &SUMMARY_HEADER, &summary)?;
    io::write_json(&out.join("clusters.json"), &clusters)?;
    outputs.push(format!("{STATS_DIR}/clusters.json"));

    for f in [&graph_fit, &tda_fit, &combined_fit, &cluster_fit] {
        if f.status != "ok" {
            record
                .notes
                .push(format!("{} regression {}", f.label, f.status));
        } else if !f.dropped.is_empty() {
            record.notes.push(format!(
                "{} regression dropped {}",
                f.label,
                f.dropped.join(", ")
            ));
        }
    }
    record.outputs = outputs;
    Ok(record)
}
