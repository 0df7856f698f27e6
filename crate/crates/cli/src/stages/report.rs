use std::collections::BTreeSet;

use trace_topology::align::SimilarityMatrix;
use trace_topology::features::{betti_curve, grid, landscape0};
use trace_topology::segment::Role;
use trace_topology::Persistence;

use super::align::AlignRow;
use super::tda::{parse_diagram, FeatureRow};
use super::{load_steps, Context};
use crate::error::CliError;
use crate::io::{self, diagram_rel, load_embedding, num, ALIGN, FEATURES, REPORT_DIR, STATS_DIR};
use crate::manifest::{ledger, ItemNote, ItemOutcome, Manifest, Stage, StageRecord, StageStatus};

pub const CURVE_HEADER: [&str; 3] = ["t", "mean", "std"];
pub const HEATMAP_HEADER: [&str; 4] = ["i", "j", "similarity", "aligned"];

/// Pointwise mean and population std of equal-length curves, indexed by
/// the normalized grid position `i / (T - 1)`.
pub fn mean_std_rows(curves: &[Vec<f64>], t: usize) -> Vec<Vec<String>> {
    if curves.is_empty() {
        return Vec::new();
    }
    let n = curves.len() as f64;
    (0..t)
        .map(|i| {
            let mean = curves.iter().map(|c| c[i]).sum::<f64>() / n;
            let var = curves.iter().map(|c| (c[i] - mean).powi(2)).sum::<f64>() / n;
            vec![num(i as f64 / (t - 1) as f64), num(mean), num(var.sqrt())]
        })
        .collect()
}

fn heatmap_rows(sim: &SimilarityMatrix, pairs: &[(usize, usize)]) -> Vec<Vec<String>> {
    let aligned: BTreeSet<(usize, usize)> = pairs.iter().copied().collect();
    let mut rows = Vec::with_capacity(sim.rows * sim.cols);
    for i in 0..sim.rows {
        for j in 0..sim.cols {
            rows.push(vec![
                i.to_string(),
                j.to_string(),
                num(sim.get(i, j)),
                u8::from(aligned.contains(&(i, j))).to_string(),
            ]);
        }
    }
    rows
}

/// Grid size the diagrams were summarized with, falling back to the
/// current setting when the manifest does not record one.
fn tda_grid(ctx: &Context) -> Result<usize, CliError> {
    let manifest = Manifest::load_or_new(ctx.run_dir)?;
    Ok(manifest
        .record(Stage::Tda)
        .config
        .get("grid")
        .and_then(|g| g.as_u64())
        .map_or(ctx.cfg.grid, |g| g as usize))
}

pub fn run(ctx: &Context) -> Result<StageRecord, CliError> {
    let dir = ctx.run_dir;
    let t = tda_grid(ctx)?;
    let rows: Vec<FeatureRow> = io::read_jsonl(&dir.join(FEATURES))?;

    let loaded = ctx.map_items(&rows, |r| {
        let rel = diagram_rel(r.split, &r.id);
        match io::read_json::<serde_json::Value>(&dir.join(&rel)) {
            Ok(v) => match parse_diagram(&v) {
                Some(p) => ItemOutcome::done((r.split, p), Vec::new()),
                None => ItemOutcome::Failed(format!("{rel}: malformed diagram")),
            },
            Err(e) => ItemOutcome::Failed(e.to_string()),
        }
    });
    let keys = rows
        .iter()
        .map(|r| format!("{}/{}", r.id, r.split.as_str()));
    let (mut record, diagrams) = ledger(keys.zip(loaded).collect());
    let diagrams: Vec<(Role, Persistence)> = diagrams.into_iter().map(|(_, d)| d).collect();

    let out = dir.join(REPORT_DIR);
    let mut outputs = Vec::new();
    let mut write = |name: String, header: &[&str], rows: &[Vec<String>]| -> Result<(), CliError> {
        io::write_csv(&out.join(&name), header, rows)?;
        outputs.push(format!("{REPORT_DIR}/{name}"));
        Ok(())
    };

    for role in Role::ALL {
        for dim in [0usize, 1] {
            let mut betti = Vec::new();
            let mut land = Vec::new();
            for (_, p) in diagrams.iter().filter(|(r, _)| *r == role) {
                let diag = if dim == 0 { &p.h0 } else { &p.h1 };
                let curve = betti_curve(diag, t, p.threshold);
                betti.push(curve.counts.iter().map(|&c| f64::from(c)).collect());
                land.push(landscape0(diag, &grid(t, p.threshold)));
            }
            let tag = format!("{}_H{dim}", role.as_str());
            write(
                format!("betti_mean_std_{tag}.csv"),
                &CURVE_HEADER,
                &mean_std_rows(&betti, t),
            )?;
            write(
                format!("landscape_mean_std_{tag}.csv"),
                &CURVE_HEADER,
                &mean_std_rows(&land, t),
            )?;
        }
    }

    let sil_path = dir.join(STATS_DIR).join("silhouette.csv");
    let mut sil_rows = Vec::new();
    if sil_path.is_file() {
        let mut reader =
            csv::Reader::from_path(&sil_path).map_err(|e| CliError::format(&sil_path, e))?;
        for rec in reader.records() {
            let rec = rec.map_err(|e| CliError::format(&sil_path, e))?;
            sil_rows.push(rec.iter().map(str::to_string).collect());
        }
    } else {
        record.notes.push("no silhouette sweep found".into());
    }
    write(
        "silhouette_curve.csv".into(),
        &["k", "silhouette"],
        &sil_rows,
    )?;

    let aligns: Vec<AlignRow> = io::read_jsonl(&dir.join(ALIGN))?;
    let chosen = match &ctx.cfg.heatmap_id {
        Some(id) => Some(
            aligns
                .iter()
                .find(|a| &a.id == id)
                .ok_or_else(|| CliError::Config(format!("--heatmap-id {id} has no alignment")))?,
        ),
        None => aligns.first(),
    };
    let mut heat = Vec::new();
    if let Some(a) = chosen {
        let items = load_steps(dir)?;
        let item = items
            .iter()
            .find(|i| i.id == a.id)
            .ok_or_else(|| CliError::Config(format!("{} has no segmented steps", a.id)))?;
        let sim = load_embedding(dir, Role::Trace, &a.id, item.trace.len())
            .and_then(|xr| Ok((xr, load_embedding(dir, Role::Gold, &a.id, item.gold.len())?)))
            .and_then(|(xr, xs)| SimilarityMatrix::between(&xr, &xs).map_err(|e| e.to_string()));
        match sim {
            Ok(sim) => {
                heat = heatmap_rows(&sim, &a.indices);
                record.notes.push(format!("alignment heatmap for {}", a.id));
            }
            Err(e) => {
                record.failed.push(ItemNote {
                    id: format!("heatmap:{}", a.id),
                    reason: e,
                });
                record.status = StageStatus::Failed;
            }
        }
    }
    write("alignment_heatmap.csv".into(), &HEATMAP_HEADER, &heat)?;

    record.outputs = outputs;
    Ok(record)
}
