use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use trace_topology::embedding::cosine_distance_matrix;
use trace_topology::features::{features_from_persistence, TdaFeatureVector};
use trace_topology::persistence::{Interval, PersistenceDiagram};
use trace_topology::segment::Role;
use trace_topology::{vr_persistence, Persistence};

use super::{load_steps, require_embeddings, Context, SplitItem};
use crate::error::CliError;
use crate::io::{self, diagram_rel, load_embedding, FEATURES};
use crate::manifest::{ledger, ItemOutcome, Stage, StageRecord};

#[derive(Debug, Serialize)]
struct FeatureRowOut {
    id: String,
    split: Role,
    h1_empty: bool,
    features: TdaFeatureVector,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct FeatureRow {
    pub id: String,
    pub split: Role,
    pub h1_empty: bool,
    pub features: BTreeMap<String, f64>,
}

fn bars_json(d: &PersistenceDiagram) -> Value {
    Value::Array(
        d.intervals
            .iter()
            .map(|iv| {
                if iv.is_finite() {
                    json!([iv.birth, iv.death])
                } else {
                    json!([iv.birth, "inf"])
                }
            })
            .collect(),
    )
}

pub fn diagram_json(id: &str, p: &Persistence) -> Value {
    json!({"id": id, "h0": bars_json(&p.h0), "h1": bars_json(&p.h1), "threshold": p.threshold})
}

fn parse_bars(v: &Value, dim: usize) -> Option<PersistenceDiagram> {
    let ivs = v
        .as_array()?
        .iter()
        .map(|pair| {
            let birth = pair.get(0)?.as_f64()?;
            let death = match pair.get(1)? {
                Value::String(s) if s == "inf" => f64::INFINITY,
                other => other.as_f64()?,
            };
            Some(Interval::new(birth, death))
        })
        .collect::<Option<Vec<_>>>()?;
    Some(PersistenceDiagram::new(dim, ivs))
}

/// Reads a cached diagram file back into diagrams and threshold.
pub fn parse_diagram(v: &Value) -> Option<Persistence> {
    Some(Persistence {
        h0: parse_bars(v.get("h0")?, 0)?,
        h1: parse_bars(v.get("h1")?, 1)?,
        threshold: v.get("threshold")?.as_f64()?,
    })
}

pub fn run(ctx: &Context) -> Result<StageRecord, CliError> {
    let items = load_steps(ctx.run_dir)?;
    require_embeddings(ctx.run_dir, Stage::Tda, &items)?;
    let splits = SplitItem::expand(&items);
    let grid = ctx.cfg.grid;

    let outcomes = ctx.map_items(&splits, |s| {
        if s.steps < 2 {
            return ItemOutcome::Skipped("fewer than 2 steps".into());
        }
        let computed = load_embedding(ctx.run_dir, s.role, &s.id, s.steps).and_then(|x| {
            let d = cosine_distance_matrix(&x).map_err(|e| e.to_string())?;
            vr_persistence(&d, 1).map_err(|e| e.to_string())
        });
        let ph = match computed {
            Ok(ph) => ph,
            Err(e) => return ItemOutcome::Failed(e),
        };
        let rel = diagram_rel(s.role, &s.id);
        if let Err(e) = io::write_json(&ctx.run_dir.join(&rel), &diagram_json(&s.id, &ph)) {
            return ItemOutcome::Failed(e.to_string());
        }
        let row = FeatureRowOut {
            id: s.id.clone(),
            split: s.role,
            h1_empty: ph.h1.is_empty(),
            features: features_from_persistence(&ph, grid),
        };
        ItemOutcome::done(row, vec![rel])
    });

    let (mut record, rows) = ledger(splits.iter().map(SplitItem::key).zip(outcomes).collect());
    let rows: Vec<FeatureRowOut> = rows.into_iter().map(|(_, r)| r).collect();
    io::write_jsonl(&ctx.run_dir.join(FEATURES), &rows)?;
    record.outputs = vec![FEATURES.into()];
    Ok(record)
}
