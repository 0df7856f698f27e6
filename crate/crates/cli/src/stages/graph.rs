use serde::{Deserialize, Serialize};
use trace_topology::graph::{analyze_graph, build_graph, GraphFeatureVector};
use trace_topology::segment::Role;

use super::{load_steps, require_embeddings, Context, SplitItem};
use crate::error::CliError;
use crate::io::{self, load_embedding, GRAPH};
use crate::manifest::{ledger, ItemOutcome, Stage, StageRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphRow {
    pub id: String,
    pub split: Role,
    #[serde(flatten)]
    pub features: GraphFeatureVector,
}

pub fn run(ctx: &Context) -> Result<StageRecord, CliError> {
    let items = load_steps(ctx.run_dir)?;
    require_embeddings(ctx.run_dir, Stage::Graph, &items)?;
    let splits = SplitItem::expand(&items);
    let k = ctx.cfg.kmeans_k;

    let outcomes = ctx.map_items(&splits, |s| {
        if s.steps < 2 {
            return ItemOutcome::Skipped("fewer than 2 steps".into());
        }
        let built = load_embedding(ctx.run_dir, s.role, &s.id, s.steps)
            .and_then(|x| build_graph(&x, k).map_err(|e| e.to_string()));
        match built {
            Ok(path) => ItemOutcome::done(
                GraphRow {
                    id: s.id.clone(),
                    split: s.role,
                    features: analyze_graph(&path),
                },
                Vec::new(),
            ),
            Err(e) => ItemOutcome::Failed(e),
        }
    });
    let (mut record, rows) = ledger(splits.iter().map(SplitItem::key).zip(outcomes).collect());
    let rows: Vec<GraphRow> = rows.into_iter().map(|(_, r)| r).collect();
    io::write_jsonl(&ctx.run_dir.join(GRAPH), &rows)?;
    record.outputs = vec![GRAPH.into()];
    Ok(record)
}
