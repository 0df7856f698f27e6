use serde::{Deserialize, Serialize};
use trace_topology::align::{align, AlignMode};
use trace_topology::segment::Role;

use super::{load_steps, require_embeddings, Context};
use crate::error::CliError;
use crate::io::{self, load_embedding, ALIGN};
use crate::manifest::{ledger, ItemOutcome, Stage, StageRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignRow {
    pub id: String,
    pub mode: AlignMode,
    /// Gap penalty.
    pub lambda: f64,
    pub indices: Vec<(usize, usize)>,
    pub score: f64,
    pub coverage: f64,
}

pub fn run(ctx: &Context) -> Result<StageRecord, CliError> {
    let items = load_steps(ctx.run_dir)?;
    require_embeddings(ctx.run_dir, Stage::Align, &items)?;
    let (mode, gap) = (ctx.cfg.align_mode, ctx.cfg.gap);

    let outcomes = ctx.map_items(&items, |it| {
        if it.trace.is_empty() || it.gold.is_empty() {
            return ItemOutcome::Skipped("empty step sequence".into());
        }
        let loaded =
            load_embedding(ctx.run_dir, Role::Trace, &it.id, it.trace.len()).and_then(|xr| {
                Ok((
                    xr,
                    load_embedding(ctx.run_dir, Role::Gold, &it.id, it.gold.len())?,
                ))
            });
        match loaded.and_then(|(xr, xs)| align(mode, &xr, &xs, gap).map_err(|e| e.to_string())) {
            Ok(r) => ItemOutcome::done(
                AlignRow {
                    id: it.id.clone(),
                    mode,
                    lambda: gap,
                    indices: r.pairs,
                    score: r.score,
                    coverage: r.coverage,
                },
                Vec::new(),
            ),
            Err(e) => ItemOutcome::Failed(e),
        }
    });
    let (mut record, rows) = ledger(items.iter().map(|i| i.id.clone()).zip(outcomes).collect());
    let rows: Vec<AlignRow> = rows.into_iter().map(|(_, r)| r).collect();
    io::write_jsonl(&ctx.run_dir.join(ALIGN), &rows)?;
    record.outputs = vec![ALIGN.into()];
    Ok(record)
}
