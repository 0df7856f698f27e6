use std::collections::BTreeMap;

use trace_topology::dataset::{ProblemRecord, TraceRecord};
use trace_topology::segment::{Role, StepSequence};

use super::Context;
use crate::error::CliError;
use crate::io::{self, CORPUS, STEPS, TRACES};
use crate::manifest::{ledger, ItemOutcome, StageRecord};

pub fn run(ctx: &Context) -> Result<StageRecord, CliError> {
    let problems: Vec<ProblemRecord> = io::read_json(&ctx.run_dir.join(CORPUS))?;
    let traces: BTreeMap<String, TraceRecord> =
        io::read_jsonl::<TraceRecord>(&ctx.run_dir.join(TRACES))?
            .into_iter()
            .map(|t| (t.problem_id.clone(), t))
            .collect();

    let outcomes = ctx.map_items(&problems, |p| match traces.get(&p.id) {
        Some(t) => ItemOutcome::done(
            [
                StepSequence::from_text(&p.id, Role::Trace, &t.raw_response),
                StepSequence::from_text(&p.id, Role::Gold, &p.gold_text()),
            ],
            Vec::new(),
        ),
        None => ItemOutcome::Skipped("no trace was generated".into()),
    });
    let items = problems
        .iter()
        .map(|p| p.id.clone())
        .zip(outcomes)
        .collect();
    let (mut record, rows) = ledger(items);
    let rows: Vec<StepSequence> = rows.into_iter().flat_map(|(_, pair)| pair).collect();
    io::write_jsonl(&ctx.run_dir.join(STEPS), &rows)?;
    record.outputs = vec![STEPS.into()];
    Ok(record)
}
