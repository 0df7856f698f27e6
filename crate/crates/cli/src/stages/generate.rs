use std::collections::BTreeMap;

use chrono::{SecondsFormat, Utc};
use trace_topology::dataset::{
    build_prompt, extract_final_answer, generate_trace, parse_corpus, ProblemRecord, TraceRecord,
};

use super::Context;
use crate::error::CliError;
use crate::io::{self, CORPUS, TRACES, TRACES_DIR};
use crate::manifest::{ledger, ItemOutcome, StageRecord};

fn trace_rel(id: &str) -> String {
    format!("{TRACES_DIR}/{id}.json")
}

/// Canned response used by `--stub` when no replay file covers an item.
pub fn synthesize_response(p: &ProblemRecord) -> String {
    format!("{}\nFinal Answer: {}", p.gold_text(), p.answer)
}

pub fn run(ctx: &Context) -> Result<StageRecord, CliError> {
    let cfg = ctx.cfg;
    let corpus_path = cfg
        .corpus
        .as_ref()
        .ok_or_else(|| CliError::Config("generate needs --corpus".into()))?;
    let bytes = std::fs::read(corpus_path).map_err(|e| CliError::io(corpus_path, e))?;
    let problems = parse_corpus(&bytes)
        .map_err(|e| CliError::Config(format!("{}: {e}", corpus_path.display())))?;

    let replay: Option<BTreeMap<String, String>> = match &cfg.stub_responses {
        Some(p) => Some(io::read_json(p).map_err(|e| CliError::Config(e.to_string()))?),
        None => None,
    };
    let endpoint = cfg.endpoint_config();
    if !cfg.stub {
        endpoint
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    io::write_json(&ctx.run_dir.join(CORPUS), &problems)?;

    let outcomes = ctx.map_items(&problems, |p| {
        let prompt = build_prompt(p, false);
        let rel = trace_rel(&p.id);
        let path = ctx.run_dir.join(&rel);
        if let Ok(prev) = io::read_json::<TraceRecord>(&path) {
            if prev.model_name == cfg.model
                && prev.prompt == prompt
                && prev.gold_text == p.gold_text()
            {
                return ItemOutcome::Done {
                    value: prev,
                    artifacts: vec![rel],
                    recomputed: false,
                };
            }
        }
        let response = if cfg.stub {
            match replay.as_ref().map(|m| m.get(&p.id)) {
                Some(Some(text)) => Ok(text.clone()),
                Some(None) => Err(format!("no stub response for {}", p.id)),
                None => Ok(synthesize_response(p)),
            }
        } else {
            generate_trace(&prompt, &endpoint).map_err(|e| e.to_string())
        };
        match response {
            Ok(text) => {
                let rec = TraceRecord {
                    problem_id: p.id.clone(),
                    model_name: cfg.model.clone(),
                    prompt,
                    extracted_answer: extract_final_answer(&text),
                    raw_response: text,
                    gold_text: p.gold_text(),
                    created_at: Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true),
                };
                match io::write_json(&path, &rec) {
                    Ok(()) => ItemOutcome::done(rec, vec![rel]),
                    Err(e) => ItemOutcome::Failed(e.to_string()),
                }
            }
            Err(e) => ItemOutcome::Failed(e),
        }
    });

    let items = problems
        .iter()
        .map(|p| p.id.clone())
        .zip(outcomes)
        .collect();
    let (mut record, traces) = ledger(items);
    let rows: Vec<TraceRecord> = traces.into_iter().map(|(_, t)| t).collect();
    io::write_jsonl(&ctx.run_dir.join(TRACES), &rows)?;
    record.outputs = vec![CORPUS.into(), TRACES.into()];
    Ok(record)
}
