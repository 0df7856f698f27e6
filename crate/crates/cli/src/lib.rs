//! Staged pipeline over a run directory: generate, segment, align, tda,
//! graph, stats and report. Each invocation runs one stage, records its
//! item ledger in `manifest.json` and skips work whose settings are
//! unchanged.

pub mod config;
pub mod error;
pub mod io;
pub mod manifest;
pub mod stages;

use config::{Args, Config, FileConfig};
use error::CliError;
use manifest::{Manifest, Stage, StageRecord, StageStatus};
use stages::Context;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ITEM_FAILURES: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// The artifact whose presence downstream stages require.
pub fn primary_output(stage: Stage) -> &'static str {
    match stage {
        Stage::Generate => io::TRACES,
        Stage::Segment => io::STEPS,
        Stage::Align => io::ALIGN,
        Stage::Tda => io::FEATURES,
        Stage::Graph => io::GRAPH,
        Stage::Stats => io::STATS_DIR,
        Stage::Report => io::REPORT_DIR,
    }
}

/// Runs one stage and returns its record as stored in the manifest.
pub fn execute(args: &Args) -> Result<StageRecord, CliError> {
    let file = match &args.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let cfg = Config::resolve(args, file)?;
    let stage = args.stage;
    let run_dir = cfg.run_dir.as_path();

    let mut manifest = Manifest::load_or_new(run_dir)?;
    let missing: Vec<String> = stage
        .upstream()
        .iter()
        .filter(|s| {
            manifest.status(**s) == StageStatus::Pending
                || !run_dir.join(primary_output(**s)).exists()
        })
        .map(|s| format!("{} (from {s})", primary_output(*s)))
        .collect();
    if !missing.is_empty() {
        return Err(CliError::Dependency {
            stage: stage.to_string(),
            missing,
        });
    }

    let snapshot = cfg.snapshot(stage);
    let prev = manifest.record(stage);
    if prev.status == StageStatus::Done && prev.config == snapshot {
        log::info!("{stage}: settings unchanged, nothing to recompute");
        let mut rec = prev.clone();
        rec.recomputed = 0;
        manifest.stages.insert(stage, rec.clone());
        manifest.save(run_dir)?;
        return Ok(rec);
    }

    std::fs::create_dir_all(run_dir).map_err(|e| CliError::io(run_dir, e))?;
    let ctx = Context::new(run_dir, &cfg)?;
    let mut rec = match stage {
        Stage::Generate => stages::generate::run(&ctx)?,
        Stage::Segment => stages::segment::run(&ctx)?,
        Stage::Align => stages::align::run(&ctx)?,
        Stage::Tda => stages::tda::run(&ctx)?,
        Stage::Graph => stages::graph::run(&ctx)?,
        Stage::Stats => stages::stats::run(&ctx)?,
        Stage::Report => stages::report::run(&ctx)?,
    };
    rec.config = snapshot;
    for note in &rec.skipped {
        log::info!("{stage}: skipped {} ({})", note.id, note.reason);
    }
    for note in &rec.failed {
        log::warn!("{stage}: {} failed: {}", note.id, note.reason);
    }
    manifest.complete(stage, rec.clone());
    manifest.config = cfg.full_snapshot();
    manifest.save(run_dir)?;
    Ok(rec)
}

/// Runs a stage and maps the outcome to the process exit code.
pub fn run(args: &Args) -> i32 {
    match execute(args) {
        Ok(rec) => {
            println!("{}: {}", args.stage, rec.summary());
            if rec.failed.is_empty() {
                EXIT_OK
            } else {
                EXIT_ITEM_FAILURES
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}
