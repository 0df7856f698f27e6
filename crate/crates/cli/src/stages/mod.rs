//! One module per pipeline stage. Each `run` reads its upstream artifacts
//! from the run directory, processes items in parallel and returns the
//! record the runner stores in the manifest.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use trace_topology::segment::{Role, StepSequence};

use crate::config::Config;
use crate::error::CliError;
use crate::io::{self, missing_embeddings, STEPS};
use crate::manifest::Stage;

pub mod align;
pub mod generate;
pub mod graph;
pub mod report;
pub mod segment;
pub mod stats;
pub mod tda;

pub struct Context<'a> {
    pub run_dir: &'a Path,
    pub cfg: &'a Config,
    pub pool: rayon::ThreadPool,
}

impl<'a> Context<'a> {
    pub fn new(run_dir: &'a Path, cfg: &'a Config) -> Result<Self, CliError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
        Ok(Self { run_dir, cfg, pool })
    }

    /// Maps `f` over `items` on the worker pool; output order follows input.
    pub fn map_items<I, T, F>(&self, items: &[I], f: F) -> Vec<T>
    where
        I: Sync,
        T: Send,
        F: Fn(&I) -> T + Sync + Send,
    {
        self.pool.install(|| items.par_iter().map(f).collect())
    }
}

/// Trace and gold steps of one problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ItemSteps {
    pub id: String,
    pub trace: Vec<String>,
    pub gold: Vec<String>,
}

impl ItemSteps {
    pub fn steps(&self, role: Role) -> &[String] {
        match role {
            Role::Trace => &self.trace,
            Role::Gold => &self.gold,
        }
    }
}

/// Reads `steps.jsonl`, pairing the two roles per id in first-seen order.
pub fn load_steps(run_dir: &Path) -> Result<Vec<ItemSteps>, CliError> {
    let path = run_dir.join(STEPS);
    let rows: Vec<StepSequence> = io::read_jsonl(&path)?;
    let mut order = Vec::new();
    let mut by_id: BTreeMap<String, ItemSteps> = BTreeMap::new();
    for row in rows {
        let entry = by_id.entry(row.source_id.clone()).or_insert_with(|| {
            order.push(row.source_id.clone());
            ItemSteps {
                id: row.source_id.clone(),
                trace: Vec::new(),
                gold: Vec::new(),
            }
        });
        match row.role {
            Role::Trace => entry.trace = row.steps,
            Role::Gold => entry.gold = row.steps,
        }
    }
    Ok(order
        .into_iter()
        .map(|id| by_id.remove(&id).expect("id was inserted"))
        .collect())
}

/// Embeddings come from an external embedder; their absence is a missing
/// dependency rather than a per-item failure.
pub fn require_embeddings(
    run_dir: &Path,
    stage: Stage,
    items: &[ItemSteps],
) -> Result<(), CliError> {
    let ids: Vec<String> = items
        .iter()
        .filter(|i| !i.trace.is_empty() && !i.gold.is_empty())
        .map(|i| i.id.clone())
        .collect();
    let missing = missing_embeddings(run_dir, &ids);
    if missing.is_empty() {
        Ok(())
    } else {
        Err(CliError::Dependency {
            stage: stage.to_string(),
            missing,
        })
    }
}

/// One (problem, role) unit for the per-split stages.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitItem {
    pub id: String,
    pub role: Role,
    pub steps: usize,
}

impl SplitItem {
    pub fn expand(items: &[ItemSteps]) -> Vec<SplitItem> {
        items
            .iter()
            .flat_map(|it| {
                Role::ALL.iter().map(move |&role| SplitItem {
                    id: it.id.clone(),
                    role,
                    steps: it.steps(role).len(),
                })
            })
            .collect()
    }

    pub fn key(&self) -> String {
        format!("{}/{}", self.id, self.role.as_str())
    }
}
