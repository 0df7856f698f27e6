//! The per-run manifest: stage statuses, the settings each stage last ran
//! with, and the done/skipped/failed ledger of its items.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use trace_topology::embedding::write_atomic;

use crate::error::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, ValueEnum,
)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Generate,
    Segment,
    Align,
    Tda,
    Graph,
    Stats,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Generate,
        Stage::Segment,
        Stage::Align,
        Stage::Tda,
        Stage::Graph,
        Stage::Stats,
        Stage::Report,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Generate => "generate",
            Stage::Segment => "segment",
            Stage::Align => "align",
            Stage::Tda => "tda",
            Stage::Graph => "graph",
            Stage::Stats => "stats",
            Stage::Report => "report",
        }
    }

    /// Stages whose outputs this stage reads.
    pub fn upstream(self) -> &'static [Stage] {
        match self {
            Stage::Generate => &[],
            Stage::Segment => &[Stage::Generate],
            Stage::Align | Stage::Tda | Stage::Graph => &[Stage::Segment],
            Stage::Stats => &[Stage::Align, Stage::Tda, Stage::Graph],
            Stage::Report => &[Stage::Align, Stage::Tda, Stage::Stats],
        }
    }

    /// Every stage that reads this one's outputs, directly or not.
    pub fn downstream(self) -> Vec<Stage> {
        let mut out: Vec<Stage> = Vec::new();
        let mut frontier = vec![self];
        while let Some(s) = frontier.pop() {
            for t in Stage::ALL {
                if t.upstream().contains(&s) && !out.contains(&t) {
                    out.push(t);
                    frontier.push(t);
                }
            }
        }
        out.sort();
        out
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageStatus {
    #[default]
    Pending,
    Done,
    /// Completed, but some items failed.
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemNote {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StageRecord {
    pub status: StageStatus,
    /// Settings the stage last ran with.
    pub config: Value,
    pub done: Vec<String>,
    pub skipped: Vec<ItemNote>,
    pub failed: Vec<ItemNote>,
    /// Items whose outputs were (re)computed by the last run.
    pub recomputed: usize,
    /// Per-item artifact paths, relative to the run directory.
    pub artifacts: BTreeMap<String, Vec<String>>,
    /// Stage-level outputs, relative to the run directory.
    pub outputs: Vec<String>,
    pub notes: Vec<String>,
}

impl StageRecord {
    pub fn item_count(&self) -> usize {
        self.done.len() + self.skipped.len() + self.failed.len()
    }

    pub fn summary(&self) -> String {
        format!(
            "{} done, {} skipped, {} failed ({} recomputed)",
            self.done.len(),
            self.skipped.len(),
            self.failed.len(),
            self.recomputed
        )
    }
}

/// Result of one item within a stage.
#[derive(Debug, Clone, PartialEq)]
pub enum ItemOutcome<T> {
    Done {
        value: T,
        artifacts: Vec<String>,
        recomputed: bool,
    },
    Skipped(String),
    Failed(String),
}

impl<T> ItemOutcome<T> {
    pub fn done(value: T, artifacts: Vec<String>) -> Self {
        Self::Done {
            value,
            artifacts,
            recomputed: true,
        }
    }
}

/// Folds item outcomes (in item order) into a record and the done values.
pub fn ledger<T>(items: Vec<(String, ItemOutcome<T>)>) -> (StageRecord, Vec<(String, T)>) {
    let mut rec = StageRecord::default();
    let mut values = Vec::new();
    for (id, outcome) in items {
        match outcome {
            ItemOutcome::Done {
                value,
                artifacts,
                recomputed,
            } => {
                rec.done.push(id.clone());
                if recomputed {
                    rec.recomputed += 1;
                }
                if !artifacts.is_empty() {
                    rec.artifacts.insert(id.clone(), artifacts);
                }
                values.push((id, value));
            }
            ItemOutcome::Skipped(reason) => rec.skipped.push(ItemNote { id, reason }),
            ItemOutcome::Failed(reason) => {
                rec.recomputed += 1;
                rec.failed.push(ItemNote { id, reason });
            }
        }
    }
    rec.status = if rec.failed.is_empty() {
        StageStatus::Done
    } else {
        StageStatus::Failed
    };
    (rec, values)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub run_id: String,
    pub tool_version: String,
    /// All resolved settings of the most recent invocation.
    pub config: Value,
    pub stages: BTreeMap<Stage, StageRecord>,
}

impl Manifest {
    pub fn path(run_dir: &Path) -> PathBuf {
        run_dir.join(MANIFEST_FILE)
    }

    pub fn new(run_id: String) -> Self {
        Self {
            run_id,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config: Value::Null,
            stages: Stage::ALL
                .iter()
                .map(|&s| (s, StageRecord::default()))
                .collect(),
        }
    }

    pub fn load_or_new(run_dir: &Path) -> Result<Self, CliError> {
        let path = Self::path(run_dir);
        if !path.exists() {
            let run_id = run_dir
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| "run".into());
            return Ok(Self::new(run_id));
        }
        let bytes = std::fs::read(&path).map_err(|e| CliError::io(&path, e))?;
        let mut m: Self = serde_json::from_slice(&bytes).map_err(|e| CliError::format(&path, e))?;
        for s in Stage::ALL {
            m.stages.entry(s).or_default();
        }
        Ok(m)
    }

    pub fn save(&self, run_dir: &Path) -> Result<(), CliError> {
        let path = Self::path(run_dir);
        let mut bytes = serde_json::to_vec_pretty(self).expect("manifest serializes");
        bytes.push(b'\n');
        write_atomic(&path, &bytes).map_err(|e| CliError::io(&path, e))
    }

    pub fn record(&self, stage: Stage) -> &StageRecord {
        &self.stages[&stage]
    }

    pub fn status(&self, stage: Stage) -> StageStatus {
        self.record(stage).status
    }

    /// Stores a fresh record and resets everything downstream to pending.
    pub fn complete(&mut self, stage: Stage, record: StageRecord) {
        self.stages.insert(stage, record);
        for s in stage.downstream() {
            if let Some(r) = self.stages.get_mut(&s) {
                if r.status != StageStatus::Pending {
                    r.status = StageStatus::Pending;
                    r.notes.push(format!("invalidated by a new {stage} run"));
                }
            }
        }
    }
}
