//! Run configuration. Values resolve as command-line flag, then environment
//! variable, then JSON config file, then built-in default.

use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use trace_topology::align::{AlignMode, DEFAULT_GAP};
use trace_topology::dataset::{EndpointConfig, DEFAULT_ENDPOINT, ENDPOINT_ENV};
use trace_topology::features::DEFAULT_GRID;
use trace_topology::graph::DEFAULT_CLUSTER_BUDGET;

use crate::error::CliError;
use crate::manifest::Stage;

pub const DEFAULT_MODEL: &str = "qwen3:8b";
pub const DEFAULT_CLUSTERS: usize = 18;

/// Response variable for the regressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Score,
    Coverage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Global,
    Local,
}

impl From<ModeArg> for AlignMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Global => AlignMode::Global,
            ModeArg::Local => AlignMode::Local,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "trace-topology",
    version,
    about = "Shape analysis of step-by-step reasoning traces",
    allow_negative_numbers = true
)]
pub struct Args {
    /// Pipeline stage to run.
    #[arg(value_enum)]
    pub stage: Stage,
    /// Directory holding all artifacts and the manifest of one run.
    #[arg(long)]
    pub run_dir: PathBuf,
    /// JSON file with defaults for any of the options below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, env = ENDPOINT_ENV)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub max_tokens: Option<u32>,
    /// Per-request timeout in seconds.
    #[arg(long)]
    pub timeout: Option<u64>,
    #[arg(long)]
    pub retries: Option<u32>,
    #[arg(long, value_enum)]
    pub align_mode: Option<ModeArg>,
    #[arg(long)]
    pub gap: Option<f64>,
    /// Samples per Betti curve and landscape.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub kmeans_k: Option<usize>,
    /// Z-score predictors in the per-feature-set regressions.
    #[arg(long)]
    pub standardize: bool,
    /// Number of feature clusters for the aggregated regression.
    #[arg(long)]
    pub clusters: Option<usize>,
    #[arg(long, value_enum)]
    pub target: Option<Target>,
    /// Replay canned responses instead of calling the endpoint.
    #[arg(long)]
    pub stub: bool,
    /// JSON object mapping problem id to canned response text.
    #[arg(long)]
    pub stub_responses: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Item whose similarity matrix goes into the alignment heatmap.
    #[arg(long)]
    pub heatmap_id: Option<String>,
}

/// Optional settings read from `--config`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub corpus: Option<PathBuf>,
    pub model: Option<String>,
    pub endpoint: Option<String>,
    pub max_tokens: Option<u32>,
    pub timeout: Option<u64>,
    pub retries: Option<u32>,
    pub align_mode: Option<AlignMode>,
    pub gap: Option<f64>,
    pub grid: Option<usize>,
    pub kmeans_k: Option<usize>,
    pub standardize: Option<bool>,
    pub clusters: Option<usize>,
    pub target: Option<Target>,
    pub stub: Option<bool>,
    pub stub_responses: Option<PathBuf>,
    pub workers: Option<usize>,
    pub heatmap_id: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_slice(&bytes)
            .map_err(|e| CliError::Config(format!("config file {}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub run_dir: PathBuf,
    pub corpus: Option<PathBuf>,
    pub model: String,
    pub endpoint: String,
    pub max_tokens: u32,
    pub timeout_secs: u64,
    pub retries: u32,
    pub align_mode: AlignMode,
    pub gap: f64,
    pub grid: usize,
    pub kmeans_k: usize,
    pub standardize: bool,
    pub clusters: usize,
    pub target: Target,
    pub stub: bool,
    pub stub_responses: Option<PathBuf>,
    pub workers: usize,
    pub heatmap_id: Option<String>,
}

impl Config {
    pub fn resolve(args: &Args, file: FileConfig) -> Result<Self, CliError> {
        let defaults = EndpointConfig::default();
        let cfg = Self {
            run_dir: args.run_dir.clone(),
            corpus: args.corpus.clone().or(file.corpus),
            model: args
                .model
                .clone()
                .or(file.model)
                .unwrap_or_else(|| DEFAULT_MODEL.into()),
            endpoint: args
                .endpoint
                .clone()
                .or(file.endpoint)
                .unwrap_or_else(|| DEFAULT_ENDPOINT.into()),
            max_tokens: args
                .max_tokens
                .or(file.max_tokens)
                .unwrap_or(defaults.max_tokens),
            timeout_secs: args
                .timeout
                .or(file.timeout)
                .unwrap_or(defaults.timeout_secs),
            retries: args.retries.or(file.retries).unwrap_or(defaults.retries),
            align_mode: args
                .align_mode
                .map(AlignMode::from)
                .or(file.align_mode)
                .unwrap_or_default(),
            gap: args.gap.or(file.gap).unwrap_or(DEFAULT_GAP),
            grid: args.grid.or(file.grid).unwrap_or(DEFAULT_GRID),
            kmeans_k: args
                .kmeans_k
                .or(file.kmeans_k)
                .unwrap_or(DEFAULT_CLUSTER_BUDGET),
            standardize: args.standardize || file.standardize.unwrap_or(false),
            clusters: args.clusters.or(file.clusters).unwrap_or(DEFAULT_CLUSTERS),
            target: args.target.or(file.target).unwrap_or(Target::Score),
            stub: args.stub || file.stub.unwrap_or(false),
            stub_responses: args.stub_responses.clone().or(file.stub_responses),
            workers: args
                .workers
                .or(file.workers)
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, usize::from)),
            heatmap_id: args.heatmap_id.clone().or(file.heatmap_id),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        match self.align_mode {
            AlignMode::Global if !(self.gap.is_finite() && self.gap >= 0.0) => {
                return bad(format!("--gap must be finite and >= 0, got {}", self.gap))
            }
            AlignMode::Local if !(self.gap.is_finite() && self.gap > 0.0) => {
                return bad(format!(
                    "--gap must be finite and > 0 in local mode, got {}",
                    self.gap
                ))
            }
            _ => {}
        }
        if self.grid < 2 {
            return bad(format!("--grid must be >= 2, got {}", self.grid));
        }
        if self.kmeans_k == 0 {
            return bad("--kmeans-k must be >= 1".into());
        }
        if self.clusters == 0 {
            return bad("--clusters must be >= 1".into());
        }
        if self.workers == 0 {
            return bad("--workers must be >= 1".into());
        }
        Ok(())
    }

    pub fn endpoint_config(&self) -> EndpointConfig {
        EndpointConfig {
            base_url: self.endpoint.clone(),
            model_name: self.model.clone(),
            temperature: 0.0,
            max_tokens: self.max_tokens,
            timeout_secs: self.timeout_secs,
            retries: self.retries,
        }
    }

    /// Settings that determine a stage's outputs. A stage whose snapshot is
    /// unchanged since its last successful run is not recomputed.
    pub fn snapshot(&self, stage: Stage) -> Value {
        match stage {
            Stage::Generate => json!({
                "corpus": self.corpus,
                "model": self.model,
                "max_tokens": self.max_tokens,
                "temperature": 0.0,
                "stub": self.stub,
                "stub_responses": self.stub_responses,
            }),
            Stage::Segment => json!({}),
            Stage::Align => json!({"align_mode": self.align_mode, "gap": self.gap}),
            Stage::Tda => json!({"grid": self.grid, "maxdim": 1}),
            Stage::Graph => json!({"kmeans_k": self.kmeans_k, "seed": 0}),
            Stage::Stats => json!({
                "standardize": self.standardize,
                "clusters": self.clusters,
                "target": self.target,
            }),
            Stage::Report => json!({"heatmap_id": self.heatmap_id}),
        }
    }

    /// Every resolved setting, recorded in the manifest.
    pub fn full_snapshot(&self) -> Value {
        json!({
            "corpus": self.corpus,
            "model": self.model,
            "endpoint": self.endpoint,
            "max_tokens": self.max_tokens,
            "timeout": self.timeout_secs,
            "retries": self.retries,
            "align_mode": self.align_mode,
            "gap": self.gap,
            "grid": self.grid,
            "kmeans_k": self.kmeans_k,
            "standardize": self.standardize,
            "clusters": self.clusters,
            "target": self.target,
            "stub": self.stub,
            "stub_responses": self.stub_responses,
            "workers": self.workers,
            "heatmap_id": self.heatmap_id,
        })
    }
}
