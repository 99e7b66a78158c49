//! Problem configuration read from a single JSON document.
//!
//! ```json
//! {
//!   "schema": 1,
//!   "graph": { "lengths": [1.0, 1.0, 1.0], "delta0": 1.0 },
//!   "bc": { "builder": "kirchhoff_zero_mode" },
//!   "scan": { "e_min": 1.01, "e_max": 5.0, "grid_points": 2000, "tol": 1e-8 },
//!   "output": { "path": "spectrum.csv", "points_per_bond": 64 }
//! }
//! ```
//!
//! `bc` may instead hold inline matrices,
//! `{ "n_bonds": N, "A": [[[re, im], ...], ...], "B": [...] }`.
//! `scan` is required by `spectrum` only; `output` is optional everywhere.

use std::path::{Path, PathBuf};

use bdg_core::secular::DEFAULT_TOL;
use bdg_core::{build_kirchhoff_zero_mode_bc, BoundaryConditionPair, MetricStarGraph, ScanOptions};
use serde::Deserialize;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_POINTS_PER_BOND: usize = 64;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub schema: u32,
    pub graph: GraphSpec,
    pub bc: BcSpec,
    #[serde(default)]
    pub scan: Option<ScanSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub lengths: Vec<f64>,
    pub delta0: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum BcSpec {
    Builder { builder: String },
    Inline(BoundaryConditionPair),
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub e_min: f64,
    pub e_max: f64,
    pub grid_points: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Write machine output here instead of stdout.
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub points_per_bond: Option<usize>,
}

/// A configuration with its physical objects built and checked.
#[derive(Debug, Clone)]
pub struct Problem {
    pub graph: MetricStarGraph,
    pub bc: BoundaryConditionPair,
    pub scan: Option<ScanOptions>,
    pub output: OutputSpec,
}

impl Problem {
    pub fn scan(&self) -> Result<ScanOptions, CliError> {
        self.scan.ok_or_else(|| CliError::Usage("config has no \"scan\" section".into()))
    }

    pub fn points_per_bond(&self) -> usize {
        self.output.points_per_bond.unwrap_or(DEFAULT_POINTS_PER_BOND)
    }
}

pub fn parse(text: &str) -> Result<Problem, CliError> {
    let cfg: ProblemConfig =
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("invalid config: {e}")))?;
    cfg.build()
}

pub fn load(path: &Path) -> Result<Problem, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

impl ProblemConfig {
    pub fn build(self) -> Result<Problem, CliError> {
        if self.schema != SCHEMA_VERSION {
            return Err(CliError::Usage(format!(
                "unsupported schema {} (expected {SCHEMA_VERSION})",
                self.schema
            )));
        }
        let graph = MetricStarGraph::new(self.graph.lengths, self.graph.delta0)
            .map_err(|e| CliError::Usage(format!("invalid graph: {e}")))?;
        let bc = match self.bc {
            BcSpec::Builder { builder } => match builder.as_str() {
                "kirchhoff_zero_mode" => build_kirchhoff_zero_mode_bc(graph.n_bonds())
                    .map_err(|e| CliError::Usage(format!("invalid bc: {e}")))?,
                other => return Err(CliError::Usage(format!("unknown bc builder {other:?}"))),
            },
            BcSpec::Inline(pair) => pair,
        };
        if bc.n_bonds() != graph.n_bonds() {
            return Err(CliError::Usage(format!(
                "bc is for {} bonds but the graph has {}",
                bc.n_bonds(),
                graph.n_bonds()
            )));
        }
        let scan = self
            .scan
            .map(|s| {
                let opts = ScanOptions::new(s.e_min, s.e_max, s.grid_points).with_tol(s.tol);
                opts.check().map(|_| opts).map_err(|e| CliError::Usage(format!("invalid scan: {e}")))
            })
            .transpose()?;
        if self.output.points_per_bond == Some(0) {
            return Err(CliError::Usage("points_per_bond must be positive".into()));
        }
        Ok(Problem { graph, bc, scan, output: self.output })
    }
}
