//! End-to-end run: initialize, propagate, expand, assemble.

use std::time::Instant;

use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::expansion::{resolve_seeds, seeds_expansion, ExpansionError, ExpansionIndex};
use crate::export::{units_document, RunReport, UnitsDocument};
use crate::graph::{GraphError, PropertyGraph};
use crate::graphunits::{assemble, GraphUnit};
use crate::interest::{initialize, InterestError, InterestState};
use crate::io::IngestError;
use crate::propagation::{interest_propagation, PropagatedInterest};
use crate::scalar::Scalar;

/// Pipeline failure, tagged with the stage that produced it.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("load: {0}")]
    Ingest(#[from] IngestError),
    #[error("initialize: {0}")]
    Interest(#[from] InterestError),
    #[error("expand: {0}")]
    Expansion(#[from] ExpansionError),
    #[error("graphunits: {0}")]
    Graph(#[from] GraphError),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

impl PipelineError {
    pub fn stage(&self) -> &'static str {
        match self {
            PipelineError::Config(_) => "config",
            PipelineError::Ingest(_) => "load",
            PipelineError::Interest(_) => "initialize",
            PipelineError::Expansion(_) => "expand",
            PipelineError::Graph(_) => "graphunits",
            PipelineError::ThreadPool(_) => "runtime",
        }
    }

    /// True for failures caused by resource limits rather than bad input.
    pub fn is_resource(&self) -> bool {
        matches!(
            self,
            PipelineError::Expansion(ExpansionError::BudgetExceeded { .. }) | PipelineError::ThreadPool(_)
        )
    }
}

#[derive(Clone, Debug)]
pub struct PipelineOutput<S> {
    pub state: InterestState<S>,
    pub propagated: PropagatedInterest<S>,
    pub index: ExpansionIndex<S>,
    pub units: Vec<GraphUnit>,
    pub report: RunReport,
}

impl<S: Scalar> PipelineOutput<S> {
    pub fn document(&self, graph: &PropertyGraph) -> UnitsDocument {
        units_document(graph, &self.units, &self.propagated.scores, &self.state.edge_scores)
    }
}

fn millis(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Runs `f` on a pool with `threads` workers, or on the global pool.
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R, PipelineError> {
    match threads {
        None => Ok(f()),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| PipelineError::ThreadPool(e.to_string())),
    }
}

/// Expansion and assembly from already propagated scores.
pub fn expand_and_assemble<S: Scalar>(
    graph: &PropertyGraph,
    propagated: &PropagatedInterest<S>,
    config: &RunConfig,
    report: &mut RunReport,
) -> Result<(ExpansionIndex<S>, Vec<GraphUnit>), PipelineError> {
    let seeds = resolve_seeds(graph, &config.seeds)?;
    let t = Instant::now();
    let index = seeds_expansion(graph, propagated, &seeds, &config.expansion())?;
    report.stage_millis.insert("expand".into(), millis(t));
    let t = Instant::now();
    let units = assemble(graph, &index, config.edge_mode)?;
    report.stage_millis.insert("graphunits".into(), millis(t));
    report.seeds = seeds.len();
    report.expansion = index.stats();
    report.unit_sizes = units
        .iter()
        .map(|u| (graph.id_of(u.seed).to_string(), u.nodes.len()))
        .collect();
    Ok((index, units))
}

/// All four stages on a loaded graph, honoring `config.threads`.
pub fn run_pipeline<S: Scalar>(graph: &PropertyGraph, config: &RunConfig) -> Result<PipelineOutput<S>, PipelineError> {
    config.validate()?;
    with_threads(config.threads, || run_stages(graph, config))?
}

fn run_stages<S: Scalar>(graph: &PropertyGraph, config: &RunConfig) -> Result<PipelineOutput<S>, PipelineError> {
    // unknown seeds are reported before any scoring work
    resolve_seeds(graph, &config.seeds)?;
    let mut report = RunReport {
        node_count: graph.node_count(),
        edge_count: graph.edge_count(),
        ..RunReport::default()
    };
    let t = Instant::now();
    let state = initialize::<S>(graph, &config.vudie, &config.ludie)?;
    report.stage_millis.insert("initialize".into(), millis(t));
    report.warnings = state.warnings.len();
    let t = Instant::now();
    let propagated = interest_propagation(graph, &state, &config.propagation())?;
    report.stage_millis.insert("propagate".into(), millis(t));
    let (index, units) = expand_and_assemble(graph, &propagated, config, &mut report)?;
    Ok(PipelineOutput {
        state,
        propagated,
        index,
        units,
        report,
    })
}
