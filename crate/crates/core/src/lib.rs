//! Interest-driven subgraph extraction around seed nodes of a property graph.
//!
//! Each node and edge gets an initial interest score; node interest is then
//! propagated for `h` bulk-synchronous hops; from every seed, simple paths are
//! grown while the decayed interest of the next node clears the seed's
//! threshold; the union of each seed's paths is its GraphUnit.
//!
//! All numeric stages are generic over [`Scalar`] (`f32` or `f64`).

pub mod config;
pub mod expansion;
pub mod export;
pub mod fixtures;
pub mod graph;
pub mod graphunits;
pub mod interest;
pub mod io;
pub mod pipeline;
pub mod propagation;
pub mod scalar;

pub use config::{ConfigError, RunConfig};
pub use expansion::{
    decay, max_reachable_path_length, resolve_seeds, seeds_expansion, Decay, Expansion, ExpansionError, ExpansionId,
    ExpansionIndex, ExpansionParams, ExpansionStats, PathBound,
};
pub use export::{RunReport, UnitEdge, UnitNode, UnitView, UnitsDocument};
pub use graph::{Edge, EdgeIx, GraphError, Node, NodeIx, NodeType, PropertyGraph, Transaction, TransactionRecord};
pub use graphunits::{assemble, obtain_graphunits, EdgeMode, GraphUnit};
pub use interest::{
    initialize, EdgeInterest, EdgeInterestSpec, InterestError, InterestState, NodeInterest, NodeInterestSpec,
};
pub use io::{load_graph, load_graph_dir, save_graph, save_graph_dir, IngestError};
pub use pipeline::{run_pipeline, PipelineError, PipelineOutput};
pub use propagation::{interest_propagation, Aggregator, PropagatedInterest, PropagationParams};
pub use scalar::Scalar;

pub type InterestState64 = InterestState<f64>;
pub type PropagatedInterest64 = PropagatedInterest<f64>;
pub type ExpansionIndex64 = ExpansionIndex<f64>;
pub type ExpansionParams64 = ExpansionParams<f64>;
pub type Expansion64 = Expansion<f64>;
pub type PipelineOutput64 = PipelineOutput<f64>;

pub type InterestState32 = InterestState<f32>;
pub type PropagatedInterest32 = PropagatedInterest<f32>;
pub type ExpansionIndex32 = ExpansionIndex<f32>;
pub type ExpansionParams32 = ExpansionParams<f32>;
pub type Expansion32 = Expansion<f32>;
pub type PipelineOutput32 = PipelineOutput<f32>;
