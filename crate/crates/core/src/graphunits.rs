//! Assembly of per-seed GraphUnits from the expansion index.
//!
//! The map phase walks every node's stored expansions and emits
//! `(seed, path)`; the reduce phase unions the paths of each seed into a
//! node set. Edges are then filled in from the graph.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::expansion::ExpansionIndex;
use crate::graph::{EdgeIx, GraphError, NodeIx, PropertyGraph};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeMode {
    /// Every graph edge with both endpoints in the unit.
    #[default]
    Induced,
    /// Only edges between consecutive nodes of stored paths.
    PathEdges,
}

impl EdgeMode {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeMode::Induced => "induced",
            EdgeMode::PathEdges => "path_edges",
        }
    }
}

impl fmt::Display for EdgeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EdgeMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "induced" => Ok(EdgeMode::Induced),
            "path_edges" => Ok(EdgeMode::PathEdges),
            _ => Err(format!("unknown edge mode `{s}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphUnit {
    pub seed: NodeIx,
    pub nodes: BTreeSet<NodeIx>,
    pub edges: BTreeSet<EdgeIx>,
}

impl GraphUnit {
    pub fn new(seed: NodeIx) -> Self {
        GraphUnit {
            seed,
            nodes: BTreeSet::from([seed]),
            edges: BTreeSet::new(),
        }
    }

    /// True when every node is reachable from the seed over the unit's edges.
    pub fn is_connected(&self, graph: &PropertyGraph) -> bool {
        if !self.nodes.contains(&self.seed) {
            return false;
        }
        let mut seen = BTreeSet::from([self.seed]);
        let mut stack = vec![self.seed];
        while let Some(n) = stack.pop() {
            for &(m, e) in graph.neighbors(n) {
                if self.edges.contains(&e) && self.nodes.contains(&m) && seen.insert(m) {
                    stack.push(m);
                }
            }
        }
        seen.len() == self.nodes.len()
    }
}

/// Generic two-phase map-reduce: `map` emits keyed values per input, values
/// are grouped by key in key order, then `reduce` folds each group.
pub fn map_reduce<I, K, V, R, M, F>(inputs: Vec<I>, map: M, reduce: F) -> BTreeMap<K, R>
where
    I: Send,
    K: Ord + Send,
    V: Send,
    R: Send,
    M: Fn(I) -> Vec<(K, V)> + Sync + Send,
    F: Fn(&K, Vec<V>) -> R + Sync + Send,
{
    let emitted: Vec<Vec<(K, V)>> = inputs.into_par_iter().map(map).collect();
    let mut groups: BTreeMap<K, Vec<V>> = BTreeMap::new();
    for (k, v) in emitted.into_iter().flatten() {
        groups.entry(k).or_default().push(v);
    }
    let groups: Vec<(K, Vec<V>)> = groups.into_iter().collect();
    groups
        .into_par_iter()
        .map(|(k, vs)| {
            let r = reduce(&k, vs);
            (k, r)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

/// Node sets of every seed's GraphUnit (edges left empty).
pub fn obtain_graphunits<S: Scalar>(index: &ExpansionIndex<S>) -> BTreeMap<NodeIx, GraphUnit> {
    let nodes: Vec<NodeIx> = (0..index.node_count()).map(NodeIx::new).collect();
    map_reduce(
        nodes,
        |n| {
            index
                .ids_at(n)
                .iter()
                .map(|&id| (index.seed_of(id), index.path(id)))
                .collect()
        },
        |&seed, paths| {
            let mut unit = GraphUnit::new(seed);
            for path in paths {
                unit.nodes.extend(path);
            }
            unit
        },
    )
}

/// Fills `unit.edges` with every graph edge inside its node set.
pub fn induce(graph: &PropertyGraph, unit: &GraphUnit) -> Result<GraphUnit, GraphError> {
    if let Some(n) = unit.nodes.iter().find(|n| !graph.contains(**n)) {
        return Err(GraphError::IndexOutOfRange(n.index()));
    }
    let mut out = unit.clone();
    out.edges.clear();
    for &n in &unit.nodes {
        for &(m, e) in graph.neighbors(n) {
            if n < m && unit.nodes.contains(&m) {
                out.edges.insert(e);
            }
        }
    }
    Ok(out)
}

fn path_edges<S: Scalar>(graph: &PropertyGraph, index: &ExpansionIndex<S>) -> BTreeMap<NodeIx, BTreeSet<EdgeIx>> {
    let mut out: BTreeMap<NodeIx, BTreeSet<EdgeIx>> = BTreeMap::new();
    for id in index.ids() {
        let Some(parent) = index.parent(id) else {
            continue;
        };
        let path = index.path(id);
        let (a, b) = (path[path.len() - 2], path[path.len() - 1]);
        debug_assert_eq!(index.path_len(parent) + 1, path.len());
        if let Some(e) = graph.edge_between(a, b) {
            out.entry(index.seed_of(id)).or_default().insert(e);
        }
    }
    out
}

/// Complete GraphUnits, one per seed in seed order.
pub fn assemble<S: Scalar>(
    graph: &PropertyGraph,
    index: &ExpansionIndex<S>,
    mode: EdgeMode,
) -> Result<Vec<GraphUnit>, GraphError> {
    let mut units = obtain_graphunits(index);
    let mut path_edges = match mode {
        EdgeMode::PathEdges => path_edges(graph, index),
        EdgeMode::Induced => BTreeMap::new(),
    };
    index
        .seeds()
        .iter()
        .map(|s| {
            let unit = units.remove(&s.seed).unwrap_or_else(|| GraphUnit::new(s.seed));
            match mode {
                EdgeMode::Induced => induce(graph, &unit),
                EdgeMode::PathEdges => Ok(GraphUnit {
                    edges: path_edges.remove(&s.seed).unwrap_or_default(),
                    ..unit
                }),
            }
        })
        .collect()
}
