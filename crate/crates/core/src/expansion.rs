//! Per-seed expansion search.
//!
//! Starting from `[seed]`, a path is extended to a neighbor `m` not already on
//! it when `(1 − θ(path)) · I_m ≥ δ`, with `δ = I_seed · k`. The decay θ is
//! evaluated on the path before `m` is appended. Iteration proceeds in
//! frontiers until a round stores nothing new.
//!
//! Paths are stored in an arena of parent pointers: each stored expansion
//! records its last node and the expansion it extends.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{NodeIx, PropertyGraph};
use crate::propagation::PropagatedInterest;
use crate::scalar::Scalar;

pub const DEFAULT_BUDGET: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExpansionError {
    #[error("decay is undefined on an empty path")]
    EmptyPath,
    #[error("unknown seed `{0}`")]
    UnknownSeed(String),
    #[error("interest threshold {0} is outside [0, 1]")]
    InvalidThreshold(f64),
    #[error("expansion budget of {budget} stored expansions exceeded while expanding seed `{seed}`")]
    BudgetExceeded { seed: String, budget: usize },
    #[error("{scores} propagated scores for {nodes} nodes")]
    Binding { scores: usize, nodes: usize },
    #[error("inconsistent expansion trace: {0}")]
    Trace(String),
}

/// Distance decay θ.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decay {
    /// θ(L) = 1 − |L|⁻¹
    Reciprocal,
    /// θ(L) = 1 − e^{1−|L|}
    #[default]
    Exponential,
}

impl Decay {
    /// Multiplicative factor `1 − θ` for a path of `len` nodes (`len >= 1`).
    #[inline]
    pub fn factor<S: Scalar>(self, len: usize) -> S {
        match self {
            Decay::Reciprocal => S::one() / S::of_usize(len),
            Decay::Exponential => (S::one() - S::of_usize(len)).exp(),
        }
    }

    pub fn theta<S: Scalar>(self, len: usize) -> S {
        S::one() - self.factor::<S>(len)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Decay::Reciprocal => "reciprocal",
            Decay::Exponential => "exponential",
        }
    }
}

impl fmt::Display for Decay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Decay {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "reciprocal" => Ok(Decay::Reciprocal),
            "exponential" => Ok(Decay::Exponential),
            _ => Err(format!("unknown decay `{s}`")),
        }
    }
}

/// θ of a path.
pub fn decay<S: Scalar>(choice: Decay, path: &[NodeIx]) -> Result<S, ExpansionError> {
    if path.is_empty() {
        return Err(ExpansionError::EmptyPath);
    }
    Ok(choice.theta(path.len()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathBound {
    Bounded(usize),
    Unbounded,
}

impl PathBound {
    pub fn allows(self, len: usize) -> bool {
        match self {
            PathBound::Bounded(max) => len <= max,
            PathBound::Unbounded => true,
        }
    }
}

/// Largest path length `L` with `(1 − θ(L)) · max_score ≥ delta`.
///
/// `Bounded(0)` means not even the seed alone qualifies; `delta <= 0` is unbounded.
pub fn max_reachable_path_length<S: Scalar>(choice: Decay, delta: S, max_score: S) -> PathBound {
    if delta <= S::zero() {
        return PathBound::Unbounded;
    }
    let ratio = (max_score / delta).as_f64();
    let estimate = match choice {
        Decay::Reciprocal => ratio.floor(),
        Decay::Exponential => (1.0 + ratio.ln()).floor(),
    };
    if !estimate.is_finite() || estimate > 1e12 {
        return PathBound::Unbounded;
    }
    let fits = |len: usize| len >= 1 && choice.factor::<S>(len) * max_score >= delta;
    let mut len = estimate.max(0.0) as usize;
    // the closed form can be off by one under rounding
    while len > 0 && !fits(len) {
        len -= 1;
    }
    while fits(len + 1) {
        len += 1;
    }
    PathBound::Bounded(len)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionParams<S> {
    /// Interest threshold k, relative to the seed's propagated interest.
    pub threshold: S,
    pub decay: Decay,
    /// Optional cap on stored path length (in nodes).
    pub max_path_length: Option<usize>,
    /// Maximum number of stored expansions over all seeds.
    pub budget: usize,
}

impl<S: Scalar> Default for ExpansionParams<S> {
    fn default() -> Self {
        ExpansionParams {
            threshold: S::of(0.7),
            decay: Decay::Exponential,
            max_path_length: None,
            budget: DEFAULT_BUDGET,
        }
    }
}

/// A simple path from a seed together with the seed's admissibility floor δ.
#[derive(Clone, Debug, PartialEq)]
pub struct Expansion<S> {
    pub min_interest: S,
    pub path: Vec<NodeIx>,
}

impl<S: Scalar> Expansion<S> {
    pub fn seed(&self) -> NodeIx {
        self.path[0]
    }
}

/// Whether `g` may be extended to `candidate`.
pub fn admissible<S: Scalar>(
    g: &Expansion<S>,
    candidate: NodeIx,
    scores: &PropagatedInterest<S>,
    choice: Decay,
) -> bool {
    !g.path.contains(&candidate) && choice.factor::<S>(g.path.len()) * scores.score(candidate) >= g.min_interest
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExpansionId(u32);

impl ExpansionId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

const NO_PARENT: u32 = u32::MAX;

#[derive(Clone, Copy, Debug)]
struct Record {
    parent: u32,
    node: NodeIx,
    seed_slot: u32,
    len: u32,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeedExpansion<S> {
    pub seed: NodeIx,
    pub min_interest: S,
    pub bound: PathBound,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpansionStats {
    pub expansions: usize,
    pub iterations: usize,
    /// Candidates off the path that failed the decayed-interest test.
    pub pruned_candidates: usize,
}

/// All stored expansions, grouped by the node each one ends on.
#[derive(Clone, Debug)]
pub struct ExpansionIndex<S> {
    seeds: Vec<SeedExpansion<S>>,
    records: Vec<Record>,
    by_node: Vec<Vec<ExpansionId>>,
    stats: ExpansionStats,
}

impl<S: Scalar> ExpansionIndex<S> {
    pub fn seeds(&self) -> &[SeedExpansion<S>] {
        &self.seeds
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.by_node.len()
    }

    pub fn stats(&self) -> ExpansionStats {
        self.stats
    }

    pub fn ids(&self) -> impl Iterator<Item = ExpansionId> {
        (0..self.records.len() as u32).map(ExpansionId)
    }

    /// Expansions whose path ends on `n`.
    pub fn ids_at(&self, n: NodeIx) -> &[ExpansionId] {
        &self.by_node[n.index()]
    }

    pub fn seed_of(&self, id: ExpansionId) -> NodeIx {
        self.seeds[self.records[id.index()].seed_slot as usize].seed
    }

    pub fn path_len(&self, id: ExpansionId) -> usize {
        self.records[id.index()].len as usize
    }

    pub fn parent(&self, id: ExpansionId) -> Option<ExpansionId> {
        let p = self.records[id.index()].parent;
        (p != NO_PARENT).then_some(ExpansionId(p))
    }

    /// Nodes of the path, seed first.
    pub fn path(&self, id: ExpansionId) -> Vec<NodeIx> {
        let mut path = Vec::with_capacity(self.path_len(id));
        let mut cur = id.0;
        while cur != NO_PARENT {
            let rec = &self.records[cur as usize];
            path.push(rec.node);
            cur = rec.parent;
        }
        path.reverse();
        path
    }

    pub fn expansion(&self, id: ExpansionId) -> Expansion<S> {
        let slot = self.records[id.index()].seed_slot as usize;
        Expansion {
            min_interest: self.seeds[slot].min_interest,
            path: self.path(id),
        }
    }

    pub fn expansions_at(&self, n: NodeIx) -> Vec<Expansion<S>> {
        self.ids_at(n).iter().map(|&id| self.expansion(id)).collect()
    }

    /// Every stored path, in storage order.
    pub fn paths(&self) -> Vec<Vec<NodeIx>> {
        self.ids().map(|id| self.path(id)).collect()
    }

    /// Rebuilds an index from stored paths, e.g. a saved trace. Every path
    /// must start at a listed seed and its prefix must appear before it.
    pub fn from_paths(node_count: usize, seeds: &[(NodeIx, S)], paths: &[Vec<NodeIx>]) -> Result<Self, ExpansionError> {
        let mut index = ExpansionIndex {
            seeds: seeds
                .iter()
                .map(|&(seed, min_interest)| SeedExpansion {
                    seed,
                    min_interest,
                    bound: PathBound::Unbounded,
                })
                .collect(),
            records: Vec::with_capacity(paths.len()),
            by_node: vec![Vec::new(); node_count],
            stats: ExpansionStats::default(),
        };
        let mut ids: HashMap<&[NodeIx], u32> = HashMap::with_capacity(paths.len());
        for path in paths {
            let (&last, prefix) = path
                .split_last()
                .ok_or_else(|| ExpansionError::Trace("empty path".into()))?;
            if last.index() >= node_count {
                return Err(ExpansionError::Trace(format!("node #{} out of range", last.index())));
            }
            let slot =
                index.seeds.iter().position(|s| s.seed == path[0]).ok_or_else(|| {
                    ExpansionError::Trace(format!("path starts at unlisted seed #{}", path[0].index()))
                })?;
            let parent = if prefix.is_empty() {
                NO_PARENT
            } else {
                *ids.get(prefix)
                    .ok_or_else(|| ExpansionError::Trace("path appears before its prefix".into()))?
            };
            let id = index.records.len() as u32;
            if ids.insert(path.as_slice(), id).is_some() {
                return Err(ExpansionError::Trace("duplicate path".into()));
            }
            index.records.push(Record {
                parent,
                node: last,
                seed_slot: slot as u32,
                len: path.len() as u32,
            });
            index.by_node[last.index()].push(ExpansionId(id));
        }
        index.stats.expansions = index.records.len();
        Ok(index)
    }
}

/// Resolves string seed ids, dropping repeats while keeping first-seen order.
pub fn resolve_seeds(graph: &PropertyGraph, seeds: &[impl AsRef<str>]) -> Result<Vec<NodeIx>, ExpansionError> {
    let mut out: Vec<NodeIx> = Vec::with_capacity(seeds.len());
    for s in seeds {
        let n = graph
            .node_ix(s.as_ref())
            .ok_or_else(|| ExpansionError::UnknownSeed(s.as_ref().to_string()))?;
        if !out.contains(&n) {
            out.push(n);
        }
    }
    Ok(out)
}

/// Grows all admissible simple paths from each seed.
pub fn seeds_expansion<S: Scalar>(
    graph: &PropertyGraph,
    scores: &PropagatedInterest<S>,
    seeds: &[NodeIx],
    params: &ExpansionParams<S>,
) -> Result<ExpansionIndex<S>, ExpansionError> {
    if scores.scores.len() != graph.node_count() {
        return Err(ExpansionError::Binding {
            scores: scores.scores.len(),
            nodes: graph.node_count(),
        });
    }
    if !params.threshold.is_unit() {
        return Err(ExpansionError::InvalidThreshold(params.threshold.as_f64()));
    }
    let max_score = scores.max_score();

    let mut index = ExpansionIndex {
        seeds: Vec::with_capacity(seeds.len()),
        records: Vec::new(),
        by_node: vec![Vec::new(); graph.node_count()],
        stats: ExpansionStats::default(),
    };
    let mut frontier: Vec<u32> = Vec::with_capacity(seeds.len());
    for &s in seeds {
        if !graph.contains(s) {
            return Err(ExpansionError::UnknownSeed(format!("#{}", s.index())));
        }
        if index.seeds.iter().any(|e| e.seed == s) {
            continue;
        }
        if index.records.len() >= params.budget {
            return Err(ExpansionError::BudgetExceeded {
                seed: graph.id_of(s).to_string(),
                budget: params.budget,
            });
        }
        let min_interest = scores.score(s) * params.threshold;
        let slot = index.seeds.len() as u32;
        index.seeds.push(SeedExpansion {
            seed: s,
            min_interest,
            bound: max_reachable_path_length(params.decay, min_interest, max_score),
        });
        let id = index.records.len() as u32;
        index.records.push(Record {
            parent: NO_PARENT,
            node: s,
            seed_slot: slot,
            len: 1,
        });
        index.by_node[s.index()].push(ExpansionId(id));
        frontier.push(id);
    }

    // Each stored expansion is extended exactly once, in the round after it
    // was created; a new path therefore has a unique parent and is never
    // generated twice.
    while !frontier.is_empty() {
        index.stats.iterations += 1;
        let extensions: Vec<(Vec<NodeIx>, usize)> = frontier
            .par_iter()
            .map(|&id| extend(graph, scores, &index, ExpansionId(id), params))
            .collect();

        let mut next = Vec::new();
        for (&parent, (children, pruned)) in frontier.iter().zip(extensions) {
            index.stats.pruned_candidates += pruned;
            let parent_rec = index.records[parent as usize];
            for m in children {
                if index.records.len() >= params.budget {
                    let seed = index.seeds[parent_rec.seed_slot as usize].seed;
                    return Err(ExpansionError::BudgetExceeded {
                        seed: graph.id_of(seed).to_string(),
                        budget: params.budget,
                    });
                }
                let id = index.records.len() as u32;
                index.records.push(Record {
                    parent,
                    node: m,
                    seed_slot: parent_rec.seed_slot,
                    len: parent_rec.len + 1,
                });
                index.by_node[m.index()].push(ExpansionId(id));
                next.push(id);
            }
        }
        frontier = next;
    }
    index.stats.expansions = index.records.len();
    Ok(index)
}

fn extend<S: Scalar>(
    graph: &PropertyGraph,
    scores: &PropagatedInterest<S>,
    index: &ExpansionIndex<S>,
    id: ExpansionId,
    params: &ExpansionParams<S>,
) -> (Vec<NodeIx>, usize) {
    let rec = index.records[id.index()];
    let len = rec.len as usize;
    if params.max_path_length.is_some_and(|cap| len >= cap) {
        return (Vec::new(), 0);
    }
    let seed = &index.seeds[rec.seed_slot as usize];
    let neighbors = graph.neighbors(rec.node);
    let path = index.path(id);
    if !seed.bound.allows(len) {
        // no candidate can clear δ at this length
        let pruned = neighbors.iter().filter(|(m, _)| !path.contains(m)).count();
        return (Vec::new(), pruned);
    }
    let factor = params.decay.factor::<S>(len);
    let mut children = Vec::new();
    let mut pruned = 0;
    for &(m, _) in neighbors {
        if path.contains(&m) {
            continue;
        }
        if factor * scores.score(m) >= seed.min_interest {
            children.push(m);
        } else {
            pruned += 1;
        }
    }
    (children, pruned)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Node, NodeType, Transaction, TransactionRecord};

    fn graph(n: usize, edges: &[(usize, usize)]) -> PropertyGraph {
        let nodes = (0..n).map(|i| Node::new(format!("n{i}"), NodeType::Generic)).collect();
        let recs = edges
            .iter()
            .map(|&(a, b)| TransactionRecord::new(format!("n{a}"), format!("n{b}"), Transaction::new(0, 1.0, false)));
        PropertyGraph::build(nodes, recs).unwrap()
    }

    fn scores(v: Vec<f64>) -> PropagatedInterest<f64> {
        PropagatedInterest { scores: v, hops: 0 }
    }

    #[test]
    fn decay_values() {
        let one = [NodeIx::new(0)];
        assert_eq!(decay::<f64>(Decay::Reciprocal, &one).unwrap(), 0.0);
        assert_eq!(decay::<f64>(Decay::Exponential, &one).unwrap(), 0.0);
        let three = [NodeIx::new(0), NodeIx::new(1), NodeIx::new(2)];
        let t: f64 = decay(Decay::Exponential, &three).unwrap();
        assert!((t - 0.8646647167633873).abs() < 1e-12);
        assert_eq!(decay::<f64>(Decay::Reciprocal, &[]), Err(ExpansionError::EmptyPath));
    }

    #[test]
    fn admissibility() {
        let s = scores(vec![1.0, 0.9, 0.9]);
        let g = Expansion {
            min_interest: 0.3,
            path: vec![NodeIx::new(0), NodeIx::new(1)],
        };
        assert!(admissible(&g, NodeIx::new(2), &s, Decay::Exponential));
        assert!(!admissible(&g, NodeIx::new(1), &s, Decay::Exponential));
        let strict = Expansion {
            min_interest: 0.34,
            ..g.clone()
        };
        assert!(!admissible(&strict, NodeIx::new(2), &s, Decay::Exponential));
        // first hop: factor is 1 for both choices
        let root = Expansion {
            min_interest: 0.9,
            path: vec![NodeIx::new(0)],
        };
        for d in [Decay::Reciprocal, Decay::Exponential] {
            assert!(admissible(&root, NodeIx::new(1), &s, d));
        }
    }

    #[test]
    fn path_bounds() {
        assert_eq!(
            max_reachable_path_length(Decay::Exponential, 0.6f64, 0.6),
            PathBound::Bounded(1)
        );
        assert_eq!(
            max_reachable_path_length(Decay::Reciprocal, 0.25f64, 1.0),
            PathBound::Bounded(4)
        );
        assert_eq!(
            max_reachable_path_length(Decay::Exponential, 0.1f64, 1.0),
            PathBound::Bounded(3)
        );
        assert_eq!(
            max_reachable_path_length(Decay::Exponential, 0.0f64, 1.0),
            PathBound::Unbounded
        );
        // scan oracle
        for (d, delta) in [
            (Decay::Reciprocal, 0.13f64),
            (Decay::Exponential, 0.013),
            (Decay::Reciprocal, 0.5),
        ] {
            let scanned = (1..200).filter(|&l| d.factor::<f64>(l) >= delta).max().unwrap();
            assert_eq!(max_reachable_path_length(d, delta, 1.0), PathBound::Bounded(scanned));
        }
    }

    #[test]
    fn isolated_seed() {
        let g = graph(2, &[]);
        let idx = seeds_expansion(
            &g,
            &scores(vec![1.0, 1.0]),
            &[NodeIx::new(0)],
            &ExpansionParams::default(),
        )
        .unwrap();
        assert_eq!(idx.paths(), vec![vec![NodeIx::new(0)]]);
        assert_eq!(idx.expansions_at(NodeIx::new(0))[0].min_interest, 0.7);
    }

    #[test]
    fn single_admissible_step() {
        let g = graph(2, &[(0, 1)]);
        let idx = seeds_expansion(
            &g,
            &scores(vec![1.0, 0.8]),
            &[NodeIx::new(0)],
            &ExpansionParams::default(),
        )
        .unwrap();
        assert_eq!(idx.len(), 2);
        assert_eq!(
            idx.expansions_at(NodeIx::new(1))[0].path,
            vec![NodeIx::new(0), NodeIx::new(1)]
        );
        let blocked = seeds_expansion(
            &g,
            &scores(vec![1.0, 0.6]),
            &[NodeIx::new(0)],
            &ExpansionParams::default(),
        )
        .unwrap();
        assert_eq!(blocked.len(), 1);
        assert_eq!(blocked.stats().pruned_candidates, 1);
    }

    #[test]
    fn budget_is_reported() {
        let g = graph(4, &[(0, 1), (1, 2), (2, 3), (0, 2), (1, 3), (0, 3)]);
        let params = ExpansionParams {
            threshold: 0.0,
            budget: 5,
            ..ExpansionParams::default()
        };
        let err = seeds_expansion(&g, &scores(vec![1.0; 4]), &[NodeIx::new(0)], &params).unwrap_err();
        assert_eq!(
            err,
            ExpansionError::BudgetExceeded {
                seed: "n0".into(),
                budget: 5
            }
        );
    }

    #[test]
    fn max_path_length_caps_paths() {
        let g = graph(4, &[(0, 1), (1, 2), (2, 3)]);
        let params = ExpansionParams {
            threshold: 0.0,
            max_path_length: Some(2),
            ..ExpansionParams::default()
        };
        let idx = seeds_expansion(&g, &scores(vec![1.0; 4]), &[NodeIx::new(0)], &params).unwrap();
        assert_eq!(idx.len(), 2);
    }

    #[test]
    fn unknown_seed() {
        let g = graph(2, &[]);
        assert_eq!(
            resolve_seeds(&g, &["n0", "zz"]),
            Err(ExpansionError::UnknownSeed("zz".into()))
        );
        assert_eq!(
            resolve_seeds(&g, &["n1", "n1", "n0"]).unwrap(),
            vec![NodeIx::new(1), NodeIx::new(0)]
        );
    }

    #[test]
    fn threshold_out_of_range() {
        let g = graph(1, &[]);
        let params = ExpansionParams {
            threshold: 1.5,
            ..ExpansionParams::default()
        };
        assert!(matches!(
            seeds_expansion(&g, &scores(vec![1.0]), &[NodeIx::new(0)], &params),
            Err(ExpansionError::InvalidThreshold(_))
        ));
    }
}
