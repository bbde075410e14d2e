//! Bulk-synchronous interest propagation.
//!
//! Each superstep every node sends `φ(I_n, I_{n,m}) = I_n · I_{n,m}` along
//! each incident edge, then blends its previous score with the received pool
//! using the configured aggregator. Messages only ever come from the previous
//! superstep's scores.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph::PropertyGraph;
use crate::interest::{InterestError, InterestState};
use crate::scalar::Scalar;

/// Message value sent from a node across an edge.
#[inline]
pub fn phi<S: Scalar>(sender_interest: S, edge_interest: S) -> S {
    sender_interest * edge_interest
}

/// `previous/2 + mean(messages)/2`; an empty pool keeps `previous`.
pub fn gamma_mean_blend<S: Scalar>(previous: S, messages: &[S]) -> S {
    Aggregator::MeanBlend.aggregate(previous, messages)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregator {
    #[default]
    MeanBlend,
    MaxBlend,
    MinBlend,
}

impl Aggregator {
    pub fn aggregate<S: Scalar>(self, previous: S, messages: &[S]) -> S {
        let Some((&first, rest)) = messages.split_first() else {
            return previous;
        };
        let pooled = match self {
            Aggregator::MeanBlend => {
                let sum = rest.iter().fold(first, |acc, &m| acc + m);
                sum / S::of_usize(messages.len())
            }
            Aggregator::MaxBlend => rest.iter().fold(first, |acc, &m| acc.max(m)),
            Aggregator::MinBlend => rest.iter().fold(first, |acc, &m| acc.min(m)),
        };
        previous * S::half() + pooled * S::half()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Aggregator::MeanBlend => "mean_blend",
            Aggregator::MaxBlend => "max_blend",
            Aggregator::MinBlend => "min_blend",
        }
    }
}

impl fmt::Display for Aggregator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Aggregator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mean_blend" | "mean" => Ok(Aggregator::MeanBlend),
            "max_blend" | "max" => Ok(Aggregator::MaxBlend),
            "min_blend" | "min" => Ok(Aggregator::MinBlend),
            _ => Err(format!("unknown aggregator `{s}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropagationParams {
    pub hops: usize,
    pub aggregator: Aggregator,
}

impl Default for PropagationParams {
    fn default() -> Self {
        PropagationParams {
            hops: 5,
            aggregator: Aggregator::MeanBlend,
        }
    }
}

/// Received messages of one superstep, stored contiguously per node.
///
/// The pool of node `n` holds one message per incident edge, ordered by
/// ascending sender index.
#[derive(Clone, Debug)]
pub struct MessagePool<S> {
    offsets: Vec<usize>,
    values: Vec<S>,
}

impl<S: Scalar> MessagePool<S> {
    pub fn for_graph(graph: &PropertyGraph) -> Self {
        let mut offsets = Vec::with_capacity(graph.node_count() + 1);
        offsets.push(0);
        let mut total = 0;
        for n in graph.node_ids() {
            total += graph.degree(n);
            offsets.push(total);
        }
        MessagePool {
            offsets,
            values: vec![S::zero(); total],
        }
    }

    pub fn messages(&self, node: usize) -> &[S] {
        &self.values[self.offsets[node]..self.offsets[node + 1]]
    }

    /// Send phase: fills every pool from `scores` of the previous superstep.
    pub fn exchange(&mut self, graph: &PropertyGraph, scores: &[S], edge_scores: &[S]) {
        let offsets = &self.offsets;
        let mut chunks: Vec<&mut [S]> = Vec::with_capacity(graph.node_count());
        let mut rest = self.values.as_mut_slice();
        for n in 0..graph.node_count() {
            let (head, tail) = rest.split_at_mut(offsets[n + 1] - offsets[n]);
            chunks.push(head);
            rest = tail;
        }
        chunks.into_par_iter().enumerate().for_each(|(n, inbox)| {
            let adj = graph.neighbors(crate::graph::NodeIx::new(n));
            for (slot, &(sender, edge)) in inbox.iter_mut().zip(adj) {
                *slot = phi(scores[sender.index()], edge_scores[edge.index()]);
            }
        });
    }
}

/// Node scores after `hops` supersteps.
#[derive(Clone, Debug, PartialEq)]
pub struct PropagatedInterest<S> {
    pub scores: Vec<S>,
    pub hops: usize,
}

impl<S: Scalar> PropagatedInterest<S> {
    pub fn score(&self, n: crate::graph::NodeIx) -> S {
        self.scores[n.index()]
    }

    pub fn max_score(&self) -> S {
        self.scores.iter().copied().fold(S::zero(), S::max)
    }
}

/// Runs `params.hops` bulk-synchronous supersteps starting from the initial node scores.
pub fn interest_propagation<S: Scalar>(
    graph: &PropertyGraph,
    state: &InterestState<S>,
    params: &PropagationParams,
) -> Result<PropagatedInterest<S>, InterestError> {
    state.check_bound(graph)?;
    let mut current = state.node_scores.clone();
    let mut next = current.clone();
    let mut pool = MessagePool::for_graph(graph);
    for _ in 0..params.hops {
        pool.exchange(graph, &current, &state.edge_scores);
        // barrier: all pools are filled before any score changes
        let pool_ref = &pool;
        let prev = &current;
        next.par_iter_mut().enumerate().for_each(|(n, out)| {
            *out = params.aggregator.aggregate(prev[n], pool_ref.messages(n));
        });
        std::mem::swap(&mut current, &mut next);
    }
    Ok(PropagatedInterest {
        scores: current,
        hops: params.hops,
    })
}
