//! Reference implementations and generators shared by the integration tests.
//!
//! The oracles below are deliberately naive: they work from the raw edge list
//! and recompute everything from definitions, without the engine's indexes.
#![allow(dead_code)]

use std::collections::BTreeSet;

use gudie::graph::{Node, NodeIx, NodeType, PropertyGraph, Transaction, TransactionRecord};
use gudie::{Aggregator, Decay};
use rand::Rng;

/// Random simple graph with `n` nodes and edge probability `p`; every edge
/// carries 1..=3 random transactions.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize, p: f64) -> PropertyGraph {
    let nodes: Vec<Node> = (0..n)
        .map(|i| {
            let t = NodeType::ALL[rng.gen_range(0..NodeType::ALL.len())];
            Node::new(format!("v{i:02}"), t)
        })
        .collect();
    let mut records = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(p) {
                for _ in 0..rng.gen_range(1..=3) {
                    let tx = Transaction::new(
                        1_000_000 + rng.gen_range(0..5_000_000u64),
                        (rng.gen_range(0..100_000) as f64) / 100.0,
                        rng.gen_bool(0.2),
                    );
                    let (s, d) = if rng.gen_bool(0.5) { (a, b) } else { (b, a) };
                    records.push(TransactionRecord::new(format!("v{s:02}"), format!("v{d:02}"), tx));
                }
            }
        }
    }
    PropertyGraph::build(nodes, records).expect("generated graph is valid")
}

pub fn random_unit_vec<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len)
        .map(|_| match rng.gen_range(0..10) {
            0 => 0.0,
            1 => 1.0,
            _ => rng.gen::<f64>(),
        })
        .collect()
}

/// Undirected edge list `(a, b, edge_score)` with `a < b`, read straight from the graph.
pub fn edge_list(g: &PropertyGraph, edge_scores: &[f64]) -> Vec<(usize, usize, f64)> {
    g.edges()
        .iter()
        .zip(edge_scores)
        .map(|(e, &s)| {
            let (a, b) = e.endpoints();
            (a.index().min(b.index()), a.index().max(b.index()), s)
        })
        .collect()
}

/// Direct simulation of h supersteps from the definitions.
pub fn naive_propagation(
    n: usize,
    edges: &[(usize, usize, f64)],
    initial: &[f64],
    h: usize,
    aggregator: Aggregator,
) -> Vec<f64> {
    let mut cur = initial.to_vec();
    for _ in 0..h {
        let mut next = vec![0.0; n];
        for v in 0..n {
            let mut msgs = Vec::new();
            for (u, &cu) in cur.iter().enumerate() {
                for &(a, b, s) in edges {
                    if (a == u && b == v) || (a == v && b == u) {
                        msgs.push(cu * s);
                    }
                }
            }
            next[v] = if msgs.is_empty() {
                cur[v]
            } else {
                let pooled = match aggregator {
                    Aggregator::MeanBlend => msgs.iter().sum::<f64>() / msgs.len() as f64,
                    Aggregator::MaxBlend => msgs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                    Aggregator::MinBlend => msgs.iter().cloned().fold(f64::INFINITY, f64::min),
                };
                cur[v] / 2.0 + pooled / 2.0
            };
        }
        cur = next;
    }
    cur
}

fn decay_factor(decay: Decay, len: usize) -> f64 {
    match decay {
        Decay::Reciprocal => 1.0 / len as f64,
        Decay::Exponential => (1.0 - len as f64).exp(),
    }
}

/// Every simple path from each seed, enumerated without pruning, then kept
/// iff each of its extension steps passes the decayed-interest test.
pub fn brute_expansions(
    n: usize,
    edges: &[(usize, usize, f64)],
    scores: &[f64],
    seeds: &[usize],
    k: f64,
    decay: Decay,
) -> BTreeSet<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b, _) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut all = Vec::new();
    for &s in seeds {
        let mut stack = vec![vec![s]];
        while let Some(path) = stack.pop() {
            let last = *path.last().unwrap();
            for &m in &adj[last] {
                if !path.contains(&m) {
                    let mut p = path.clone();
                    p.push(m);
                    stack.push(p);
                }
            }
            all.push(path);
        }
    }
    all.into_iter()
        .filter(|p| {
            let delta = scores[p[0]] * k;
            (1..p.len()).all(|i| decay_factor(decay, i) * scores[p[i]] >= delta)
        })
        .collect()
}

pub fn to_usize_paths(paths: Vec<Vec<NodeIx>>) -> BTreeSet<Vec<usize>> {
    paths
        .into_iter()
        .map(|p| p.into_iter().map(NodeIx::index).collect())
        .collect()
}
