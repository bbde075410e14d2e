mod common;

use std::collections::BTreeSet;

use common::*;
use gudie::expansion::{seeds_expansion, ExpansionParams};
use gudie::fixtures::make_example;
use gudie::graph::NodeIx;
use gudie::interest::InterestState;
use gudie::{
    interest_propagation, obtain_graphunits, Aggregator, Decay, PropagatedInterest, PropagationParams, PropertyGraph,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn expansion_matches_exhaustive_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut mismatches = 0;
    let mut checked = 0;
    for _ in 0..200 {
        let n = rng.gen_range(1..=12);
        let p = rng.gen_range(0.1..0.45);
        let g = random_graph(&mut rng, n, p);
        let scores = random_unit_vec(&mut rng, n);
        let edges = edge_list(&g, &vec![1.0; g.edge_count()]);
        let seeds: Vec<usize> = (0..rng.gen_range(1..=3.min(n))).map(|_| rng.gen_range(0..n)).collect();
        let mut uniq = Vec::new();
        for s in &seeds {
            if !uniq.contains(s) {
                uniq.push(*s);
            }
        }
        let seed_ix: Vec<NodeIx> = uniq.iter().map(|&s| NodeIx::new(s)).collect();
        let prop = PropagatedInterest {
            scores: scores.clone(),
            hops: 0,
        };
        for decay in [Decay::Reciprocal, Decay::Exponential] {
            for k in [0.0, 0.3, 0.7, 1.0] {
                let params = ExpansionParams {
                    threshold: k,
                    decay,
                    ..ExpansionParams::default()
                };
                let got = to_usize_paths(seeds_expansion(&g, &prop, &seed_ix, &params).unwrap().paths());
                let want = brute_expansions(n, &edges, &scores, &uniq, k, decay);
                checked += 1;
                if got != want {
                    mismatches += 1;
                }
            }
        }
    }
    assert_eq!(checked, 1600);
    assert_eq!(mismatches, 0);
}

#[test]
fn propagation_matches_naive_simulator() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xbeef);
    for _ in 0..100 {
        let n = rng.gen_range(1..=10);
        let p = rng.gen_range(0.1..0.7);
        let g = random_graph(&mut rng, n, p);
        let nodes = random_unit_vec(&mut rng, n);
        let edge_scores = random_unit_vec(&mut rng, g.edge_count());
        let state = InterestState::from_scores(&g, nodes.clone(), edge_scores.clone()).unwrap();
        let h = rng.gen_range(0..=4);
        for aggregator in [Aggregator::MeanBlend, Aggregator::MaxBlend, Aggregator::MinBlend] {
            let got = interest_propagation(&g, &state, &PropagationParams { hops: h, aggregator }).unwrap();
            let want = naive_propagation(n, &edge_list(&g, &edge_scores), &nodes, h, aggregator);
            for (a, b) in got.scores.iter().zip(&want) {
                assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
            }
        }
    }
}

#[test]
fn graphunit_nodes_equal_direct_fold_on_example_two() {
    let fx = make_example(2).unwrap();
    let out = gudie::run_pipeline::<f64>(&fx.graph, &fx.config).unwrap();
    let folded: BTreeSet<NodeIx> = out.index.paths().into_iter().flatten().collect();
    let units = obtain_graphunits(&out.index);
    assert_eq!(units.len(), 1);
    assert_eq!(units.values().next().unwrap().nodes, folded);
}

#[test]
fn hand_simulated_propagation() {
    // A(1)-B(0)-C(0), unit edges, h=2, mean blend
    let g = line_graph();
    let state = InterestState::from_scores(&g, vec![1.0, 0.0, 0.0], vec![1.0, 1.0]).unwrap();
    let p1 = interest_propagation(
        &g,
        &state,
        &PropagationParams {
            hops: 1,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(p1.scores[1], 0.25);
    let p2 = interest_propagation(
        &g,
        &state,
        &PropagationParams {
            hops: 2,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(p2.scores[2], 0.125);
}

fn line_graph() -> PropertyGraph {
    use gudie::graph::{Node, NodeType, Transaction, TransactionRecord};
    let nodes = ["A", "B", "C"].map(|id| Node::new(id, NodeType::Generic)).to_vec();
    let t = Transaction::new(0, 1.0, false);
    PropertyGraph::build(
        nodes,
        [TransactionRecord::new("A", "B", t), TransactionRecord::new("B", "C", t)],
    )
    .unwrap()
}
