//! Banking-network scenario fixtures and a synthetic power-law generator.
//!
//! Every customer payment links the customer to the merchant and, where the
//! scenario names them, to the device and IP address used; each of those
//! edges carries the payment's transaction.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::RunConfig;
use crate::graph::{GraphError, Node, NodeType, PropertyGraph, Transaction, TransactionRecord};

/// Latest timestamp used by the scenario fixtures.
pub const FIXTURE_TIME: u64 = 1_700_000_000;
const DAY: u64 = 86_400;

pub const EXAMPLE_COUNT: usize = 5;

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("no example {0}; examples are numbered 1..={EXAMPLE_COUNT}")]
    OutOfRange(usize),
    #[error("no fixture named `{0}`")]
    UnknownName(String),
    #[error("could not draw a graphical degree sequence after {0} attempts")]
    NotGraphical(usize),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Clone, Debug)]
pub struct ScenarioFixture {
    pub index: usize,
    pub name: String,
    pub title: String,
    pub graph: PropertyGraph,
    pub config: RunConfig,
    pub seed: String,
    pub expect_in: BTreeSet<String>,
    pub expect_out: BTreeSet<String>,
}

/// On-disk companion to an exported fixture graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureManifest {
    pub name: String,
    pub title: String,
    pub seed: String,
    pub node_count: usize,
    pub edge_count: usize,
    pub transaction_count: usize,
    pub expect_in: BTreeSet<String>,
    pub expect_out: BTreeSet<String>,
}

impl ScenarioFixture {
    pub fn manifest(&self) -> FixtureManifest {
        let summary = self.graph.summary();
        FixtureManifest {
            name: self.name.clone(),
            title: self.title.clone(),
            seed: self.seed.clone(),
            node_count: summary.node_count,
            edge_count: summary.edge_count,
            transaction_count: summary.transaction_count,
            expect_in: self.expect_in.clone(),
            expect_out: self.expect_out.clone(),
        }
    }
}

struct Builder {
    nodes: Vec<Node>,
    records: Vec<TransactionRecord>,
}

impl Builder {
    fn new() -> Self {
        Builder {
            nodes: Vec::new(),
            records: Vec::new(),
        }
    }

    fn node(&mut self, id: &str, t: NodeType) -> &mut Self {
        self.nodes.push(Node::new(id, t));
        self
    }

    /// One payment by `customer`; device and IP are optional.
    #[allow(clippy::too_many_arguments)]
    fn pay(
        &mut self,
        customer: &str,
        merchant: &str,
        device: Option<&str>,
        ip: Option<&str>,
        timestamp: u64,
        amount: f64,
        fraud: bool,
    ) -> &mut Self {
        let t = Transaction::new(timestamp, amount, fraud);
        for other in [Some(merchant), device, ip].into_iter().flatten() {
            self.records.push(TransactionRecord::new(customer, other, t));
        }
        self
    }

    fn build(self) -> PropertyGraph {
        PropertyGraph::build(self.nodes, self.records).expect("fixture graph is valid")
    }
}

fn set(ids: &[&str]) -> BTreeSet<String> {
    ids.iter().map(|s| s.to_string()).collect()
}

pub fn example_names() -> Vec<String> {
    (1..=EXAMPLE_COUNT).map(|i| format!("example{i}")).collect()
}

pub fn example_by_name(name: &str) -> Result<ScenarioFixture, FixtureError> {
    name.strip_prefix("example")
        .and_then(|i| i.parse::<usize>().ok())
        .filter(|i| (1..=EXAMPLE_COUNT).contains(i))
        .map(make_example)
        .unwrap_or_else(|| Err(FixtureError::UnknownName(name.to_string())))
}

pub fn make_example(index: usize) -> Result<ScenarioFixture, FixtureError> {
    let t = FIXTURE_TIME;
    let mut b = Builder::new();
    let (title, expect_in, expect_out) = match index {
        1 => {
            // a high-amount fraudulent payment and a low-amount legitimate one
            for (id, ty) in [
                ("C1", NodeType::Customer),
                ("M1", NodeType::Merchant),
                ("D1", NodeType::Device),
                ("P1", NodeType::Ip),
                ("M2", NodeType::Merchant),
                ("D2", NodeType::Device),
                ("P2", NodeType::Ip),
            ] {
                b.node(id, ty);
            }
            b.pay("C1", "M1", Some("D1"), Some("P1"), t, 1000.0, true);
            b.pay("C1", "M2", Some("D2"), Some("P2"), t - DAY / 2, 10.0, false);
            (
                "Ignoring uninteresting edges",
                set(&["C1", "M1", "D1", "P1"]),
                set(&["M2", "D2", "P2"]),
            )
        }
        2 => {
            // C1 buys legitimately at M1, where C2 committed fraud earlier
            for (id, ty) in [
                ("C1", NodeType::Customer),
                ("D1", NodeType::Device),
                ("P1", NodeType::Ip),
                ("M1", NodeType::Merchant),
                ("C2", NodeType::Customer),
                ("D2", NodeType::Device),
                ("P2", NodeType::Ip),
            ] {
                b.node(id, ty);
            }
            b.pay("C1", "M1", Some("D1"), Some("P1"), t, 20.0, false);
            for i in 0..3 {
                b.pay("C2", "M1", Some("D2"), Some("P2"), t - (3 + i) * DAY, 800.0, true);
            }
            ("Interesting indirect nodes", set(&["C1", "M1", "C2"]), set(&[]))
        }
        3 | 4 => {
            // supernode merchant with ten customer edges, one transaction each
            let frauds = if index == 3 { 1 } else { 4 };
            for (id, ty) in [
                ("C1", NodeType::Customer),
                ("D1", NodeType::Device),
                ("P1", NodeType::Ip),
                ("M1", NodeType::Merchant),
            ] {
                b.node(id, ty);
            }
            let others: Vec<String> = (2..=10).map(|i| format!("C{i}")).collect();
            for id in &others {
                b.node(id, NodeType::Customer);
            }
            b.pay("C1", "M1", Some("D1"), Some("P1"), t, 1000.0, false);
            for (i, id) in others.iter().enumerate() {
                let fraud = i < frauds;
                let amount = if fraud { 900.0 } else { 20.0 };
                b.pay(id, "M1", None, None, t - (i as u64 + 2) * DAY, amount, fraud);
            }
            let other_refs: Vec<&str> = others.iter().map(String::as_str).collect();
            if index == 3 {
                ("Irrelevant supernodes", set(&["C1"]), set(&other_refs))
            } else {
                ("Relevant supernodes", set(&["C1", "M1"]), set(&other_refs))
            }
        }
        5 => {
            // every direct edge of C1 is low-interest; the merchant leads to fraudster C2
            for (id, ty) in [
                ("C1", NodeType::Customer),
                ("D1", NodeType::Device),
                ("P1", NodeType::Ip),
                ("M1", NodeType::Merchant),
                ("M3", NodeType::Merchant),
                ("C2", NodeType::Customer),
                ("D2", NodeType::Device),
                ("P2", NodeType::Ip),
            ] {
                b.node(id, ty);
            }
            b.pay("C1", "M1", Some("D1"), Some("P1"), t, 15.0, false);
            b.pay("C1", "M3", None, None, t - DAY, 12.0, false);
            for i in 0..3 {
                b.pay("C2", "M1", Some("D2"), Some("P2"), t - (2 + i) * DAY, 900.0, true);
            }
            (
                "Interesting areas through uninteresting edges",
                set(&["C1", "C2"]),
                set(&[]),
            )
        }
        other => return Err(FixtureError::OutOfRange(other)),
    };

    let seed = "C1".to_string();
    let config = RunConfig {
        seeds: vec![seed.clone()],
        ..RunConfig::default()
    };
    Ok(ScenarioFixture {
        index,
        name: format!("example{index}"),
        title: title.to_string(),
        graph: b.build(),
        config,
        seed,
        expect_in,
        expect_out,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerLawParams {
    pub exponent: f64,
    pub min_degree: usize,
    pub fraud_ratio: f64,
    pub max_transactions_per_edge: usize,
    /// Transactions are spread over this many days before [`FIXTURE_TIME`].
    pub time_span_days: u64,
    pub max_attempts: usize,
}

impl Default for PowerLawParams {
    fn default() -> Self {
        PowerLawParams {
            exponent: 2.5,
            min_degree: 1,
            fraud_ratio: 0.02,
            max_transactions_per_edge: 3,
            time_span_days: 90,
            max_attempts: 100,
        }
    }
}

/// Erdős–Gallai test.
pub fn is_graphical(degrees: &[usize]) -> bool {
    let mut d: Vec<usize> = degrees.to_vec();
    if d.iter().sum::<usize>() % 2 != 0 {
        return false;
    }
    d.sort_unstable_by(|a, b| b.cmp(a));
    let n = d.len();
    // suffix sums of min(d_i, k) are evaluated with a moving pointer over the sorted tail
    let mut prefix = 0usize;
    let mut suffix_sum: Vec<usize> = vec![0; n + 1];
    for i in (0..n).rev() {
        suffix_sum[i] = suffix_sum[i + 1] + d[i];
    }
    let mut p = n; // first index in the tail with d < k+1
    for k in 1..=n {
        prefix += d[k - 1];
        while p > k && d[p - 1] < k {
            p -= 1;
        }
        let p_eff = p.max(k);
        // tail [k, p_eff) have d >= k, contribute k each; [p_eff, n) contribute d
        let rhs = k * (k - 1) + k * (p_eff - k) + suffix_sum[p_eff];
        if prefix > rhs {
            return false;
        }
    }
    true
}

fn sample_degrees(n: usize, params: &PowerLawParams, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let inv = 1.0 / (params.exponent - 1.0);
    let mut degrees: Vec<usize> = (0..n)
        .map(|_| {
            let u: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
            let d = (params.min_degree as f64 * u.powf(-inv)).floor() as usize;
            d.clamp(params.min_degree.max(1), n - 1)
        })
        .collect();
    if degrees.iter().sum::<usize>() % 2 == 1 {
        let i = rng.gen_range(0..n);
        if degrees[i] < n - 1 {
            degrees[i] += 1;
        } else {
            degrees[i] -= 1;
        }
    }
    degrees
}

/// Synthetic banking-like graph whose degree sequence follows a power law.
///
/// Edges come from an erased configuration model over a graphical degree
/// sequence: stubs are paired at random and self-loops or repeated pairs are
/// dropped. Deterministic for a fixed `rng_seed`.
pub fn make_powerlaw(n_nodes: usize, rng_seed: u64) -> Result<PropertyGraph, FixtureError> {
    make_powerlaw_with(n_nodes, rng_seed, &PowerLawParams::default())
}

pub fn make_powerlaw_with(
    n_nodes: usize,
    rng_seed: u64,
    params: &PowerLawParams,
) -> Result<PropertyGraph, FixtureError> {
    assert!(n_nodes >= 2, "power-law graph needs at least two nodes");
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let degrees = (0..params.max_attempts)
        .map(|_| sample_degrees(n_nodes, params, &mut rng))
        .find(|d| is_graphical(d))
        .ok_or(FixtureError::NotGraphical(params.max_attempts))?;

    let nodes: Vec<Node> = degrees
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let ty = if d >= 20 {
                NodeType::Merchant
            } else {
                match rng.gen_range(0..10) {
                    0..=5 => NodeType::Customer,
                    6 => NodeType::Merchant,
                    7 | 8 => NodeType::Device,
                    _ => NodeType::Ip,
                }
            };
            Node::new(format!("n{i}"), ty)
        })
        .collect();

    let mut stubs: Vec<usize> = degrees
        .iter()
        .enumerate()
        .flat_map(|(i, &d)| std::iter::repeat_n(i, d))
        .collect();
    stubs.shuffle(&mut rng);
    let mut pairs = BTreeSet::new();
    for pair in stubs.chunks_exact(2) {
        let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
        if a != b {
            pairs.insert((a, b));
        }
    }

    let span = params.time_span_days * DAY;
    let mut records = Vec::new();
    for (a, b) in pairs {
        let count = rng.gen_range(1..=params.max_transactions_per_edge.max(1));
        for _ in 0..count {
            let age = rng.gen_range(0..=span);
            let amount = (rng.gen_range(0.0f64..(5000f64).ln())).exp();
            let amount = (amount * 100.0).round() / 100.0;
            let fraud = rng.gen_bool(params.fraud_ratio.clamp(0.0, 1.0));
            records.push(TransactionRecord::new(
                nodes[a].id.clone(),
                nodes[b].id.clone(),
                Transaction::new(FIXTURE_TIME - age, amount, fraud),
            ));
        }
    }
    Ok(PropertyGraph::build(nodes, records)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn supernode_fraud_ratios() {
        for (index, ratio) in [(3, 0.10), (4, 0.40)] {
            let fx = make_example(index).unwrap();
            let m = fx.graph.resolve("M1").unwrap();
            let (mut fraud, mut total) = (0usize, 0usize);
            for &(_, e) in fx.graph.neighbors(m) {
                fraud += fx.graph.edge(e).fraud_count();
                total += fx.graph.edge(e).transactions().len();
            }
            assert_eq!(total, 10);
            assert_eq!(fraud as f64 / total as f64, ratio);
            assert!(fx.graph.degree(m) >= 10);
        }
    }

    #[test]
    fn supernode_topologies_match() {
        let a = make_example(3).unwrap().graph;
        let b = make_example(4).unwrap().graph;
        assert_eq!(a.nodes(), b.nodes());
        let ends = |g: &PropertyGraph| g.edges().iter().map(|e| e.endpoints()).collect::<Vec<_>>();
        assert_eq!(ends(&a), ends(&b));
    }

    #[test]
    fn fixtures_are_consistent() {
        for i in 1..=EXAMPLE_COUNT {
            let fx = make_example(i).unwrap();
            assert!(fx.expect_in.contains(&fx.seed));
            assert!(fx.expect_in.is_disjoint(&fx.expect_out));
            for id in fx.expect_in.iter().chain(&fx.expect_out) {
                assert!(fx.graph.node_ix(id).is_some(), "{id} missing in {}", fx.name);
            }
            assert_eq!(example_by_name(&fx.name).unwrap().graph, fx.graph);
        }
        assert!(matches!(make_example(0), Err(FixtureError::OutOfRange(0))));
        assert!(matches!(make_example(6), Err(FixtureError::OutOfRange(6))));
        assert!(example_by_name("example9").is_err());
    }

    #[test]
    fn erdos_gallai() {
        assert!(is_graphical(&[1, 1]));
        assert!(is_graphical(&[2, 2, 2]));
        assert!(!is_graphical(&[3, 1, 1]));
        assert!(!is_graphical(&[1, 1, 1]));
        assert!(is_graphical(&[3, 3, 3, 3]));
    }

    fn brute_graphical(d: &[usize]) -> bool {
        // enumerate all simple graphs on up to 6 nodes
        let n = d.len();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        (0u32..(1 << pairs.len())).any(|mask| {
            let mut deg = vec![0; n];
            for (i, &(a, b)) in pairs.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    deg[a] += 1;
                    deg[b] += 1;
                }
            }
            deg == d
        })
    }

    #[test]
    fn erdos_gallai_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..300 {
            let n = rng.gen_range(1..=6);
            let d: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            assert_eq!(is_graphical(&d), brute_graphical(&d), "{d:?}");
        }
    }

    #[test]
    fn powerlaw_is_deterministic() {
        let a = make_powerlaw(300, 11).unwrap();
        let b = make_powerlaw(300, 11).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, make_powerlaw(300, 12).unwrap());
    }

    #[test]
    fn powerlaw_without_fraud() {
        let params = PowerLawParams {
            fraud_ratio: 0.0,
            ..PowerLawParams::default()
        };
        let g = make_powerlaw_with(500, 3, &params).unwrap();
        assert!(g.edges().iter().all(|e| e.fraud_count() == 0));
    }

    #[test]
    fn powerlaw_has_heavy_tail() {
        for seed in 0..20 {
            let g = make_powerlaw(1000, seed).unwrap();
            let mut degrees: Vec<usize> = g.node_ids().map(|n| g.degree(n)).collect();
            degrees.sort_unstable();
            let median = degrees[degrees.len() / 2].max(1);
            assert!(
                g.max_degree() > 10 * median,
                "seed {seed}: max {} median {median}",
                g.max_degree()
            );
        }
    }
}
