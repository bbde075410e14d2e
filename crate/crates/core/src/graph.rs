//! Attributed, undirected property graph with transaction-bearing edges.
//!
//! Nodes are addressed externally by string id and internally by a dense
//! [`NodeIx`]. Every unordered node pair carries at most one [`Edge`] holding
//! all transactions between the two entities.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense internal node index in `[0, node_count)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeIx(u32);

impl NodeIx {
    pub fn new(index: usize) -> Self {
        NodeIx(u32::try_from(index).expect("node index exceeds u32"))
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Dense internal edge index in `[0, edge_count)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeIx(u32);

impl EdgeIx {
    pub fn new(index: usize) -> Self {
        EdgeIx(u32::try_from(index).expect("edge index exceeds u32"))
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeType {
    Customer,
    Merchant,
    Device,
    Ip,
    Generic,
}

impl NodeType {
    pub const ALL: [NodeType; 5] = [
        NodeType::Customer,
        NodeType::Merchant,
        NodeType::Device,
        NodeType::Ip,
        NodeType::Generic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NodeType::Customer => "customer",
            NodeType::Merchant => "merchant",
            NodeType::Device => "device",
            NodeType::Ip => "ip",
            NodeType::Generic => "generic",
        }
    }
}

impl fmt::Display for NodeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NodeType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NodeType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown node type `{s}`"))
    }
}

pub type Attributes = BTreeMap<String, f64>;

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub id: String,
    pub node_type: NodeType,
    pub attributes: Attributes,
}

impl Node {
    pub fn new(id: impl Into<String>, node_type: NodeType) -> Self {
        Node {
            id: id.into(),
            node_type,
            attributes: Attributes::new(),
        }
    }

    pub fn with_attribute(mut self, key: impl Into<String>, value: f64) -> Self {
        self.attributes.insert(key.into(), value);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transaction {
    /// Seconds since the epoch.
    pub timestamp: u64,
    pub amount: f64,
    pub is_fraud: bool,
}

impl Transaction {
    pub fn new(timestamp: u64, amount: f64, is_fraud: bool) -> Self {
        Transaction {
            timestamp,
            amount,
            is_fraud,
        }
    }

    fn canonical_cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.timestamp
            .cmp(&other.timestamp)
            .then(self.amount.total_cmp(&other.amount))
            .then(self.is_fraud.cmp(&other.is_fraud))
    }
}

/// A raw transaction record between two node ids, as read from input.
#[derive(Clone, Debug, PartialEq)]
pub struct TransactionRecord {
    pub src: String,
    pub dst: String,
    pub transaction: Transaction,
}

impl TransactionRecord {
    pub fn new(src: impl Into<String>, dst: impl Into<String>, transaction: Transaction) -> Self {
        TransactionRecord {
            src: src.into(),
            dst: dst.into(),
            transaction,
        }
    }
}

/// Undirected edge. `endpoints.0 < endpoints.1`; transactions are kept in
/// canonical (timestamp, amount, label) order and are never empty.
#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    endpoints: (NodeIx, NodeIx),
    transactions: Vec<Transaction>,
}

impl Edge {
    pub fn endpoints(&self) -> (NodeIx, NodeIx) {
        self.endpoints
    }

    pub fn transactions(&self) -> &[Transaction] {
        &self.transactions
    }

    pub fn other(&self, n: NodeIx) -> NodeIx {
        if self.endpoints.0 == n {
            self.endpoints.1
        } else {
            self.endpoints.0
        }
    }

    pub fn latest_timestamp(&self) -> u64 {
        self.transactions.iter().map(|t| t.timestamp).max().unwrap_or(0)
    }

    pub fn total_amount(&self) -> f64 {
        self.transactions.iter().map(|t| t.amount).sum()
    }

    pub fn fraud_count(&self) -> usize {
        self.transactions.iter().filter(|t| t.is_fraud).count()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("duplicate node id `{0}`")]
    DuplicateNode(String),
    #[error("transaction references unknown node `{0}`")]
    UnknownEndpoint(String),
    #[error("self-loop transaction on node `{0}`")]
    SelfLoop(String),
    #[error("transaction between `{src}` and `{dst}` has invalid amount {amount}")]
    InvalidAmount { src: String, dst: String, amount: f64 },
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("node index {0} out of range")]
    IndexOutOfRange(usize),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub node_count: usize,
    pub edge_count: usize,
    pub transaction_count: usize,
    pub nodes_by_type: BTreeMap<NodeType, usize>,
}

/// Immutable attributed graph. Safe to share across threads.
#[derive(Clone, Debug)]
pub struct PropertyGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(NodeIx, EdgeIx)>>,
    lookup: HashMap<String, NodeIx>,
}

impl PartialEq for PropertyGraph {
    fn eq(&self, other: &Self) -> bool {
        // adjacency and lookup are derived from nodes/edges
        self.nodes == other.nodes && self.edges == other.edges
    }
}

impl PropertyGraph {
    /// Builds a graph, aggregating every record between the same unordered
    /// pair onto one edge. The result does not depend on record order.
    pub fn build(nodes: Vec<Node>, records: impl IntoIterator<Item = TransactionRecord>) -> Result<Self, GraphError> {
        let mut lookup = HashMap::with_capacity(nodes.len());
        for (i, node) in nodes.iter().enumerate() {
            if lookup.insert(node.id.clone(), NodeIx::new(i)).is_some() {
                return Err(GraphError::DuplicateNode(node.id.clone()));
            }
        }

        let mut grouped: BTreeMap<(NodeIx, NodeIx), Vec<Transaction>> = BTreeMap::new();
        for rec in records {
            let src = *lookup
                .get(&rec.src)
                .ok_or_else(|| GraphError::UnknownEndpoint(rec.src.clone()))?;
            let dst = *lookup
                .get(&rec.dst)
                .ok_or_else(|| GraphError::UnknownEndpoint(rec.dst.clone()))?;
            if src == dst {
                return Err(GraphError::SelfLoop(rec.src));
            }
            let amount = rec.transaction.amount;
            if !(amount.is_finite() && amount >= 0.0) {
                return Err(GraphError::InvalidAmount {
                    src: rec.src,
                    dst: rec.dst,
                    amount,
                });
            }
            let key = if src < dst { (src, dst) } else { (dst, src) };
            grouped.entry(key).or_default().push(rec.transaction);
        }

        let mut adjacency = vec![Vec::new(); nodes.len()];
        let mut edges = Vec::with_capacity(grouped.len());
        for (i, ((a, b), mut transactions)) in grouped.into_iter().enumerate() {
            transactions.sort_by(Transaction::canonical_cmp);
            let e = EdgeIx::new(i);
            adjacency[a.index()].push((b, e));
            adjacency[b.index()].push((a, e));
            edges.push(Edge {
                endpoints: (a, b),
                transactions,
            });
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }

        Ok(PropertyGraph {
            nodes,
            edges,
            adjacency,
            lookup,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node(&self, n: NodeIx) -> &Node {
        &self.nodes[n.index()]
    }

    pub fn edge(&self, e: EdgeIx) -> &Edge {
        &self.edges[e.index()]
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeIx> + '_ {
        (0..self.nodes.len()).map(NodeIx::new)
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeIx> + '_ {
        (0..self.edges.len()).map(EdgeIx::new)
    }

    pub fn id_of(&self, n: NodeIx) -> &str {
        &self.nodes[n.index()].id
    }

    pub fn node_ix(&self, id: &str) -> Option<NodeIx> {
        self.lookup.get(id).copied()
    }

    pub fn resolve(&self, id: &str) -> Result<NodeIx, GraphError> {
        self.node_ix(id).ok_or_else(|| GraphError::UnknownNode(id.to_string()))
    }

    pub fn contains(&self, n: NodeIx) -> bool {
        n.index() < self.nodes.len()
    }

    /// Adjacency of `n` in ascending neighbor index order.
    #[inline]
    pub fn neighbors(&self, n: NodeIx) -> &[(NodeIx, EdgeIx)] {
        &self.adjacency[n.index()]
    }

    pub fn neighbors_of(&self, id: &str) -> Result<&[(NodeIx, EdgeIx)], GraphError> {
        Ok(self.neighbors(self.resolve(id)?))
    }

    pub fn degree(&self, n: NodeIx) -> usize {
        self.adjacency[n.index()].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn edge_between(&self, a: NodeIx, b: NodeIx) -> Option<EdgeIx> {
        let adj = &self.adjacency[a.index()];
        adj.binary_search_by_key(&b, |&(m, _)| m).ok().map(|i| adj[i].1)
    }

    /// Latest transaction timestamp in the dataset, `None` without transactions.
    pub fn latest_timestamp(&self) -> Option<u64> {
        self.edges.iter().map(Edge::latest_timestamp).max()
    }

    pub fn summary(&self) -> GraphSummary {
        let mut nodes_by_type = BTreeMap::new();
        for node in &self.nodes {
            *nodes_by_type.entry(node.node_type).or_insert(0) += 1;
        }
        GraphSummary {
            node_count: self.nodes.len(),
            edge_count: self.edges.len(),
            transaction_count: self.edges.iter().map(|e| e.transactions.len()).sum(),
            nodes_by_type,
        }
    }

    /// Flattens the graph back into records, one per transaction, in edge order.
    pub fn transaction_records(&self) -> Vec<TransactionRecord> {
        self.edges
            .iter()
            .flat_map(|e| {
                let (a, b) = e.endpoints;
                e.transactions
                    .iter()
                    .map(move |t| TransactionRecord::new(self.id_of(a), self.id_of(b), *t))
            })
            .collect()
    }

    /// Node indices within `radius` hops of `center`, in BFS discovery order.
    pub fn ball(&self, center: NodeIx, radius: usize) -> Vec<NodeIx> {
        let mut dist = vec![usize::MAX; self.nodes.len()];
        dist[center.index()] = 0;
        let mut order = vec![center];
        let mut head = 0;
        while head < order.len() {
            let n = order[head];
            head += 1;
            let d = dist[n.index()];
            if d == radius {
                continue;
            }
            for &(m, _) in self.neighbors(n) {
                if dist[m.index()] == usize::MAX {
                    dist[m.index()] = d + 1;
                    order.push(m);
                }
            }
        }
        order
    }
}
