//! User-defined node and edge interest functions and the initial scoring pass.
//!
//! Both interest families are declarative and validated up front so that every
//! score they can produce lies in `[0, 1]`. Custom functions can be plugged in
//! through [`NodeInterest`] / [`EdgeInterest`].

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Edge, EdgeIx, GraphError, NodeIx, NodeType, PropertyGraph};
use crate::scalar::Scalar;

pub const ONE_WEEK_SECS: u64 = 604_800;

/// Attribute key resolved to the node's structural degree instead of a stored attribute.
pub const DEGREE_KEY: &str = "degree";

const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InterestError {
    #[error("invalid interest spec: {0}")]
    InvalidSpec(String),
    #[error("transaction at {timestamp} is newer than reference time {reference_time}")]
    FutureTransaction { timestamp: u64, reference_time: u64 },
    #[error(
        "attribute `{attribute}` on node `{node}` is negative ({value}); max normalization needs non-negative values"
    )]
    NegativeAttribute {
        node: String,
        attribute: String,
        value: f64,
    },
    #[error("interest score {value} for {element} is outside [0, 1]")]
    OutOfRange { element: String, value: f64 },
    #[error("interest state does not match graph: {0}")]
    Binding(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalizer {
    /// `value / max(value over graph)`; values must be non-negative.
    #[default]
    Max,
    /// `(value - min) / (max - min)`.
    MinMax,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributeTerm {
    pub attribute: String,
    pub weight: f64,
    #[serde(default)]
    pub normalizer: Normalizer,
}

/// Node interest (VUDIE) definition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NodeInterestSpec {
    Constant {
        value: f64,
    },
    AttributeWeighted {
        terms: Vec<AttributeTerm>,
    },
    TypeTable {
        table: BTreeMap<NodeType, f64>,
        #[serde(default)]
        default: f64,
    },
}

impl Default for NodeInterestSpec {
    fn default() -> Self {
        NodeInterestSpec::Constant { value: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedEdgeTerm {
    pub weight: f64,
    pub spec: EdgeInterestSpec,
}

/// Edge interest (LUDIE) definition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EdgeInterestSpec {
    Constant {
        value: f64,
    },
    /// Half relative time-weighted amount, half fraud rate.
    FraudTimeWeighted {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reference_time: Option<u64>,
    },
    WeightedSum {
        terms: Vec<WeightedEdgeTerm>,
    },
}

impl Default for EdgeInterestSpec {
    fn default() -> Self {
        EdgeInterestSpec::FraudTimeWeighted { reference_time: None }
    }
}

fn check_unit(what: &str, v: f64) -> Result<(), InterestError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(InterestError::InvalidSpec(format!("{what} {v} is outside [0, 1]")))
    }
}

fn check_weights(what: &str, weights: impl Iterator<Item = f64>) -> Result<(), InterestError> {
    let mut sum = 0.0;
    let mut count = 0;
    for w in weights {
        if !(w.is_finite() && w >= 0.0) {
            return Err(InterestError::InvalidSpec(format!(
                "{what} weight {w} must be non-negative"
            )));
        }
        sum += w;
        count += 1;
    }
    if count == 0 {
        return Err(InterestError::InvalidSpec(format!("{what} needs at least one term")));
    }
    if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(InterestError::InvalidSpec(format!(
            "{what} weights sum to {sum}, expected 1"
        )));
    }
    Ok(())
}

impl NodeInterestSpec {
    pub fn validate(&self) -> Result<(), InterestError> {
        match self {
            NodeInterestSpec::Constant { value } => check_unit("constant node interest", *value),
            NodeInterestSpec::AttributeWeighted { terms } => {
                check_weights("attribute_weighted", terms.iter().map(|t| t.weight))
            }
            NodeInterestSpec::TypeTable { table, default } => {
                check_unit("type_table default", *default)?;
                for (t, v) in table {
                    check_unit(&format!("type_table entry `{t}`"), *v)?;
                }
                Ok(())
            }
        }
    }
}

impl EdgeInterestSpec {
    pub fn validate(&self) -> Result<(), InterestError> {
        match self {
            EdgeInterestSpec::Constant { value } => check_unit("constant edge interest", *value),
            EdgeInterestSpec::FraudTimeWeighted { .. } => Ok(()),
            EdgeInterestSpec::WeightedSum { terms } => {
                check_weights("weighted_sum", terms.iter().map(|t| t.weight))?;
                terms.iter().try_for_each(|t| t.spec.validate())
            }
        }
    }

    fn reference_times(&self, out: &mut Vec<Option<u64>>) {
        match self {
            EdgeInterestSpec::Constant { .. } => {}
            EdgeInterestSpec::FraudTimeWeighted { reference_time } => out.push(*reference_time),
            EdgeInterestSpec::WeightedSum { terms } => terms.iter().for_each(|t| t.spec.reference_times(out)),
        }
    }
}

/// Σ amount · exp(−age in weeks) over the edge's transactions.
pub fn time_weighted_amount<S: Scalar>(edge: &Edge, reference_time: u64) -> Result<S, InterestError> {
    let week = S::of(ONE_WEEK_SECS as f64);
    let mut total = S::zero();
    for t in edge.transactions() {
        if t.timestamp > reference_time {
            return Err(InterestError::FutureTransaction {
                timestamp: t.timestamp,
                reference_time,
            });
        }
        let age = S::of((reference_time - t.timestamp) as f64) / week;
        total = total + S::of(t.amount) * (-age).exp();
    }
    Ok(total)
}

/// Fraction of the edge's transactions labelled fraudulent.
pub fn fraud_rate<S: Scalar>(edge: &Edge) -> S {
    let n = edge.transactions().len();
    if n == 0 {
        return S::zero();
    }
    S::of_usize(edge.fraud_count()) / S::of_usize(n)
}

/// Graph-wide quantities interest functions are normalized against.
#[derive(Clone, Debug, PartialEq)]
pub struct InterestContext<S> {
    /// Most recent transaction timestamp in the dataset (0 when there are none).
    pub latest_time: u64,
    max_tw_amount: BTreeMap<u64, S>,
    attribute_range: BTreeMap<String, (f64, f64)>,
}

impl<S: Scalar> InterestContext<S> {
    /// Computes every normalizer the two specs need.
    pub fn prepare(
        graph: &PropertyGraph,
        vudie: &NodeInterestSpec,
        ludie: &EdgeInterestSpec,
    ) -> Result<Self, InterestError> {
        let latest_time = graph.latest_timestamp().unwrap_or(0);
        let mut refs = vec![None];
        ludie.reference_times(&mut refs);
        let mut max_tw_amount = BTreeMap::new();
        for r in refs {
            let reference = r.unwrap_or(latest_time);
            if max_tw_amount.contains_key(&reference) {
                continue;
            }
            let max = graph
                .edges()
                .par_iter()
                .map(|e| time_weighted_amount::<S>(e, reference))
                .try_reduce(S::zero, |a, b| Ok(a.max(b)))?;
            max_tw_amount.insert(reference, max);
        }

        let mut attribute_range = BTreeMap::new();
        if let NodeInterestSpec::AttributeWeighted { terms } = vudie {
            for term in terms {
                let values: Vec<f64> = graph
                    .node_ids()
                    .filter_map(|n| raw_attribute(graph, n, &term.attribute))
                    .collect();
                let min = values.iter().copied().fold(f64::INFINITY, f64::min);
                let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                attribute_range.insert(term.attribute.clone(), (min, max));
            }
        }

        Ok(InterestContext {
            latest_time,
            max_tw_amount,
            attribute_range,
        })
    }

    pub fn reference_time(&self, requested: Option<u64>) -> u64 {
        requested.unwrap_or(self.latest_time)
    }

    /// Maximum time-weighted amount over all edges at `reference_time`.
    pub fn max_time_weighted_amount(&self, reference_time: u64) -> S {
        self.max_tw_amount.get(&reference_time).copied().unwrap_or_else(S::zero)
    }
}

fn raw_attribute(graph: &PropertyGraph, node: NodeIx, key: &str) -> Option<f64> {
    if key == DEGREE_KEY {
        Some(graph.degree(node) as f64)
    } else {
        graph.node(node).attributes.get(key).copied()
    }
}

/// Non-fatal evaluation notice, e.g. a referenced attribute missing on a node.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Warning {
    pub element: String,
    pub message: String,
}

pub trait NodeInterest<S: Scalar>: Sync {
    fn node_interest(
        &self,
        graph: &PropertyGraph,
        node: NodeIx,
        ctx: &InterestContext<S>,
        warnings: &mut Vec<Warning>,
    ) -> Result<S, InterestError>;
}

pub trait EdgeInterest<S: Scalar>: Sync {
    fn edge_interest(&self, graph: &PropertyGraph, edge: EdgeIx, ctx: &InterestContext<S>) -> Result<S, InterestError>;
}

impl<S: Scalar> NodeInterest<S> for NodeInterestSpec {
    fn node_interest(
        &self,
        graph: &PropertyGraph,
        node: NodeIx,
        ctx: &InterestContext<S>,
        warnings: &mut Vec<Warning>,
    ) -> Result<S, InterestError> {
        match self {
            NodeInterestSpec::Constant { value } => Ok(S::of(*value)),
            NodeInterestSpec::TypeTable { table, default } => {
                let t = graph.node(node).node_type;
                Ok(S::of(table.get(&t).copied().unwrap_or(*default)))
            }
            NodeInterestSpec::AttributeWeighted { terms } => {
                let mut score = S::zero();
                for term in terms {
                    let Some(value) = raw_attribute(graph, node, &term.attribute) else {
                        warnings.push(Warning {
                            element: graph.id_of(node).to_string(),
                            message: format!("missing attribute `{}`, contributes 0", term.attribute),
                        });
                        continue;
                    };
                    let (min, max) = ctx
                        .attribute_range
                        .get(&term.attribute)
                        .copied()
                        .unwrap_or((value, value));
                    let normalized = match term.normalizer {
                        Normalizer::Max => {
                            if value < 0.0 {
                                return Err(InterestError::NegativeAttribute {
                                    node: graph.id_of(node).to_string(),
                                    attribute: term.attribute.clone(),
                                    value,
                                });
                            }
                            if max > 0.0 {
                                S::of(value) / S::of(max)
                            } else {
                                S::zero()
                            }
                        }
                        Normalizer::MinMax => {
                            if max > min {
                                (S::of(value) - S::of(min)) / (S::of(max) - S::of(min))
                            } else {
                                S::zero()
                            }
                        }
                    };
                    score = score + S::of(term.weight) * normalized;
                }
                // weights sum to 1 within tolerance; absorb the rounding excess
                Ok(score.min(S::one()))
            }
        }
    }
}

impl<S: Scalar> EdgeInterest<S> for EdgeInterestSpec {
    fn edge_interest(&self, graph: &PropertyGraph, edge: EdgeIx, ctx: &InterestContext<S>) -> Result<S, InterestError> {
        match self {
            EdgeInterestSpec::Constant { value } => Ok(S::of(*value)),
            EdgeInterestSpec::FraudTimeWeighted { reference_time } => {
                let reference = ctx.reference_time(*reference_time);
                let e = graph.edge(edge);
                let tw: S = time_weighted_amount(e, reference)?;
                let max = ctx.max_time_weighted_amount(reference);
                let amount_term = if max > S::zero() {
                    tw / (S::of(2.0) * max)
                } else {
                    S::zero()
                };
                Ok(amount_term + fraud_rate::<S>(e) / S::of(2.0))
            }
            EdgeInterestSpec::WeightedSum { terms } => {
                let mut score = S::zero();
                for term in terms {
                    score = score + S::of(term.weight) * term.spec.edge_interest(graph, edge, ctx)?;
                }
                Ok(score.min(S::one()))
            }
        }
    }
}

/// Evaluates a node interest definition on one node, preparing the context on the fly.
pub fn evaluate_vudie<S: Scalar>(
    spec: &NodeInterestSpec,
    graph: &PropertyGraph,
    node: NodeIx,
) -> Result<(S, Vec<Warning>), InterestError> {
    spec.validate()?;
    let ctx = InterestContext::prepare(graph, spec, &EdgeInterestSpec::Constant { value: 0.0 })?;
    let mut warnings = Vec::new();
    let score = spec.node_interest(graph, node, &ctx, &mut warnings)?;
    Ok((score, warnings))
}

pub fn evaluate_ludie<S: Scalar>(
    spec: &EdgeInterestSpec,
    graph: &PropertyGraph,
    edge: EdgeIx,
    ctx: &InterestContext<S>,
) -> Result<S, InterestError> {
    spec.edge_interest(graph, edge, ctx)
}

/// Initial node scores `I_V` and edge scores `I_E` bound to one graph.
#[derive(Clone, Debug, PartialEq)]
pub struct InterestState<S> {
    pub node_scores: Vec<S>,
    pub edge_scores: Vec<S>,
    /// Ω_t: latest transaction timestamp in the dataset.
    pub latest_time: u64,
    /// Ω^max: maximum time-weighted amount over edges at `latest_time`.
    pub max_time_weighted_amount: S,
    pub warnings: Vec<Warning>,
}

impl<S: Scalar> InterestState<S> {
    /// Wraps externally computed scores, checking they fit `graph`.
    pub fn from_scores(graph: &PropertyGraph, node_scores: Vec<S>, edge_scores: Vec<S>) -> Result<Self, InterestError> {
        let state = InterestState {
            node_scores,
            edge_scores,
            latest_time: graph.latest_timestamp().unwrap_or(0),
            max_time_weighted_amount: S::zero(),
            warnings: Vec::new(),
        };
        state.check_bound(graph)?;
        check_scores(graph, &state.node_scores, &state.edge_scores)?;
        Ok(state)
    }

    pub fn check_bound(&self, graph: &PropertyGraph) -> Result<(), InterestError> {
        if self.node_scores.len() != graph.node_count() {
            return Err(InterestError::Binding(format!(
                "{} node scores for {} nodes",
                self.node_scores.len(),
                graph.node_count()
            )));
        }
        if self.edge_scores.len() != graph.edge_count() {
            return Err(InterestError::Binding(format!(
                "{} edge scores for {} edges",
                self.edge_scores.len(),
                graph.edge_count()
            )));
        }
        Ok(())
    }

    pub fn node_score(&self, n: NodeIx) -> S {
        self.node_scores[n.index()]
    }

    pub fn edge_score(&self, e: EdgeIx) -> S {
        self.edge_scores[e.index()]
    }
}

fn check_scores<S: Scalar>(graph: &PropertyGraph, nodes: &[S], edges: &[S]) -> Result<(), InterestError> {
    if let Some((i, v)) = nodes.iter().enumerate().find(|(_, v)| !v.is_unit()) {
        return Err(InterestError::OutOfRange {
            element: format!("node `{}`", graph.id_of(NodeIx::new(i))),
            value: v.as_f64(),
        });
    }
    if let Some((i, v)) = edges.iter().enumerate().find(|(_, v)| !v.is_unit()) {
        let (a, b) = graph.edge(EdgeIx::new(i)).endpoints();
        return Err(InterestError::OutOfRange {
            element: format!("edge `{}`-`{}`", graph.id_of(a), graph.id_of(b)),
            value: v.as_f64(),
        });
    }
    Ok(())
}

/// Scores every node and edge with the given specs.
pub fn initialize<S: Scalar>(
    graph: &PropertyGraph,
    vudie: &NodeInterestSpec,
    ludie: &EdgeInterestSpec,
) -> Result<InterestState<S>, InterestError> {
    vudie.validate()?;
    ludie.validate()?;
    let ctx = InterestContext::<S>::prepare(graph, vudie, ludie)?;
    initialize_with(graph, vudie, ludie, &ctx)
}

/// Scores with arbitrary interest functions against a prepared context.
pub fn initialize_with<S, N, E>(
    graph: &PropertyGraph,
    vudie: &N,
    ludie: &E,
    ctx: &InterestContext<S>,
) -> Result<InterestState<S>, InterestError>
where
    S: Scalar,
    N: NodeInterest<S> + ?Sized,
    E: EdgeInterest<S> + ?Sized,
{
    let node_results: Vec<(S, Vec<Warning>)> = (0..graph.node_count())
        .into_par_iter()
        .map(|i| {
            let mut warnings = Vec::new();
            vudie
                .node_interest(graph, NodeIx::new(i), ctx, &mut warnings)
                .map(|s| (s, warnings))
        })
        .collect::<Result<_, _>>()?;
    let edge_scores: Vec<S> = (0..graph.edge_count())
        .into_par_iter()
        .map(|i| ludie.edge_interest(graph, EdgeIx::new(i), ctx))
        .collect::<Result<_, _>>()?;

    let mut node_scores = Vec::with_capacity(node_results.len());
    let mut warnings = Vec::new();
    for (s, w) in node_results {
        node_scores.push(s);
        warnings.extend(w);
    }
    check_scores(graph, &node_scores, &edge_scores)?;

    Ok(InterestState {
        node_scores,
        edge_scores,
        latest_time: ctx.latest_time,
        max_time_weighted_amount: ctx.max_time_weighted_amount(ctx.latest_time),
        warnings,
    })
}
