//! Result documents, score dumps, expansion traces and DOT rendering.
//!
//! Scores are written with Rust's shortest round-trip float formatting, so
//! reading a dump back reproduces the exact values.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expansion::{ExpansionIndex, ExpansionStats};
use crate::graph::{EdgeIx, NodeIx, NodeType, PropertyGraph};
use crate::graphunits::GraphUnit;
use crate::interest::fraud_rate;
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("{file}:{line}: {message}")]
    Malformed { file: String, line: usize, message: String },
    #[error("{file}: {message}")]
    Incomplete { file: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitNode {
    pub id: String,
    #[serde(rename = "type")]
    pub node_type: NodeType,
    /// Propagated interest.
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitEdge {
    pub src: String,
    pub dst: String,
    /// Initial edge interest.
    pub score: f64,
    pub fraud_rate: f64,
    pub transactions: usize,
    pub total_amount: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitView {
    pub seed: String,
    pub nodes: Vec<UnitNode>,
    pub edges: Vec<UnitEdge>,
}

/// Contents of `units.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitsDocument {
    pub units: Vec<UnitView>,
}

impl UnitsDocument {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("units serialize");
        s.push('\n');
        s
    }
}

/// Resolves one GraphUnit into ids, types and scores, nodes sorted by id.
pub fn unit_view<S: Scalar>(graph: &PropertyGraph, unit: &GraphUnit, node_scores: &[S], edge_scores: &[S]) -> UnitView {
    let mut nodes: Vec<UnitNode> = unit
        .nodes
        .iter()
        .map(|&n| UnitNode {
            id: graph.id_of(n).to_string(),
            node_type: graph.node(n).node_type,
            score: node_scores[n.index()].as_f64(),
        })
        .collect();
    nodes.sort_by(|a, b| a.id.cmp(&b.id));
    let mut edges: Vec<UnitEdge> = unit.edges.iter().map(|&e| edge_view(graph, e, edge_scores)).collect();
    edges.sort_by(|a, b| (&a.src, &a.dst).cmp(&(&b.src, &b.dst)));
    UnitView {
        seed: graph.id_of(unit.seed).to_string(),
        nodes,
        edges,
    }
}

fn edge_view<S: Scalar>(graph: &PropertyGraph, e: EdgeIx, edge_scores: &[S]) -> UnitEdge {
    let edge = graph.edge(e);
    let (a, b) = edge.endpoints();
    let (src, dst) = {
        let (x, y) = (graph.id_of(a), graph.id_of(b));
        if x <= y {
            (x, y)
        } else {
            (y, x)
        }
    };
    UnitEdge {
        src: src.to_string(),
        dst: dst.to_string(),
        score: edge_scores[e.index()].as_f64(),
        fraud_rate: fraud_rate::<f64>(edge),
        transactions: edge.transactions().len(),
        total_amount: edge.total_amount(),
    }
}

pub fn units_document<S: Scalar>(
    graph: &PropertyGraph,
    units: &[GraphUnit],
    node_scores: &[S],
    edge_scores: &[S],
) -> UnitsDocument {
    UnitsDocument {
        units: units
            .iter()
            .map(|u| unit_view(graph, u, node_scores, edge_scores))
            .collect(),
    }
}

/// `node_id,score`
pub fn write_node_scores<S: Scalar, W: Write>(graph: &PropertyGraph, scores: &[S], out: W) -> Result<(), ExportError> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["node_id", "score"])?;
    for n in graph.node_ids() {
        wtr.write_record([graph.id_of(n), &scores[n.index()].as_f64().to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

fn parse_score(file: &str, line: usize, raw: &str) -> Result<f64, ExportError> {
    raw.parse().map_err(|_| ExportError::Malformed {
        file: file.into(),
        line,
        message: format!("`{raw}` is not a number"),
    })
}

pub fn read_node_scores<R: std::io::Read>(
    graph: &PropertyGraph,
    input: R,
    file: &str,
) -> Result<Vec<f64>, ExportError> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut scores = vec![None; graph.node_count()];
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let n = graph.node_ix(&rec[0]).ok_or_else(|| ExportError::Malformed {
            file: file.into(),
            line,
            message: format!("unknown node `{}`", &rec[0]),
        })?;
        scores[n.index()] = Some(parse_score(file, line, &rec[1])?);
    }
    scores
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            s.ok_or_else(|| ExportError::Incomplete {
                file: file.into(),
                message: format!("no score for node `{}`", graph.id_of(NodeIx::new(i))),
            })
        })
        .collect()
}

/// `src,dst,score`
pub fn write_edge_scores<S: Scalar, W: Write>(graph: &PropertyGraph, scores: &[S], out: W) -> Result<(), ExportError> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["src", "dst", "score"])?;
    for e in graph.edge_ids() {
        let (a, b) = graph.edge(e).endpoints();
        wtr.write_record([graph.id_of(a), graph.id_of(b), &scores[e.index()].as_f64().to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_edge_scores<R: std::io::Read>(
    graph: &PropertyGraph,
    input: R,
    file: &str,
) -> Result<Vec<f64>, ExportError> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut scores = vec![None; graph.edge_count()];
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let malformed = |message: String| ExportError::Malformed {
            file: file.into(),
            line,
            message,
        };
        let a = graph
            .node_ix(&rec[0])
            .ok_or_else(|| malformed(format!("unknown node `{}`", &rec[0])))?;
        let b = graph
            .node_ix(&rec[1])
            .ok_or_else(|| malformed(format!("unknown node `{}`", &rec[1])))?;
        let e = graph
            .edge_between(a, b)
            .ok_or_else(|| malformed(format!("no edge between `{}` and `{}`", &rec[0], &rec[1])))?;
        scores[e.index()] = Some(parse_score(file, line, &rec[2])?);
    }
    scores
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            s.ok_or_else(|| {
                let (a, b) = graph.edge(EdgeIx::new(i)).endpoints();
                ExportError::Incomplete {
                    file: file.into(),
                    message: format!("no score for edge `{}`-`{}`", graph.id_of(a), graph.id_of(b)),
                }
            })
        })
        .collect()
}

/// Expansion trace: a `# seed <id> min_interest <δ>` header per seed, then one
/// stored path per line as `<seed>: <n0>,<n1>,...`.
pub fn write_expansions<S: Scalar, W: Write>(
    graph: &PropertyGraph,
    index: &ExpansionIndex<S>,
    mut out: W,
) -> Result<(), ExportError> {
    for s in index.seeds() {
        writeln!(
            out,
            "# seed {} min_interest {}",
            graph.id_of(s.seed),
            s.min_interest.as_f64()
        )?;
    }
    for id in index.ids() {
        let path: Vec<&str> = index.path(id).into_iter().map(|n| graph.id_of(n)).collect();
        writeln!(out, "{}: {}", graph.id_of(index.seed_of(id)), path.join(","))?;
    }
    out.flush()?;
    Ok(())
}

/// Parsed expansion trace.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExpansionTrace {
    pub seeds: Vec<(NodeIx, f64)>,
    pub paths: Vec<Vec<NodeIx>>,
}

pub fn read_expansions<R: BufRead>(graph: &PropertyGraph, input: R, file: &str) -> Result<ExpansionTrace, ExportError> {
    let mut trace = ExpansionTrace::default();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let malformed = |message: String| ExportError::Malformed {
            file: file.into(),
            line: lineno,
            message,
        };
        let resolve = |id: &str| {
            graph
                .node_ix(id)
                .ok_or_else(|| malformed(format!("unknown node `{id}`")))
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('#') {
            let parts: Vec<&str> = header.split_whitespace().collect();
            match parts.as_slice() {
                ["seed", id, "min_interest", delta] => {
                    let delta = delta
                        .parse()
                        .map_err(|_| malformed(format!("`{delta}` is not a number")))?;
                    trace.seeds.push((resolve(id)?, delta));
                }
                _ => continue,
            }
            continue;
        }
        let (seed, path) = line
            .split_once(':')
            .ok_or_else(|| malformed("expected `<seed>: <path>`".into()))?;
        let path: Vec<NodeIx> = path
            .trim()
            .split(',')
            .map(|id| resolve(id.trim()))
            .collect::<Result<_, _>>()?;
        if path.first() != Some(&resolve(seed.trim())?) {
            return Err(malformed("path does not start at its seed".into()));
        }
        trace.paths.push(path);
    }
    Ok(trace)
}

/// Graphviz rendering of one unit: seed double-circled, fraud-bearing edges red.
pub fn unit_to_dot(view: &UnitView) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "graph \"{}\" {{", escape(&view.seed));
    let _ = writeln!(s, "  node [style=filled, fillcolor=white];");
    for n in &view.nodes {
        let shape = if n.id == view.seed {
            "doublecircle"
        } else {
            match n.node_type {
                NodeType::Customer => "ellipse",
                NodeType::Merchant => "box",
                NodeType::Device => "diamond",
                NodeType::Ip => "hexagon",
                NodeType::Generic => "circle",
            }
        };
        let _ = writeln!(
            s,
            "  \"{}\" [shape={shape}, label=\"{}\\n{:.3}\"];",
            escape(&n.id),
            escape(&n.id),
            n.score
        );
    }
    for e in &view.edges {
        let style = if e.fraud_rate > 0.0 {
            "color=red, penwidth=2"
        } else {
            "color=gray40"
        };
        let _ = writeln!(
            s,
            "  \"{}\" -- \"{}\" [label=\"{:.3}\", {style}];",
            escape(&e.src),
            escape(&e.dst),
            e.score
        );
    }
    s.push_str("}\n");
    s
}

fn escape(id: &str) -> String {
    id.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Per-stage timings and counters of one run. Kept apart from the result
/// files, which must not depend on timing.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub stage_millis: BTreeMap<String, f64>,
    pub node_count: usize,
    pub edge_count: usize,
    pub seeds: usize,
    pub expansion: ExpansionStats,
    pub unit_sizes: BTreeMap<String, usize>,
    pub warnings: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::{seeds_expansion, ExpansionParams};
    use crate::fixtures::make_example;
    use crate::propagation::PropagatedInterest;

    #[test]
    fn score_dumps_round_trip_exactly() {
        let g = make_example(2).unwrap().graph;
        let nodes: Vec<f64> = (0..g.node_count()).map(|i| 1.0 / (i as f64 + 3.0)).collect();
        let edges: Vec<f64> = (0..g.edge_count()).map(|i| (i as f64 + 0.1).sin().abs()).collect();
        let mut buf = Vec::new();
        write_node_scores(&g, &nodes, &mut buf).unwrap();
        assert_eq!(read_node_scores(&g, buf.as_slice(), "n").unwrap(), nodes);
        let mut buf = Vec::new();
        write_edge_scores(&g, &edges, &mut buf).unwrap();
        assert_eq!(read_edge_scores(&g, buf.as_slice(), "e").unwrap(), edges);
        let missing = "node_id,score\nC1,0.5\n";
        assert!(matches!(
            read_node_scores(&g, missing.as_bytes(), "n"),
            Err(ExportError::Incomplete { .. })
        ));
    }

    #[test]
    fn expansion_trace_round_trip() {
        let g = make_example(2).unwrap().graph;
        let scores = PropagatedInterest {
            scores: vec![1.0; g.node_count()],
            hops: 0,
        };
        let idx = seeds_expansion(&g, &scores, &[g.resolve("C1").unwrap()], &ExpansionParams::default()).unwrap();
        let mut buf = Vec::new();
        write_expansions(&g, &idx, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# seed C1 min_interest 0.7\nC1: C1\n"));
        let trace = read_expansions(&g, buf.as_slice(), "x").unwrap();
        assert_eq!(trace.paths, idx.paths());
        assert_eq!(trace.seeds, vec![(g.resolve("C1").unwrap(), 0.7)]);
        assert!(read_expansions(&g, "C1: M1,C1\n".as_bytes(), "x").is_err());
    }

    #[test]
    fn dot_marks_seed_and_fraud() {
        let view = UnitView {
            seed: "C1".into(),
            nodes: vec![
                UnitNode {
                    id: "C1".into(),
                    node_type: NodeType::Customer,
                    score: 0.5,
                },
                UnitNode {
                    id: "M1".into(),
                    node_type: NodeType::Merchant,
                    score: 0.25,
                },
            ],
            edges: vec![UnitEdge {
                src: "C1".into(),
                dst: "M1".into(),
                score: 1.0,
                fraud_rate: 1.0,
                transactions: 1,
                total_amount: 5.0,
            }],
        };
        let dot = unit_to_dot(&view);
        assert!(dot.contains("\"C1\" [shape=doublecircle"));
        assert!(dot.contains("color=red"));
    }
}
