//! Flat-file graph format: a nodes CSV (`id,type[,attr...]`) and a
//! transactions CSV (`src,dst,timestamp,amount,is_fraud`).

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::graph::{GraphError, Node, NodeType, PropertyGraph, Transaction, TransactionRecord};

pub const NODES_FILE: &str = "nodes.csv";
pub const TRANSACTIONS_FILE: &str = "transactions.csv";

const TRANSACTION_COLUMNS: [&str; 5] = ["src", "dst", "timestamp", "amount", "is_fraud"];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}: schema error: {message}")]
    Schema { file: String, message: String },
    #[error("{file}:{line}: column `{column}`: {message}")]
    Malformed {
        file: String,
        line: u64,
        column: String,
        message: String,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn csv_error(file: &str, err: csv::Error) -> IngestError {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    IngestError::Malformed {
        file: file.to_string(),
        line,
        column: String::new(),
        message: err.to_string(),
    }
}

fn column_index(file: &str, headers: &csv::StringRecord, name: &str) -> Result<usize, IngestError> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| IngestError::Schema {
            file: file.to_string(),
            message: format!("missing required column `{name}`"),
        })
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input)
}

pub fn read_nodes<R: Read>(input: R, file: &str) -> Result<Vec<Node>, IngestError> {
    let mut rdr = reader(input);
    let headers = rdr.headers().map_err(|e| csv_error(file, e))?.clone();
    let id_col = column_index(file, &headers, "id")?;
    let type_col = column_index(file, &headers, "type")?;
    let attr_cols: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != id_col && i != type_col)
        .map(|(i, h)| (i, h.to_string()))
        .collect();

    let mut nodes = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(file, e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let malformed = |column: &str, message: String| IngestError::Malformed {
            file: file.to_string(),
            line,
            column: column.to_string(),
            message,
        };
        let id = &rec[id_col];
        if id.is_empty() {
            return Err(malformed("id", "empty node id".into()));
        }
        let node_type: NodeType = rec[type_col].parse().map_err(|m| malformed("type", m))?;
        let mut node = Node::new(id, node_type);
        for (col, name) in &attr_cols {
            let raw = &rec[*col];
            if raw.is_empty() {
                continue;
            }
            let value: f64 = raw
                .parse()
                .map_err(|_| malformed(name, format!("`{raw}` is not a number")))?;
            node.attributes.insert(name.clone(), value);
        }
        nodes.push(node);
    }
    Ok(nodes)
}

pub fn read_transactions<R: Read>(input: R, file: &str) -> Result<Vec<TransactionRecord>, IngestError> {
    let mut rdr = reader(input);
    let headers = rdr.headers().map_err(|e| csv_error(file, e))?.clone();
    let mut cols = [0usize; 5];
    for (slot, name) in cols.iter_mut().zip(TRANSACTION_COLUMNS) {
        *slot = column_index(file, &headers, name)?;
    }
    let [src_col, dst_col, ts_col, amount_col, fraud_col] = cols;

    let mut records = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(file, e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let malformed = |column: &str, message: String| IngestError::Malformed {
            file: file.to_string(),
            line,
            column: column.to_string(),
            message,
        };
        let raw_ts = &rec[ts_col];
        let timestamp: u64 = raw_ts
            .parse()
            .map_err(|_| malformed("timestamp", format!("`{raw_ts}` is not a non-negative integer")))?;
        let raw_amount = &rec[amount_col];
        let amount: f64 = raw_amount
            .parse()
            .ok()
            .filter(|a: &f64| a.is_finite() && *a >= 0.0)
            .ok_or_else(|| malformed("amount", format!("`{raw_amount}` is not a non-negative decimal")))?;
        let is_fraud = match &rec[fraud_col] {
            "0" => false,
            "1" => true,
            other => return Err(malformed("is_fraud", format!("`{other}` is not 0 or 1"))),
        };
        records.push(TransactionRecord::new(
            &rec[src_col],
            &rec[dst_col],
            Transaction::new(timestamp, amount, is_fraud),
        ));
    }
    Ok(records)
}

/// Parses both CSV documents and builds the graph.
pub fn read_graph<N: Read, T: Read>(
    nodes: N,
    nodes_name: &str,
    transactions: T,
    transactions_name: &str,
) -> Result<PropertyGraph, IngestError> {
    let nodes = read_nodes(nodes, nodes_name)?;
    let records = read_transactions(transactions, transactions_name)?;
    Ok(PropertyGraph::build(nodes, records)?)
}

fn open(path: &Path) -> Result<File, IngestError> {
    File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_graph(nodes_path: &Path, transactions_path: &Path) -> Result<PropertyGraph, IngestError> {
    read_graph(
        open(nodes_path)?,
        &nodes_path.display().to_string(),
        open(transactions_path)?,
        &transactions_path.display().to_string(),
    )
}

/// Loads `nodes.csv` and `transactions.csv` from a directory.
pub fn load_graph_dir(dir: &Path) -> Result<PropertyGraph, IngestError> {
    load_graph(&dir.join(NODES_FILE), &dir.join(TRANSACTIONS_FILE))
}

pub fn write_nodes<W: Write>(graph: &PropertyGraph, out: W) -> csv::Result<()> {
    let attr_names: BTreeSet<&str> = graph
        .nodes()
        .iter()
        .flat_map(|n| n.attributes.keys().map(String::as_str))
        .collect();
    let mut wtr = csv::Writer::from_writer(out);
    let mut header = vec!["id", "type"];
    header.extend(attr_names.iter().copied());
    wtr.write_record(&header)?;
    for node in graph.nodes() {
        let mut row = vec![node.id.clone(), node.node_type.to_string()];
        for name in &attr_names {
            row.push(node.attributes.get(*name).map(f64::to_string).unwrap_or_default());
        }
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_transactions<W: Write>(graph: &PropertyGraph, out: W) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(TRANSACTION_COLUMNS)?;
    for rec in graph.transaction_records() {
        let t = rec.transaction;
        wtr.write_record([
            rec.src,
            rec.dst,
            t.timestamp.to_string(),
            t.amount.to_string(),
            u8::from(t.is_fraud).to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

fn create(path: &Path) -> Result<File, IngestError> {
    File::create(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_err(path: &Path, err: csv::Error) -> IngestError {
    IngestError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(err.to_string()),
    }
}

pub fn save_graph(graph: &PropertyGraph, nodes_path: &Path, transactions_path: &Path) -> Result<(), IngestError> {
    write_nodes(graph, create(nodes_path)?).map_err(|e| write_err(nodes_path, e))?;
    write_transactions(graph, create(transactions_path)?).map_err(|e| write_err(transactions_path, e))?;
    Ok(())
}

pub fn save_graph_dir(graph: &PropertyGraph, dir: &Path) -> Result<(), IngestError> {
    std::fs::create_dir_all(dir).map_err(|source| IngestError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    save_graph(graph, &dir.join(NODES_FILE), &dir.join(TRANSACTIONS_FILE))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(nodes: &str, txs: &str) -> Result<PropertyGraph, IngestError> {
        read_graph(nodes.as_bytes(), "nodes.csv", txs.as_bytes(), "transactions.csv")
    }

    #[test]
    fn empty_transactions_file() {
        let g = parse(
            "id,type\nA,customer\nB,merchant\nC,ip\n",
            "src,dst,timestamp,amount,is_fraud\n",
        )
        .unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn duplicate_node_row() {
        let err = parse(
            "id,type\nA,customer\nA,merchant\n",
            "src,dst,timestamp,amount,is_fraud\n",
        )
        .unwrap_err();
        assert!(matches!(err, IngestError::Graph(GraphError::DuplicateNode(ref id)) if id == "A"));
    }

    #[test]
    fn malformed_row_reports_line_and_column() {
        let err = parse(
            "id,type\nA,customer\nB,merchant\n",
            "src,dst,timestamp,amount,is_fraud\nA,B,10,5.0,0\nA,B,11,abc,0\n",
        )
        .unwrap_err();
        match err {
            IngestError::Malformed { file, line, column, .. } => {
                assert_eq!(file, "transactions.csv");
                assert_eq!(line, 3);
                assert_eq!(column, "amount");
            }
            other => panic!("unexpected {other:?}"),
        }
        let err = parse("id,type\nA,planet\n", "src,dst,timestamp,amount,is_fraud\n").unwrap_err();
        assert!(matches!(err, IngestError::Malformed { line: 2, ref column, .. } if column == "type"));
        let err = parse(
            "id,type\nA,customer\nB,merchant\n",
            "src,dst,timestamp,amount,is_fraud\nA,B,-4,1,0\n",
        )
        .unwrap_err();
        assert!(matches!(err, IngestError::Malformed { ref column, .. } if column == "timestamp"));
        let err = parse(
            "id,type\nA,customer\nB,merchant\n",
            "src,dst,timestamp,amount,is_fraud\nA,B,4,1,yes\n",
        )
        .unwrap_err();
        assert!(matches!(err, IngestError::Malformed { ref column, .. } if column == "is_fraud"));
    }

    #[test]
    fn missing_column_is_schema_error() {
        let err = parse("id,type\nA,customer\n", "src,dst,timestamp,amount\n").unwrap_err();
        assert!(matches!(err, IngestError::Schema { ref message, .. } if message.contains("is_fraud")));
        let err = parse("name,type\nA,customer\n", "src,dst,timestamp,amount,is_fraud\n").unwrap_err();
        assert!(matches!(err, IngestError::Schema { .. }));
    }

    #[test]
    fn attributes_are_parsed_and_written_back() {
        let g = parse(
            "id,type,risk,age\nA,customer,0.25,\nB,merchant,,3\n",
            "src,dst,timestamp,amount,is_fraud\nB,A,7,0.1,1\n",
        )
        .unwrap();
        assert_eq!(g.node(g.resolve("A").unwrap()).attributes.get("risk"), Some(&0.25));
        assert!(!g.node(g.resolve("A").unwrap()).attributes.contains_key("age"));

        let mut nodes = Vec::new();
        let mut txs = Vec::new();
        write_nodes(&g, &mut nodes).unwrap();
        write_transactions(&g, &mut txs).unwrap();
        let back = read_graph(nodes.as_slice(), "n", txs.as_slice(), "t").unwrap();
        assert_eq!(back, g);
    }
}
