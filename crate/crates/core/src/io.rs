//! Plain-text formats: tab-separated edge lists, dense correlation CSVs, label
//! files and node attribute CSVs.

use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::graph::SignedGraph;

fn parse_err(path: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        msg: msg.into(),
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn field<T: std::str::FromStr>(path: &str, line: usize, raw: Option<&str>, what: &str) -> Result<T> {
    let raw = raw.ok_or_else(|| parse_err(path, line, format!("missing {what}")))?;
    raw.trim()
        .parse()
        .map_err(|_| parse_err(path, line, format!("cannot parse {what} from {raw:?}")))
}

/// Parses `src<TAB>dst<TAB>weight` lines. Without `n`, the node count is one more
/// than the largest id.
pub fn parse_edge_list(text: &str, source: &str, n: Option<usize>, directed: bool) -> Result<SignedGraph> {
    let mut edges = Vec::new();
    for (line, l) in content_lines(text) {
        let mut parts = l.split('\t');
        let src: usize = field(source, line, parts.next(), "source id")?;
        let dst: usize = field(source, line, parts.next(), "target id")?;
        let w: f64 = field(source, line, parts.next(), "weight")?;
        if parts.next().is_some() {
            return Err(parse_err(source, line, "expected three tab-separated fields"));
        }
        if let Some(n) = n {
            if src >= n || dst >= n {
                return Err(parse_err(source, line, format!("node id out of range for {n} nodes")));
            }
        }
        edges.push((line, (src, dst, w)));
    }
    let n = n.unwrap_or_else(|| edges.iter().map(|(_, (s, d, _))| s.max(d) + 1).max().unwrap_or(0));
    let plain: Vec<_> = edges.iter().map(|(_, e)| *e).collect();
    SignedGraph::from_edges(n, &plain, directed).map_err(|e| match e {
        Error::DuplicateEdge { src, dst } | Error::ZeroWeight { src, dst } | Error::NonFiniteWeight { src, dst } => {
            let line = edges.iter().rev().find(|(_, (s, d, _))| (*s, *d) == (src, dst)).map_or(0, |(l, _)| *l);
            parse_err(source, line, e.to_string())
        }
        other => other,
    })
}

pub fn read_edge_list(path: &Path, n: Option<usize>, directed: bool) -> Result<SignedGraph> {
    parse_edge_list(&fs::read_to_string(path)?, &path.display().to_string(), n, directed)
}

pub fn format_edge_list(graph: &SignedGraph) -> String {
    let mut s = String::new();
    for (a, b, w) in graph.edges() {
        s.push_str(&format!("{a}\t{b}\t{w}\n"));
    }
    s
}

pub fn write_edge_list(graph: &SignedGraph, path: &Path) -> Result<()> {
    fs::write(path, format_edge_list(graph))?;
    Ok(())
}

fn parse_matrix(text: &str, source: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (line, l) in content_lines(text) {
        let row = l
            .split(',')
            .map(|cell| field::<f64>(source, line, Some(cell), "value"))
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            let first: &Vec<f64> = first;
            if first.len() != row.len() {
                return Err(parse_err(source, line, format!("expected {} values, found {}", first.len(), row.len())));
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Dense `n x n` correlation matrix to a weighted graph. The diagonal and exact
/// zeros are dropped; a symmetric matrix gives an undirected graph, anything else
/// a directed one.
pub fn parse_correlation_csv(text: &str, source: &str) -> Result<SignedGraph> {
    let rows = parse_matrix(text, source)?;
    let n = rows.len();
    if let Some(r) = rows.first() {
        if r.len() != n {
            return Err(parse_err(source, 1, format!("matrix has {n} rows but {} columns", r.len())));
        }
    }
    let symmetric = (0..n).all(|i| (0..i).all(|j| rows[i][j] == rows[j][i]));
    let mut edges = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        for (j, &w) in row.iter().enumerate() {
            if i == j || w == 0.0 || (symmetric && j < i) {
                continue;
            }
            if !w.is_finite() {
                return Err(parse_err(source, i + 1, "non-finite correlation"));
            }
            edges.push((i, j, w));
        }
    }
    SignedGraph::from_edges(n, &edges, !symmetric)
}

pub fn read_correlation_csv(path: &Path) -> Result<SignedGraph> {
    parse_correlation_csv(&fs::read_to_string(path)?, &path.display().to_string())
}

/// `node<TAB>cluster` lines covering every node exactly once.
pub fn parse_labels(text: &str, source: &str, n: usize) -> Result<Vec<usize>> {
    let mut labels = vec![None; n];
    for (line, l) in content_lines(text) {
        let mut parts = l.split('\t');
        let node: usize = field(source, line, parts.next(), "node id")?;
        let cluster: usize = field(source, line, parts.next(), "cluster id")?;
        if node >= n {
            return Err(parse_err(source, line, format!("node id {node} out of range for {n} nodes")));
        }
        if labels[node].replace(cluster).is_some() {
            return Err(parse_err(source, line, format!("node {node} labeled twice")));
        }
    }
    labels
        .into_iter()
        .enumerate()
        .map(|(i, l)| l.ok_or_else(|| parse_err(source, 0, format!("node {i} has no label"))))
        .collect()
}

pub fn read_labels(path: &Path, n: usize) -> Result<Vec<usize>> {
    parse_labels(&fs::read_to_string(path)?, &path.display().to_string(), n)
}

pub fn format_labels(labels: &[usize]) -> String {
    labels.iter().enumerate().map(|(i, c)| format!("{i}\t{c}\n")).collect()
}

pub fn write_labels(labels: &[usize], path: &Path) -> Result<()> {
    fs::write(path, format_labels(labels))?;
    Ok(())
}

/// Node attributes: one CSV row of reals per node.
pub fn parse_attributes(text: &str, source: &str, n: usize) -> Result<Array2<f64>> {
    let rows = parse_matrix(text, source)?;
    if rows.len() != n {
        return Err(parse_err(source, 0, format!("expected {n} attribute rows, found {}", rows.len())));
    }
    let d = rows.first().map_or(0, Vec::len);
    Ok(Array2::from_shape_fn((n, d), |(i, j)| rows[i][j]))
}

pub fn read_attributes(path: &Path, n: usize) -> Result<Array2<f64>> {
    parse_attributes(&fs::read_to_string(path)?, &path.display().to_string(), n)
}
