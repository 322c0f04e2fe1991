//! Text formats: `edges.txt` (whitespace-separated zero-based id pairs),
//! `features.csv` (one headerless comma-separated row per node) and
//! `labels.txt` (one 0/1 per line).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::warn;

use super::AttributedGraph;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const EDGES_FILE: &str = "edges.txt";
pub const FEATURES_FILE: &str = "features.csv";
pub const LABELS_FILE: &str = "labels.txt";

#[derive(Debug, Clone)]
pub struct LoadedGraph {
    pub graph: AttributedGraph,
    pub self_loops_dropped: usize,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
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

fn parse_edges(path: &Path) -> Result<Vec<(usize, usize)>> {
    let text = read(path)?;
    let mut edges = Vec::new();
    for (line, l) in content_lines(&text) {
        let mut it = l.split_whitespace();
        let mut id = || -> Result<usize> {
            let tok = it
                .next()
                .ok_or_else(|| parse_err(path, line, "expected two node ids"))?;
            tok.parse()
                .map_err(|_| parse_err(path, line, format!("invalid node id {tok:?}")))
        };
        let (a, b) = (id()?, id()?);
        if it.next().is_some() {
            return Err(parse_err(path, line, "expected exactly two node ids"));
        }
        edges.push((a, b));
    }
    Ok(edges)
}

fn parse_features(path: &Path) -> Result<Matrix> {
    let text = read(path)?;
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (line, l) in content_lines(&text) {
        let before = data.len();
        for tok in l.split(',') {
            let tok = tok.trim();
            let v: f64 = tok
                .parse()
                .map_err(|_| parse_err(path, line, format!("non-numeric feature {tok:?}")))?;
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row: rows,
                    col: data.len() - before,
                });
            }
            data.push(v);
        }
        let width = data.len() - before;
        match cols {
            None => cols = Some(width),
            Some(c) if c != width => {
                return Err(Error::RaggedRows {
                    row: rows,
                    found: width,
                    expected: c,
                })
            }
            _ => {}
        }
        rows += 1;
    }
    Ok(Matrix::from_vec(rows, cols.unwrap_or(0), data))
}

pub fn read_labels(path: &Path) -> Result<Vec<bool>> {
    let text = read(path)?;
    content_lines(&text)
        .map(|(line, l)| match l {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(parse_err(path, line, format!("label must be 0 or 1, got {other:?}"))),
        })
        .collect()
}

/// Loads and validates a graph from its three text files. The node count
/// is the number of feature rows.
pub fn load_graph(
    edge_path: &Path,
    feature_path: &Path,
    label_path: Option<&Path>,
) -> Result<LoadedGraph> {
    let features = parse_features(feature_path)?;
    let edges = parse_edges(edge_path)?;
    let n = features.rows();
    if let Some(max_id) = edges.iter().map(|&(a, b)| a.max(b)).max() {
        if max_id >= n {
            return Err(Error::RowCountMismatch {
                what: "features",
                found: n,
                expected: max_id + 1,
            });
        }
    }
    let labels = label_path.map(read_labels).transpose()?;
    let (graph, self_loops_dropped) = AttributedGraph::from_edges(features, &edges, labels)?;
    if self_loops_dropped > 0 {
        warn!(
            "{}: dropped {self_loops_dropped} self-loop(s)",
            edge_path.display()
        );
    }
    Ok(LoadedGraph {
        graph,
        self_loops_dropped,
    })
}

/// Loads `edges.txt`, `features.csv` and (if present) `labels.txt` from `dir`.
pub fn load_graph_dir(dir: &Path) -> Result<LoadedGraph> {
    if !dir.is_dir() {
        return Err(Error::GraphNotFound(dir.to_path_buf()));
    }
    let labels: PathBuf = dir.join(LABELS_FILE);
    load_graph(
        &dir.join(EDGES_FILE),
        &dir.join(FEATURES_FILE),
        labels.is_file().then_some(labels.as_path()),
    )
}

pub fn save_graph_dir(g: &AttributedGraph, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut edges = String::new();
    for (a, b) in g.edges() {
        writeln!(edges, "{a} {b}").unwrap();
    }
    let mut feats = String::new();
    for r in 0..g.n() {
        let row: Vec<String> = g.feature(r).iter().map(|v| v.to_string()).collect();
        writeln!(feats, "{}", row.join(",")).unwrap();
    }
    let write = |name: &str, body: &str| {
        let p = dir.join(name);
        fs::write(&p, body).map_err(|e| Error::io(p, e))
    };
    write(EDGES_FILE, &edges)?;
    write(FEATURES_FILE, &feats)?;
    if let Some(labels) = g.labels() {
        let body: String = labels
            .iter()
            .map(|&b| if b { "1\n" } else { "0\n" })
            .collect();
        write(LABELS_FILE, &body)?;
    }
    Ok(())
}
