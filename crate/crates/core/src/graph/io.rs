//! Whitespace-separated edge-list ingestion.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Serialize;

use super::{DirectedGraph, NodeId};
use crate::error::{OimError, Result};

#[derive(Debug, Clone, Copy, Default)]
pub struct EdgeListOptions {
    /// Expand every input pair into both directed edges.
    pub symmetrize: bool,
}

/// A line whose edge was dropped because both endpoints coincide.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RejectedEdge {
    pub line: usize,
    pub node: NodeId,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LoadReport {
    /// Number of data (non-comment, non-blank) lines read.
    pub data_lines: usize,
    /// Directed edges dropped because they were already present.
    pub duplicates: usize,
    /// Self-loops, which never enter the graph.
    pub rejected: Vec<RejectedEdge>,
}

/// Parses `source target` pairs, one per line.
///
/// Blank lines and lines starting with `#` are skipped. Node indices are taken
/// as given, so `node_count` is one more than the largest index seen.
pub fn load_edge_list<R: BufRead>(reader: R, options: EdgeListOptions) -> Result<(DirectedGraph, LoadReport)> {
    let mut report = LoadReport::default();
    let mut seen = HashSet::new();
    let mut edges = Vec::new();
    let mut max_node: Option<NodeId> = None;

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| OimError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        report.data_lines += 1;

        let mut fields = trimmed.split_whitespace();
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(OimError::Parse {
                line: line_no,
                message: format!("expected `source target`, found {trimmed:?}"),
            });
        };
        let parse = |tok: &str| {
            tok.parse::<NodeId>().map_err(|e| OimError::Parse {
                line: line_no,
                message: format!("bad node id {tok:?}: {e}"),
            })
        };
        let (u, v) = (parse(a)?, parse(b)?);
        max_node = Some(max_node.map_or(u.max(v), |m| m.max(u).max(v)));

        if u == v {
            report.rejected.push(RejectedEdge { line: line_no, node: u });
            continue;
        }
        let pairs: &[(NodeId, NodeId)] = if options.symmetrize {
            &[(u, v), (v, u)]
        } else {
            &[(u, v)]
        };
        for &pair in pairs {
            if seen.insert(pair) {
                edges.push(pair);
            } else {
                report.duplicates += 1;
            }
        }
    }

    let node_count = max_node.map_or(0, |m| m + 1);
    Ok((DirectedGraph::build(node_count, edges), report))
}

pub fn load_edge_list_path(path: impl AsRef<Path>, options: EdgeListOptions) -> Result<(DirectedGraph, LoadReport)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| OimError::io(path, e))?;
    load_edge_list(BufReader::new(file), options)
}
