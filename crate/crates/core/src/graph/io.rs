//! Plain text graph format: `n m` on the first line, then `m` lines `u v`.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::{Graph, GraphError, NodeId};

pub fn write_graph(g: &Graph) -> String {
    let edges = g.edges();
    let mut out = format!("{} {}\n", g.node_count(), edges.len());
    for (a, b) in edges {
        let _ = writeln!(out, "{a} {b}");
    }
    out
}

fn parse_err(line: usize, msg: impl Into<String>) -> GraphError {
    GraphError::Parse { line, msg: msg.into() }
}

fn parse_pair(line: &str, lineno: usize) -> Result<(u64, u64), GraphError> {
    let mut it = line.split_whitespace();
    let a = it.next().ok_or_else(|| parse_err(lineno, "missing first field"))?;
    let b = it.next().ok_or_else(|| parse_err(lineno, "missing second field"))?;
    if it.next().is_some() {
        return Err(parse_err(lineno, "trailing fields"));
    }
    let a = a.parse().map_err(|e| parse_err(lineno, format!("{e}")))?;
    let b = b.parse().map_err(|e| parse_err(lineno, format!("{e}")))?;
    Ok((a, b))
}

/// Node ids are the endpoints mentioned by the edges (a single node with no
/// edges is id 1). The header counts must match.
pub fn read_graph(text: &str) -> Result<Graph, GraphError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty input"))?;
    let (n, m) = parse_pair(header, 1)?;
    let mut edges = Vec::with_capacity(m as usize);
    for (i, line) in lines {
        let (a, b) = parse_pair(line, i + 1)?;
        edges.push((NodeId(a), NodeId(b)));
    }
    if edges.len() as u64 != m {
        return Err(parse_err(1, format!("header says {m} edges, found {}", edges.len())));
    }
    let mut ids: BTreeSet<NodeId> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
    if ids.is_empty() && n == 1 {
        ids.insert(NodeId(1));
    }
    if ids.len() as u64 != n {
        return Err(parse_err(1, format!("header says {n} nodes, edges mention {}", ids.len())));
    }
    Graph::with_ids(ids.into_iter().collect(), &edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, GraphKind};

    #[test]
    fn roundtrip() {
        let g = generate(&GraphKind::Grid { rows: 3, cols: 3 }, 0).unwrap();
        let text = write_graph(&g);
        assert!(text.starts_with("9 12\n"));
        let h = read_graph(&text).unwrap();
        assert_eq!(h.edges(), g.edges());
        assert_eq!(read_graph("1 0\n").unwrap().nodes(), &[NodeId(1)]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(read_graph(""), Err(GraphError::Parse { .. })));
        assert!(matches!(read_graph("3 2\n1 2\n"), Err(GraphError::Parse { .. })));
        assert!(matches!(read_graph("2 1\n1 x\n"), Err(GraphError::Parse { .. })));
        assert!(matches!(read_graph("4 2\n1 2\n3 4\n"), Err(GraphError::DisconnectedGraph(..))));
        assert!(matches!(read_graph("2 1\n1 1\n"), Err(GraphError::Parse { .. }) | Err(GraphError::SelfLoop(_))));
    }
}
