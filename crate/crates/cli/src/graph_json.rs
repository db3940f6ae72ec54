//! Canonical graph files: `{"nodes": [{"id", "type"}], "edges": [[i, j], ...]}`
//! with 0-based indices, `i < j`, edges sorted lexicographically. The writer
//! emits one node or edge per line so that equal graphs give equal bytes.

use std::fmt::Write as _;
use std::path::Path;

use ccm_core::{Graph, NodeType};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::output;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeEntry {
    pub id: String,
    #[serde(rename = "type")]
    pub node_type: NodeType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub nodes: Vec<NodeEntry>,
    pub edges: Vec<[u64; 2]>,
}

impl GraphFile {
    pub fn from_graph(g: &Graph) -> Self {
        let nodes = g
            .node_ids()
            .iter()
            .zip(g.node_types())
            .map(|(id, &t)| NodeEntry { id: id.clone(), node_type: t })
            .collect();
        let edges = g.edges().iter().map(|&(i, j)| [i as u64, j as u64]).collect();
        Self { nodes, edges }
    }

    /// Validates through [`Graph::new`]; unsorted or reversed edges are
    /// accepted and canonicalized.
    pub fn into_graph(self) -> ccm_core::Result<Graph> {
        let (ids, types) = self.nodes.into_iter().map(|n| (n.id, n.node_type)).unzip();
        let edges = self.edges.into_iter().map(|[i, j]| (i as usize, j as usize));
        Graph::new(ids, types, edges)
    }
}

pub fn to_canonical_json(g: &Graph) -> String {
    let mut s = String::from("{\n  \"nodes\": [");
    for (k, (id, t)) in g.node_ids().iter().zip(g.node_types()).enumerate() {
        let sep = if k == 0 { "\n" } else { ",\n" };
        let id = serde_json::to_string(id).expect("strings serialize");
        let t = serde_json::to_string(t).expect("node types serialize");
        write!(s, "{sep}    {{\"id\": {id}, \"type\": {t}}}").unwrap();
    }
    s.push_str(if g.node_count() == 0 { "],\n" } else { "\n  ],\n" });
    s.push_str("  \"edges\": [");
    for (k, (i, j)) in g.edges().iter().enumerate() {
        let sep = if k == 0 { "\n" } else { ",\n" };
        write!(s, "{sep}    [{i}, {j}]").unwrap();
    }
    s.push_str(if g.edge_count() == 0 { "]\n}\n" } else { "\n  ]\n}\n" });
    s
}

pub fn parse_graph(text: &str, path: &Path) -> Result<Graph> {
    let file: GraphFile = serde_json::from_str(text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        line: e.line() as u64,
        message: e.to_string(),
    })?;
    Ok(file.into_graph()?)
}

pub fn read_graph(path: &Path) -> Result<Graph> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_graph(&text, path)
}

pub fn write_graph(path: &Path, g: &Graph) -> Result<()> {
    output::write_atomic(path, to_canonical_json(g).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_byte_stable() {
        let g = Graph::new(
            vec!["b".into(), "a".into(), "c\"q".into()],
            vec![NodeType::Primary, NodeType::Specialty, NodeType::Untyped],
            [(2, 0), (0, 1)],
        )
        .unwrap();
        let text = to_canonical_json(&g);
        assert_eq!(
            text,
            "{\n  \"nodes\": [\n    {\"id\": \"b\", \"type\": \"primary\"},\n    {\"id\": \"a\", \"type\": \"specialty\"},\n    {\"id\": \"c\\\"q\", \"type\": \"untyped\"}\n  ],\n  \"edges\": [\n    [0, 1],\n    [0, 2]\n  ]\n}\n"
        );
        let back = parse_graph(&text, Path::new("g.json")).unwrap();
        assert_eq!(back, g);
        assert_eq!(to_canonical_json(&back), text);
    }

    #[test]
    fn edgeless_graph() {
        let g = Graph::with_indices(1, []).unwrap();
        let text = to_canonical_json(&g);
        assert!(text.contains("\"edges\": []"));
        assert_eq!(parse_graph(&text, Path::new("g.json")).unwrap(), g);
    }

    #[test]
    fn rejects_self_loops_and_unknown_fields() {
        let bad = r#"{"nodes": [{"id": "a", "type": "primary"}], "edges": [[0, 0]]}"#;
        assert!(matches!(parse_graph(bad, Path::new("g")), Err(CliError::Core(_))));
        let extra = r#"{"nodes": [], "edges": [], "x": 1}"#;
        assert!(matches!(parse_graph(extra, Path::new("g")), Err(CliError::Parse { .. })));
    }
}
