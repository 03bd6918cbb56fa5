use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::snapshot::SNAPSHOT_VERSION;
use super::store::{Edge, KnowledgeGraph, Node};
use super::{KgError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Json,
    Dot,
}

impl FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ExportFormat::Json),
            "dot" => Ok(ExportFormat::Dot),
            other => Err(format!(
                "unknown export format {other:?} (expected json or dot)"
            )),
        }
    }
}

/// Export document: the snapshot shape without the checksum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub version: u32,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

const CAPTION_CHARS: usize = 40;

fn short(text: &str) -> String {
    let mut out: String = text.chars().take(CAPTION_CHARS).collect();
    if text.chars().count() > CAPTION_CHARS {
        out.push_str("...");
    }
    out
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\")
        .replace('"', "\\\"")
        .replace('\n', " ")
}

impl KnowledgeGraph {
    pub fn to_document(&self) -> GraphDocument {
        GraphDocument {
            version: SNAPSHOT_VERSION,
            nodes: self.nodes().cloned().collect(),
            edges: self.edges().cloned().collect(),
        }
    }

    pub fn from_document(doc: GraphDocument) -> Result<Self> {
        if doc.version != SNAPSHOT_VERSION {
            return Err(KgError::CorruptSnapshot(format!(
                "unsupported version {}",
                doc.version
            )));
        }
        Self::from_parts(doc.nodes, doc.edges)
    }

    pub fn export(&self, format: ExportFormat) -> String {
        match format {
            ExportFormat::Json => {
                serde_json::to_string_pretty(&self.to_document()).expect("document serializes")
            }
            ExportFormat::Dot => self.to_dot(),
        }
    }

    fn to_dot(&self) -> String {
        let mut out = String::from("digraph ideaforge {\n  rankdir=LR;\n");
        for n in self.nodes() {
            let caption = format!("{}: {}", n.label, short(&n.caption()));
            let _ = writeln!(out, "  n{} [label=\"{}\"];", n.id, dot_escape(&caption));
        }
        for e in self.edges() {
            let _ = writeln!(
                out,
                "  n{} -> n{} [label=\"{}\"];",
                e.src, e.dst, e.edge_type
            );
        }
        out.push_str("}\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::{props, EdgeType, NodeLabel};

    #[test]
    fn empty_json_export_has_empty_arrays() {
        let doc: serde_json::Value =
            serde_json::from_str(&KnowledgeGraph::new().export(ExportFormat::Json)).unwrap();
        assert_eq!(doc["nodes"], serde_json::json!([]));
        assert_eq!(doc["edges"], serde_json::json!([]));
        assert!(doc.get("checksum").is_none());
    }

    #[test]
    fn dot_escapes_and_truncates() {
        let mut g = KnowledgeGraph::new();
        let p = g
            .create_node(
                NodeLabel::Problem,
                props([
                    (
                        "statement",
                        "a \"quoted\" statement that runs on well past forty characters",
                    ),
                    ("domain", "d"),
                ]),
            )
            .unwrap();
        let c = g
            .create_node(
                NodeLabel::Contradiction,
                props([("improving", "speed"), ("worsening", "cost")]),
            )
            .unwrap();
        g.create_edge(p, c, EdgeType::HasContradiction, Default::default())
            .unwrap();
        let dot = g.export(ExportFormat::Dot);
        assert!(dot.starts_with("digraph"));
        assert!(dot.contains("n1 [label=\"Problem: a \\\"quoted\\\" statement"));
        assert!(dot.contains("...\"];"));
        assert!(dot.contains("n1 -> n2 [label=\"HAS_CONTRADICTION\"];"));
    }

    #[test]
    fn json_export_reimports() {
        let mut g = KnowledgeGraph::new();
        g.create_node(
            NodeLabel::Problem,
            props([("statement", "s"), ("domain", "d")]),
        )
        .unwrap();
        let doc: GraphDocument = serde_json::from_str(&g.export(ExportFormat::Json)).unwrap();
        let back = KnowledgeGraph::from_document(doc).unwrap();
        assert_eq!(back.to_document(), g.to_document());
    }
}
