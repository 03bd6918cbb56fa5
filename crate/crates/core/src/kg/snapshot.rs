//! Whole-graph JSON snapshots with a trailing SHA-256 checksum.
//!
//! The checksum covers the canonical serialization of `{version,
//! next_node_id, next_edge_id, nodes, edges}`; property maps are ordered and floats round-trip exactly, so
//! re-serializing a loaded body reproduces the hashed bytes.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::store::{Edge, KnowledgeGraph, Node};
use super::{KgError, Result};

pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub version: u32,
    /// Id counters, so ids of deleted elements are never reissued.
    pub next_node_id: u64,
    pub next_edge_id: u64,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub checksum: String,
}

#[derive(Serialize)]
struct Body<'a> {
    version: u32,
    next_node_id: u64,
    next_edge_id: u64,
    nodes: &'a [Node],
    edges: &'a [Edge],
}

fn body_checksum(snapshot_head: (u32, u64, u64), nodes: &[Node], edges: &[Edge]) -> String {
    let (version, next_node_id, next_edge_id) = snapshot_head;
    let body = Body {
        version,
        next_node_id,
        next_edge_id,
        nodes,
        edges,
    };
    let bytes = serde_json::to_vec(&body).expect("graph elements always serialize");
    hex::encode(Sha256::digest(&bytes))
}

impl Snapshot {
    pub fn verify(&self) -> Result<()> {
        if self.version != SNAPSHOT_VERSION {
            return Err(KgError::CorruptSnapshot(format!(
                "unsupported version {} (expected {SNAPSHOT_VERSION})",
                self.version
            )));
        }
        let head = (self.version, self.next_node_id, self.next_edge_id);
        let expected = body_checksum(head, &self.nodes, &self.edges);
        if expected != self.checksum {
            return Err(KgError::CorruptSnapshot("checksum mismatch".into()));
        }
        Ok(())
    }
}

impl KnowledgeGraph {
    pub fn to_snapshot(&self) -> Snapshot {
        let nodes: Vec<Node> = self.nodes().cloned().collect();
        let edges: Vec<Edge> = self.edges().cloned().collect();
        let (next_node_id, next_edge_id) = self.id_counters();
        let checksum = body_checksum(
            (SNAPSHOT_VERSION, next_node_id, next_edge_id),
            &nodes,
            &edges,
        );
        Snapshot {
            version: SNAPSHOT_VERSION,
            next_node_id,
            next_edge_id,
            nodes,
            edges,
            checksum,
        }
    }

    /// Rebuilds a graph from a verified snapshot, preserving ids.
    pub fn from_snapshot(snapshot: Snapshot) -> Result<Self> {
        snapshot.verify()?;
        let mut graph = Self::from_parts(snapshot.nodes, snapshot.edges)?;
        graph.raise_id_counters(snapshot.next_node_id, snapshot.next_edge_id);
        Ok(graph)
    }

    pub(super) fn from_parts(nodes: Vec<Node>, edges: Vec<Edge>) -> Result<Self> {
        let mut graph = KnowledgeGraph::new();
        for n in nodes {
            graph.restore_node(n)?;
        }
        for e in edges {
            graph.restore_edge(e)?;
        }
        Ok(graph)
    }

    /// Writes the snapshot atomically (temp file + rename).
    pub fn snapshot_save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io = |source| KgError::IoFailure {
            path: path.to_path_buf(),
            source,
        };
        let json = serde_json::to_vec_pretty(&self.to_snapshot()).expect("snapshot serializes");
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(io)?;
        }
        let tmp = path.with_extension("tmp");
        let mut f = fs::File::create(&tmp).map_err(io)?;
        f.write_all(&json).map_err(io)?;
        f.sync_all().map_err(io)?;
        fs::rename(&tmp, path).map_err(io)
    }

    pub fn snapshot_load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|source| KgError::IoFailure {
            path: path.to_path_buf(),
            source,
        })?;
        let snapshot: Snapshot = serde_json::from_slice(&bytes)
            .map_err(|e| KgError::CorruptSnapshot(format!("unreadable snapshot: {e}")))?;
        Self::from_snapshot(snapshot)
    }
}
