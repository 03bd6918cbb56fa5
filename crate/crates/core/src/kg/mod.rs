//! In-process property graph enforcing the innovation-graph schema.
//!
//! Eight node labels and eight edge types, each edge type bound to exactly one
//! (source label, target label) pair. CONVERGENT edges are stored directed
//! (first-detected claim as source) but are unique per unordered claim pair;
//! re-creating one increments its `count` property.

mod export;
mod schema;
mod snapshot;
mod store;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use export::{ExportFormat, GraphDocument};
pub use schema::{
    props, validate_node, EdgeType, Methodology, NodeLabel, PropValue, Properties, ScamperType,
};
pub use snapshot::{Snapshot, SNAPSHOT_VERSION};
pub use store::{Edge, GraphSummary, KnowledgeGraph, Node, Subgraph};

#[derive(Debug, Error)]
pub enum KgError {
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("i/o failure on {path}: {source}")]
    IoFailure {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt snapshot: {0}")]
    CorruptSnapshot(String),
}

pub type Result<T> = std::result::Result<T, KgError>;

macro_rules! id_type {
    ($name:ident) => {
        /// Monotonically assigned integer id, rendered as a decimal string
        /// in snapshots and exports.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(pub u64);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }

        impl FromStr for $name {
            type Err = std::num::ParseIntError;

            fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
                s.parse().map($name)
            }
        }

        impl Serialize for $name {
            fn serialize<S: serde::Serializer>(
                &self,
                s: S,
            ) -> std::result::Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: serde::Deserializer<'de>>(
                d: D,
            ) -> std::result::Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

id_type!(NodeId);
id_type!(EdgeId);

/// Graph shared between the pipeline and the tool server: many readers or
/// one writer.
pub type SharedGraph = Arc<RwLock<KnowledgeGraph>>;

pub fn shared(graph: KnowledgeGraph) -> SharedGraph {
    Arc::new(RwLock::new(graph))
}

/// Adapter point for a remote graph database. Nothing implements it yet; the
/// in-process store is the only backend.
pub trait RemoteBackend: Send + Sync {
    fn push(&self, snapshot: &Snapshot) -> Result<()>;
    fn pull(&self) -> Result<Snapshot>;
}
