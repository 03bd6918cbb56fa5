use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::schema::{validate_node, EdgeType, Methodology, NodeLabel, PropValue, Properties};
use super::{EdgeId, KgError, NodeId, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub label: NodeLabel,
    pub properties: Properties,
}

impl Node {
    pub fn str_prop(&self, key: &str) -> Option<&str> {
        self.properties.get(key).and_then(PropValue::as_str)
    }

    pub fn num_prop(&self, key: &str) -> Option<f64> {
        self.properties.get(key).and_then(PropValue::as_f64)
    }

    /// Short caption: the label's primary text property.
    pub fn caption(&self) -> String {
        self.properties
            .get(self.label.caption_property())
            .map(|v| v.to_string())
            .unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub id: EdgeId,
    pub src: NodeId,
    pub dst: NodeId,
    #[serde(rename = "type")]
    pub edge_type: EdgeType,
    pub properties: Properties,
}

impl Edge {
    /// The endpoint opposite `node`, if `node` is an endpoint.
    pub fn other(&self, node: NodeId) -> Option<NodeId> {
        if self.src == node {
            Some(self.dst)
        } else if self.dst == node {
            Some(self.src)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub node_counts: BTreeMap<NodeLabel, usize>,
    pub edge_counts: BTreeMap<EdgeType, usize>,
    pub total_nodes: usize,
    pub total_edges: usize,
}

/// Nodes and edges sorted by id; every edge has both endpoints among the nodes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Subgraph {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

impl Subgraph {
    pub fn with_label(&self, label: NodeLabel) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(move |n| n.label == label)
    }

    pub fn count(&self, label: NodeLabel) -> usize {
        self.with_label(label).count()
    }
}

#[derive(Debug, Clone, Default)]
pub struct KnowledgeGraph {
    nodes: BTreeMap<NodeId, Node>,
    edges: BTreeMap<EdgeId, Edge>,
    outgoing: HashMap<NodeId, Vec<EdgeId>>,
    incoming: HashMap<NodeId, Vec<EdgeId>>,
    convergent: HashMap<(NodeId, NodeId), EdgeId>,
    next_node: u64,
    next_edge: u64,
}

fn pair_key(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        Self {
            next_node: 1,
            next_edge: 1,
            ..Default::default()
        }
    }

    pub fn create_node(&mut self, label: NodeLabel, properties: Properties) -> Result<NodeId> {
        validate_node(label, &properties)?;
        let id = NodeId(self.next_node.max(1));
        self.next_node = id.0 + 1;
        self.nodes.insert(
            id,
            Node {
                id,
                label,
                properties,
            },
        );
        Ok(id)
    }

    /// Creates a typed edge. For CONVERGENT, a second call on the same
    /// unordered claim pair increments `count`, refreshes `similarity` and
    /// returns the existing edge id.
    pub fn create_edge(
        &mut self,
        src: NodeId,
        dst: NodeId,
        edge_type: EdgeType,
        mut properties: Properties,
    ) -> Result<EdgeId> {
        self.check_edge(src, dst, edge_type, &mut properties)?;
        if edge_type == EdgeType::Convergent {
            if let Some(&existing) = self.convergent.get(&pair_key(src, dst)) {
                let edge = self.edges.get_mut(&existing).expect("indexed edge exists");
                let count = edge
                    .properties
                    .get("count")
                    .and_then(PropValue::as_f64)
                    .unwrap_or(1.0);
                edge.properties
                    .insert("count".into(), PropValue::Num(count + 1.0));
                edge.properties
                    .insert("similarity".into(), properties["similarity"].clone());
                return Ok(existing);
            }
        }
        let id = EdgeId(self.next_edge.max(1));
        self.next_edge = id.0 + 1;
        self.insert_edge(Edge {
            id,
            src,
            dst,
            edge_type,
            properties,
        });
        Ok(id)
    }

    fn check_edge(
        &self,
        src: NodeId,
        dst: NodeId,
        edge_type: EdgeType,
        properties: &mut Properties,
    ) -> Result<()> {
        let s = self.nodes.get(&src).ok_or(KgError::UnknownNode(src))?;
        let d = self.nodes.get(&dst).ok_or(KgError::UnknownNode(dst))?;
        if !edge_type.allows(s.label, d.label) {
            let (es, ed) = edge_type.endpoints();
            return Err(KgError::SchemaViolation(format!(
                "{edge_type} must connect {es} -> {ed}, got {} -> {}",
                s.label, d.label
            )));
        }
        if edge_type != EdgeType::Convergent {
            return Ok(());
        }
        let ms = self.claim_methodology(src)?;
        let md = self.claim_methodology(dst)?;
        if ms == md {
            return Err(KgError::SchemaViolation(format!(
                "CONVERGENT requires distinct methodologies, both claims are {ms}"
            )));
        }
        match properties.get("similarity").and_then(PropValue::as_f64) {
            Some(sim) if (0.0..=1.0).contains(&sim) => {}
            _ => {
                return Err(KgError::SchemaViolation(
                    "CONVERGENT requires similarity in [0, 1]".into(),
                ))
            }
        }
        match properties.get("count") {
            None => {
                properties.insert("count".into(), PropValue::Num(1.0));
            }
            Some(PropValue::Num(c)) if *c >= 1.0 && c.fract() == 0.0 => {}
            Some(_) => {
                return Err(KgError::SchemaViolation(
                    "CONVERGENT count must be an integer >= 1".into(),
                ))
            }
        }
        Ok(())
    }

    fn insert_edge(&mut self, edge: Edge) {
        if edge.edge_type == EdgeType::Convergent {
            self.convergent
                .insert(pair_key(edge.src, edge.dst), edge.id);
        }
        self.outgoing.entry(edge.src).or_default().push(edge.id);
        self.incoming.entry(edge.dst).or_default().push(edge.id);
        self.edges.insert(edge.id, edge);
    }

    pub(super) fn id_counters(&self) -> (u64, u64) {
        (self.next_node.max(1), self.next_edge.max(1))
    }

    pub(super) fn raise_id_counters(&mut self, node: u64, edge: u64) {
        self.next_node = self.next_node.max(node);
        self.next_edge = self.next_edge.max(edge);
    }

    /// Re-inserts a node with a fixed id (snapshot loading).
    pub(super) fn restore_node(&mut self, node: Node) -> Result<()> {
        validate_node(node.label, &node.properties)?;
        if self.nodes.contains_key(&node.id) {
            return Err(KgError::CorruptSnapshot(format!(
                "duplicate node id {}",
                node.id
            )));
        }
        self.next_node = self.next_node.max(node.id.0 + 1);
        self.nodes.insert(node.id, node);
        Ok(())
    }

    /// Re-inserts an edge with a fixed id (snapshot loading).
    pub(super) fn restore_edge(&mut self, mut edge: Edge) -> Result<()> {
        if self.edges.contains_key(&edge.id) {
            return Err(KgError::CorruptSnapshot(format!(
                "duplicate edge id {}",
                edge.id
            )));
        }
        self.check_edge(edge.src, edge.dst, edge.edge_type, &mut edge.properties)?;
        if edge.edge_type == EdgeType::Convergent
            && self.convergent.contains_key(&pair_key(edge.src, edge.dst))
        {
            return Err(KgError::CorruptSnapshot(format!(
                "second CONVERGENT edge {} on one claim pair",
                edge.id
            )));
        }
        self.next_edge = self.next_edge.max(edge.id.0 + 1);
        self.insert_edge(edge);
        Ok(())
    }

    /// Removes a node and every edge touching it.
    pub fn remove_node(&mut self, id: NodeId) -> Result<Node> {
        let node = self.nodes.remove(&id).ok_or(KgError::UnknownNode(id))?;
        let mut touching: Vec<EdgeId> = self.outgoing.remove(&id).unwrap_or_default();
        touching.extend(self.incoming.remove(&id).unwrap_or_default());
        for eid in touching {
            if let Some(edge) = self.edges.remove(&eid) {
                if edge.edge_type == EdgeType::Convergent {
                    self.convergent.remove(&pair_key(edge.src, edge.dst));
                }
                if let Some(v) = self.outgoing.get_mut(&edge.src) {
                    v.retain(|e| *e != eid);
                }
                if let Some(v) = self.incoming.get_mut(&edge.dst) {
                    v.retain(|e| *e != eid);
                }
            }
        }
        Ok(node)
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(&id)
    }

    pub fn edge(&self, id: EdgeId) -> Option<&Edge> {
        self.edges.get(&id)
    }

    pub fn contains_node(&self, id: NodeId) -> bool {
        self.nodes.contains_key(&id)
    }

    /// Nodes in insertion (id) order.
    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    /// Edges in insertion (id) order.
    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.values()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes_with_label(&self, label: NodeLabel) -> impl Iterator<Item = &Node> {
        self.nodes.values().filter(move |n| n.label == label)
    }

    /// Node with the expected label, or `UnknownNode`.
    pub fn expect_label(&self, id: NodeId, label: NodeLabel) -> Result<&Node> {
        match self.nodes.get(&id) {
            Some(n) if n.label == label => Ok(n),
            _ => Err(KgError::UnknownNode(id)),
        }
    }

    /// Claim nodes in insertion order, optionally restricted to one methodology.
    pub fn get_claims(&self, methodology: Option<Methodology>) -> Vec<&Node> {
        self.nodes_with_label(NodeLabel::Claim)
            .filter(|n| methodology.is_none_or(|m| n.str_prop("methodology") == Some(m.as_str())))
            .collect()
    }

    pub fn claim_methodology(&self, id: NodeId) -> Result<Methodology> {
        let node = self.expect_label(id, NodeLabel::Claim)?;
        node.str_prop("methodology")
            .ok_or_else(|| KgError::SchemaViolation(format!("claim {id} has no methodology")))?
            .parse()
    }

    pub fn incoming(&self, id: NodeId, edge_type: EdgeType) -> impl Iterator<Item = &Edge> {
        self.adjacent(&self.incoming, id, edge_type)
    }

    pub fn outgoing(&self, id: NodeId, edge_type: EdgeType) -> impl Iterator<Item = &Edge> {
        self.adjacent(&self.outgoing, id, edge_type)
    }

    /// Edges of `edge_type` touching `id` in either direction.
    pub fn incident(&self, id: NodeId, edge_type: EdgeType) -> impl Iterator<Item = &Edge> {
        self.outgoing(id, edge_type)
            .chain(self.incoming(id, edge_type))
    }

    fn adjacent<'a>(
        &'a self,
        index: &'a HashMap<NodeId, Vec<EdgeId>>,
        id: NodeId,
        edge_type: EdgeType,
    ) -> impl Iterator<Item = &'a Edge> {
        index
            .get(&id)
            .into_iter()
            .flatten()
            .filter_map(|e| self.edges.get(e))
            .filter(move |e| e.edge_type == edge_type)
    }

    pub fn convergent_edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges
            .values()
            .filter(|e| e.edge_type == EdgeType::Convergent)
    }

    pub fn convergent_between(&self, a: NodeId, b: NodeId) -> Option<&Edge> {
        self.convergent
            .get(&pair_key(a, b))
            .and_then(|id| self.edges.get(id))
    }

    /// The Problem a claim was generated for, taken from its `problem_id`
    /// property when present and valid.
    pub fn claim_problem(&self, claim: &Node) -> Option<NodeId> {
        let id: NodeId = claim.str_prop("problem_id")?.parse().ok()?;
        self.expect_label(id, NodeLabel::Problem).ok().map(|n| n.id)
    }

    /// Everything that argues for a claim, walked against edge direction:
    /// SUPPORTS ← RESOLVED_BY ← HAS_CONTRADICTION chains, GENERATES sources,
    /// and the UserNeeds MOTIVATING any Problem reached (including the
    /// claim's own `problem_id`).
    pub fn get_supporting_subgraph(&self, claim_id: NodeId) -> Result<Subgraph> {
        let claim = self.expect_label(claim_id, NodeLabel::Claim)?;
        let mut nodes = BTreeSet::from([claim_id]);
        let mut edges = BTreeSet::new();
        let mut problems = BTreeSet::new();

        for sup in self.incoming(claim_id, EdgeType::Supports) {
            edges.insert(sup.id);
            nodes.insert(sup.src);
            for res in self.incoming(sup.src, EdgeType::ResolvedBy) {
                edges.insert(res.id);
                nodes.insert(res.src);
                for has in self.incoming(res.src, EdgeType::HasContradiction) {
                    edges.insert(has.id);
                    nodes.insert(has.src);
                    problems.insert(has.src);
                }
            }
        }
        for gen in self.incoming(claim_id, EdgeType::Generates) {
            edges.insert(gen.id);
            nodes.insert(gen.src);
        }
        if let Some(p) = self.claim_problem(claim) {
            nodes.insert(p);
            problems.insert(p);
        }
        for p in problems {
            for mot in self.incoming(p, EdgeType::Motivates) {
                edges.insert(mot.id);
                nodes.insert(mot.src);
            }
        }
        Ok(Subgraph {
            nodes: nodes.iter().map(|id| self.nodes[id].clone()).collect(),
            edges: edges.iter().map(|id| self.edges[id].clone()).collect(),
        })
    }

    pub fn summary(&self) -> GraphSummary {
        let mut node_counts: BTreeMap<NodeLabel, usize> =
            NodeLabel::ALL.into_iter().map(|l| (l, 0)).collect();
        let mut edge_counts: BTreeMap<EdgeType, usize> =
            EdgeType::ALL.into_iter().map(|t| (t, 0)).collect();
        for n in self.nodes.values() {
            *node_counts.entry(n.label).or_default() += 1;
        }
        for e in self.edges.values() {
            *edge_counts.entry(e.edge_type).or_default() += 1;
        }
        GraphSummary {
            node_counts,
            edge_counts,
            total_nodes: self.nodes.len(),
            total_edges: self.edges.len(),
        }
    }

    /// Full scan of the schema: node properties, edge endpoint labels,
    /// CONVERGENT methodology disjointness and uniqueness.
    pub fn check_integrity(&self) -> Result<()> {
        for n in self.nodes.values() {
            validate_node(n.label, &n.properties)?;
        }
        let mut pairs = BTreeSet::new();
        for e in self.edges.values() {
            let mut p = e.properties.clone();
            self.check_edge(e.src, e.dst, e.edge_type, &mut p)?;
            if e.edge_type == EdgeType::Convergent && !pairs.insert(pair_key(e.src, e.dst)) {
                return Err(KgError::SchemaViolation(format!(
                    "duplicate CONVERGENT edge on pair ({}, {})",
                    e.src, e.dst
                )));
            }
        }
        Ok(())
    }
}
