//! TRIZ, Design Thinking and SCAMPER agents.
//!
//! Each agent applies a fixed graph-update protocol. The LLM only supplies
//! wording; whenever its output is missing, malformed or out of range the
//! agent substitutes deterministic defaults derived from the idea text, so a
//! run always completes.

mod design_thinking;
mod scamper;
mod triz;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::kg::{
    EdgeId, EdgeType, KgError, KnowledgeGraph, Methodology, NodeId, NodeLabel, Properties,
};
use crate::llm::{generate_json, GenerationRequest, JsonOutcome, LlmSettings, TextGenerator};
use crate::text::informative_phrase;

pub use design_thinking::run_design_thinking;
pub use scamper::run_scamper;
pub use triz::{principle_name, run_triz, TRIZ_PRINCIPLES};

/// Number of informative tokens used to build fallback subjects.
pub const SUBJECT_TOKENS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentReport {
    pub methodology: Methodology,
    pub created_node_ids: Vec<NodeId>,
    pub created_edge_ids: Vec<EdgeId>,
    pub used_fallback: bool,
    pub claim_id: NodeId,
}

/// The short noun phrase fallback templates are built around.
pub fn fallback_subject(idea: &str) -> String {
    let phrase = informative_phrase(idea, SUBJECT_TOKENS);
    if phrase.is_empty() {
        idea.trim().to_string()
    } else {
        phrase
    }
}

/// Records every node and edge an agent creates.
struct Recorder<'g> {
    graph: &'g mut KnowledgeGraph,
    nodes: Vec<NodeId>,
    edges: Vec<EdgeId>,
}

impl<'g> Recorder<'g> {
    fn new(graph: &'g mut KnowledgeGraph) -> Self {
        Self {
            graph,
            nodes: Vec::new(),
            edges: Vec::new(),
        }
    }

    fn node(&mut self, label: NodeLabel, props: Properties) -> Result<NodeId, KgError> {
        let id = self.graph.create_node(label, props)?;
        self.nodes.push(id);
        Ok(id)
    }

    fn edge(&mut self, src: NodeId, dst: NodeId, t: EdgeType) -> Result<EdgeId, KgError> {
        let id = self.graph.create_edge(src, dst, t, Properties::new())?;
        self.edges.push(id);
        Ok(id)
    }

    fn claim(
        &mut self,
        methodology: Methodology,
        text: &str,
        problem_id: NodeId,
        extra: Properties,
    ) -> Result<NodeId, KgError> {
        let mut p = crate::kg::props([
            ("text", text.to_string()),
            ("methodology", methodology.as_str().to_string()),
            ("problem_id", problem_id.to_string()),
        ]);
        p.insert("strength".into(), methodology.strength().into());
        p.extend(extra);
        self.node(NodeLabel::Claim, p)
    }

    fn finish(
        self,
        methodology: Methodology,
        claim_id: NodeId,
        used_fallback: bool,
    ) -> AgentReport {
        AgentReport {
            methodology,
            created_node_ids: self.nodes,
            created_edge_ids: self.edges,
            used_fallback,
            claim_id,
        }
    }
}

fn ask(
    llm: &dyn TextGenerator,
    settings: &LlmSettings,
    prompt: String,
    keys: &[&str],
) -> Option<Map<String, Value>> {
    let request = match GenerationRequest::new(prompt, settings) {
        Ok(r) => r,
        Err(e) => {
            log::warn!("{e}");
            return None;
        }
    };
    match generate_json(llm, &request, keys) {
        JsonOutcome::Parsed(m) => Some(m),
        JsonOutcome::Malformed { reason, .. } => {
            log::info!("llm output malformed ({reason}); using defaults");
            None
        }
        JsonOutcome::Unavailable(reason) => {
            log::info!("llm unavailable ({reason}); using defaults");
            None
        }
    }
}

/// Non-empty trimmed string field.
fn text_field(map: &Map<String, Value>, key: &str) -> Option<String> {
    map.get(key)
        .and_then(Value::as_str)
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
}

fn check_problem(graph: &KnowledgeGraph, problem_id: NodeId) -> Result<(), KgError> {
    graph
        .expect_label(problem_id, NodeLabel::Problem)
        .map(|_| ())
}
