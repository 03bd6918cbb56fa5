use serde_json::{Map, Value};

use super::{ask, check_problem, fallback_subject, text_field, AgentReport, Recorder};
use crate::kg::{
    props, EdgeType, KgError, KnowledgeGraph, Methodology, NodeId, NodeLabel, ScamperType,
};
use crate::llm::{LlmSettings, TextGenerator};

const TRANSFORMATIONS: usize = 3;

fn prompt(idea: &str) -> String {
    format!(
        "You are applying SCAMPER (Substitute, Combine, Adapt, Modify, Put to other uses, \
         Eliminate, Reverse) to the idea: \"{idea}\".\n\
         Propose three transformations using three different operations, pick the most \
         promising one (0-based index) and derive one patent claim from it.\n\
         Answer as JSON: {{\"transformations\": [{{\"scamper_type\": \"Substitute\", \
         \"description\": \"...\"}}, ...], \"most_promising\": 0, \"claim\": \"...\"}}"
    )
}

fn default_description(t: ScamperType, subject: &str) -> String {
    match t {
        ScamperType::Substitute => format!(
            "Substitute the conventional interface of {subject} with an alternative channel"
        ),
        ScamperType::Combine => format!("Combine {subject} with complementary existing services"),
        ScamperType::Adapt => format!("Adapt proven mechanisms from other domains to {subject}"),
        ScamperType::Modify => format!("Modify the scale or form factor of {subject}"),
        ScamperType::PutToOtherUses => {
            format!("Put {subject} to uses beyond its original audience")
        }
        ScamperType::Eliminate => format!("Eliminate non-essential steps from {subject}"),
        ScamperType::Reverse => format!("Reverse or rearrange the workflow of {subject}"),
    }
}

struct Transformation {
    kind: ScamperType,
    description: String,
}

fn parse_transformations(raw: Option<&Value>, subject: &str) -> (Vec<Transformation>, bool) {
    let mut out: Vec<Transformation> = Vec::new();
    let mut substituted = false;
    for entry in raw.and_then(Value::as_array).into_iter().flatten() {
        if out.len() == TRANSFORMATIONS {
            break;
        }
        let kind = entry
            .as_object()
            .and_then(|o| o.get("scamper_type"))
            .and_then(Value::as_str)
            .and_then(ScamperType::parse_loose);
        let Some(kind) = kind.filter(|k| out.iter().all(|t| t.kind != *k)) else {
            substituted = true;
            continue;
        };
        let description = entry
            .as_object()
            .and_then(|o| text_field(o, "description"))
            .unwrap_or_else(|| {
                substituted = true;
                default_description(kind, subject)
            });
        out.push(Transformation { kind, description });
    }
    // Substitute, Combine, Adapt first, then the remaining operations.
    for kind in ScamperType::ALL {
        if out.len() == TRANSFORMATIONS {
            break;
        }
        if out.iter().any(|t| t.kind == kind) {
            continue;
        }
        substituted = true;
        out.push(Transformation {
            kind,
            description: default_description(kind, subject),
        });
    }
    (out, substituted)
}

fn most_promising(answer: &Map<String, Value>, chosen: &[Transformation]) -> Option<usize> {
    match answer.get("most_promising")? {
        Value::Number(n) => n.as_u64().map(|i| i as usize).filter(|i| *i < chosen.len()),
        Value::String(s) => {
            let kind = ScamperType::parse_loose(s)?;
            chosen.iter().position(|t| t.kind == kind)
        }
        _ => None,
    }
}

/// Three distinct transformations, one claim and a single GENERATES edge from
/// the most promising transformation (the first one on fallback).
pub fn run_scamper(
    idea: &str,
    problem_id: NodeId,
    graph: &mut KnowledgeGraph,
    llm: &dyn TextGenerator,
    settings: &LlmSettings,
) -> Result<AgentReport, KgError> {
    check_problem(graph, problem_id)?;
    let subject = fallback_subject(idea);
    let answer = ask(llm, settings, prompt(idea), &["transformations"]);
    let mut used_fallback = answer.is_none();
    let answer = answer.unwrap_or_default();

    let (transformations, substituted) =
        parse_transformations(answer.get("transformations"), &subject);
    used_fallback |= substituted;
    let best = most_promising(&answer, &transformations).unwrap_or_else(|| {
        used_fallback = true;
        0
    });
    let claim_text = text_field(&answer, "claim").unwrap_or_else(|| {
        used_fallback = true;
        format!("A transformed approach combining SCAMPER principles for {subject}")
    });

    let mut rec = Recorder::new(graph);
    let mut ids = Vec::with_capacity(TRANSFORMATIONS);
    for t in transformations {
        ids.push(rec.node(
            NodeLabel::Transformation,
            props([
                ("scamper_type", t.kind.as_str().to_string()),
                ("description", t.description),
            ]),
        )?);
    }
    let claim = rec.claim(
        Methodology::Scamper,
        &claim_text,
        problem_id,
        Default::default(),
    )?;
    rec.edge(ids[best], claim, EdgeType::Generates)?;
    Ok(rec.finish(Methodology::Scamper, claim, used_fallback))
}
