use serde_json::{Map, Value};

use super::{ask, check_problem, fallback_subject, text_field, AgentReport, Recorder};
use crate::kg::{props, EdgeType, KgError, KnowledgeGraph, Methodology, NodeId, NodeLabel};
use crate::llm::{LlmSettings, TextGenerator};

const PERSONAS_ON_LLM_PATH: usize = 2;
const DEFAULT_PAIN: f64 = 0.8;

fn prompt(idea: &str) -> String {
    format!(
        "You are a Design Thinking facilitator running the empathize and define stages. \
         Idea: \"{idea}\".\n\
         Describe two user personas, each with a job-to-be-done and a pain level from 1 to 5. \
         Formulate How-Might-We questions and derive one user-centred patent claim.\n\
         Answer as JSON: {{\"personas\": [{{\"persona\": \"...\", \"job_to_be_done\": \"...\", \
         \"pain_level\": 4}}, {{\"persona\": \"...\", \"job_to_be_done\": \"...\", \
         \"pain_level\": 3}}], \"hmw\": [\"How might we ...?\"], \"claim\": \"...\"}}"
    )
}

/// Pain level in [0, 1]. Values in (1, 5] are read as a 1-5 ordinal.
fn normalize_pain(v: f64) -> Option<f64> {
    if (0.0..=1.0).contains(&v) {
        Some(v)
    } else if v > 1.0 && v <= 5.0 {
        Some(v / 5.0)
    } else {
        None
    }
}

struct Persona {
    persona: String,
    job: String,
    pain: f64,
}

fn default_persona(subject: &str, ordinal: usize) -> Persona {
    match ordinal {
        0 => Persona {
            persona: format!("Primary user of {subject}"),
            job: format!("Get trustworthy answers from {subject} without specialist help"),
            pain: DEFAULT_PAIN,
        },
        _ => Persona {
            persona: format!("Intermediary supporting users of {subject}"),
            job: format!("Help others act on what {subject} tells them"),
            pain: 0.6,
        },
    }
}

fn parse_personas(raw: Option<&Value>) -> (Vec<Persona>, bool) {
    let mut out = Vec::new();
    let mut substituted = false;
    for entry in raw.and_then(Value::as_array).into_iter().flatten() {
        if out.len() == PERSONAS_ON_LLM_PATH {
            break;
        }
        let Some(obj) = entry.as_object() else {
            substituted = true;
            continue;
        };
        let (Some(persona), Some(job)) = (
            text_field(obj, "persona"),
            text_field(obj, "job_to_be_done"),
        ) else {
            substituted = true;
            continue;
        };
        let pain = match obj
            .get("pain_level")
            .and_then(Value::as_f64)
            .and_then(normalize_pain)
        {
            Some(p) => p,
            None => {
                substituted = true;
                DEFAULT_PAIN
            }
        };
        out.push(Persona { persona, job, pain });
    }
    (out, substituted)
}

fn hmw_text(answer: &Map<String, Value>) -> Option<String> {
    match answer.get("hmw")? {
        Value::String(s) if !s.trim().is_empty() => Some(s.trim().to_string()),
        Value::Array(items) => {
            let qs: Vec<&str> = items
                .iter()
                .filter_map(Value::as_str)
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .collect();
            (!qs.is_empty()).then(|| qs.join(" | "))
        }
        _ => None,
    }
}

/// UserNeed nodes MOTIVATING the problem plus one DT claim. Two personas when
/// the LLM supplies at least one usable persona, one default persona otherwise.
/// How-Might-We questions are stored on the claim as `hmw`.
pub fn run_design_thinking(
    idea: &str,
    problem_id: NodeId,
    graph: &mut KnowledgeGraph,
    llm: &dyn TextGenerator,
    settings: &LlmSettings,
) -> Result<AgentReport, KgError> {
    check_problem(graph, problem_id)?;
    let subject = fallback_subject(idea);
    let answer = ask(llm, settings, prompt(idea), &["personas"]);
    let mut used_fallback = answer.is_none();
    let answer = answer.unwrap_or_default();

    let (mut personas, substituted) = parse_personas(answer.get("personas"));
    used_fallback |= substituted;
    if personas.is_empty() {
        used_fallback = true;
        personas.push(default_persona(&subject, 0));
    } else {
        while personas.len() < PERSONAS_ON_LLM_PATH {
            used_fallback = true;
            personas.push(default_persona(&subject, personas.len()));
        }
    }
    let hmw = hmw_text(&answer).unwrap_or_else(|| {
        used_fallback = true;
        format!("How might we make {subject} usable by the people who need it most?")
    });
    let claim_text = text_field(&answer, "claim").unwrap_or_else(|| {
        used_fallback = true;
        format!("A user-centred system for {subject}")
    });

    let mut rec = Recorder::new(graph);
    let mut need_ids = Vec::new();
    for p in personas {
        let mut np = props([("persona", p.persona), ("job_to_be_done", p.job)]);
        np.insert("pain_level".into(), p.pain.into());
        need_ids.push(rec.node(NodeLabel::UserNeed, np)?);
    }
    let claim = rec.claim(
        Methodology::DesignThinking,
        &claim_text,
        problem_id,
        props([("hmw", hmw)]),
    )?;
    for id in need_ids {
        rec.edge(id, problem_id, EdgeType::Motivates)?;
    }
    Ok(rec.finish(Methodology::DesignThinking, claim, used_fallback))
}
