use serde_json::Value;

use super::{ask, check_problem, fallback_subject, text_field, AgentReport, Recorder};
use crate::kg::{props, EdgeType, KgError, KnowledgeGraph, Methodology, NodeId, NodeLabel};
use crate::llm::{LlmSettings, TextGenerator};

/// The 40 inventive principles, indexed by `number - 1`.
pub const TRIZ_PRINCIPLES: [&str; 40] = [
    "Segmentation",
    "Taking out",
    "Local quality",
    "Asymmetry",
    "Merging",
    "Universality",
    "Nested doll",
    "Anti-weight",
    "Preliminary anti-action",
    "Preliminary action",
    "Beforehand cushioning",
    "Equipotentiality",
    "The other way round",
    "Spheroidality",
    "Dynamics",
    "Partial or excessive actions",
    "Another dimension",
    "Mechanical vibration",
    "Periodic action",
    "Continuity of useful action",
    "Skipping",
    "Blessing in disguise",
    "Feedback",
    "Intermediary",
    "Self-service",
    "Copying",
    "Cheap short-living objects",
    "Mechanics substitution",
    "Pneumatics and hydraulics",
    "Flexible shells and thin films",
    "Porous materials",
    "Color changes",
    "Homogeneity",
    "Discarding and recovering",
    "Parameter changes",
    "Phase transitions",
    "Thermal expansion",
    "Strong oxidants",
    "Inert atmosphere",
    "Composite materials",
];

pub fn principle_name(number: u32) -> Option<&'static str> {
    (1..=40)
        .contains(&number)
        .then(|| TRIZ_PRINCIPLES[number as usize - 1])
}

/// Defaults in preference order; Segmentation and Preliminary action first.
const FALLBACK_ORDER: [u32; 4] = [1, 10, 2, 15];

fn fallback_description(number: u32, subject: &str) -> String {
    match number {
        1 => format!("Divide {subject} into independent, separately deliverable parts"),
        10 => format!("Prepare the knowledge and context {subject} needs before the user asks"),
        _ => format!(
            "Apply {} to {subject}",
            principle_name(number)
                .unwrap_or("the principle")
                .to_lowercase()
        ),
    }
}

fn prompt(idea: &str) -> String {
    format!(
        "You are a TRIZ analyst. Idea: \"{idea}\".\n\
         Identify the technical contradiction: the parameter being improved and the parameter \
         that worsens as a result. Select two of the 40 TRIZ inventive principles that resolve it \
         and write one patent claim grounded in them.\n\
         Answer as JSON: {{\"improving\": \"...\", \"worsening\": \"...\", \
         \"principles\": [{{\"number\": 1, \"name\": \"...\", \"description\": \"...\"}}, \
         {{\"number\": 10, \"name\": \"...\", \"description\": \"...\"}}], \"claim\": \"...\"}}"
    )
}

struct PrincipleChoice {
    number: u32,
    name: String,
    description: String,
}

fn parse_principles(raw: Option<&Value>, subject: &str) -> (Vec<PrincipleChoice>, bool) {
    let mut chosen: Vec<PrincipleChoice> = Vec::new();
    let mut substituted = false;
    let entries = raw.and_then(Value::as_array).cloned().unwrap_or_default();
    for entry in &entries {
        if chosen.len() == 2 {
            break;
        }
        let Some(obj) = entry.as_object() else {
            substituted = true;
            continue;
        };
        let number = obj
            .get("number")
            .or_else(|| obj.get("triz_number"))
            .and_then(Value::as_f64)
            .filter(|n| n.fract() == 0.0 && (1.0..=40.0).contains(n))
            .map(|n| n as u32);
        let Some(number) = number else {
            substituted = true;
            continue;
        };
        if chosen.iter().any(|p| p.number == number) {
            substituted = true;
            continue;
        }
        let name =
            text_field(obj, "name").unwrap_or_else(|| principle_name(number).unwrap().to_string());
        let description =
            text_field(obj, "description").unwrap_or_else(|| fallback_description(number, subject));
        chosen.push(PrincipleChoice {
            number,
            name,
            description,
        });
    }
    for number in FALLBACK_ORDER {
        if chosen.len() == 2 {
            break;
        }
        if chosen.iter().any(|p| p.number == number) {
            continue;
        }
        substituted = true;
        chosen.push(PrincipleChoice {
            number,
            name: principle_name(number).unwrap().to_string(),
            description: fallback_description(number, subject),
        });
    }
    (chosen, substituted)
}

/// Contradiction + two principles + one claim, wired
/// Problem → Contradiction → Principle ×2 → Claim (five edges).
pub fn run_triz(
    idea: &str,
    problem_id: NodeId,
    graph: &mut KnowledgeGraph,
    llm: &dyn TextGenerator,
    settings: &LlmSettings,
) -> Result<AgentReport, KgError> {
    check_problem(graph, problem_id)?;
    let subject = fallback_subject(idea);
    let answer = ask(
        llm,
        settings,
        prompt(idea),
        &["improving", "worsening", "principles"],
    );
    let mut used_fallback = answer.is_none();
    let answer = answer.unwrap_or_default();

    let mut field = |key: &str, default: String| {
        text_field(&answer, key).unwrap_or_else(|| {
            used_fallback = true;
            default
        })
    };
    let improving = field("improving", format!("accessibility of {subject}"));
    let worsening = field("worsening", format!("complexity of {subject}"));
    let claim_text = field(
        "claim",
        format!("A method for resolving technical contradictions in {subject}"),
    );
    let (principles, substituted) = parse_principles(answer.get("principles"), &subject);
    used_fallback |= substituted;

    let mut rec = Recorder::new(graph);
    let contradiction = rec.node(
        NodeLabel::Contradiction,
        props([("improving", improving), ("worsening", worsening)]),
    )?;
    let mut principle_ids = Vec::with_capacity(2);
    for p in principles {
        let mut pp = props([("name", p.name), ("description", p.description)]);
        pp.insert("triz_number".into(), p.number.into());
        principle_ids.push(rec.node(NodeLabel::Principle, pp)?);
    }
    let claim = rec.claim(
        Methodology::Triz,
        &claim_text,
        problem_id,
        Default::default(),
    )?;

    rec.edge(problem_id, contradiction, EdgeType::HasContradiction)?;
    for &p in &principle_ids {
        rec.edge(contradiction, p, EdgeType::ResolvedBy)?;
    }
    for &p in &principle_ids {
        rec.edge(p, claim, EdgeType::Supports)?;
    }
    Ok(rec.finish(Methodology::Triz, claim, used_fallback))
}
