//! KG-grounded patent drafting.
//!
//! The top-ranked claims and their supporting subgraphs are collected into a
//! [`ContextBundle`], the LLM is asked for a sectioned draft, and any section
//! it fails to supply is filled from a template over the same bundle. Every
//! numbered claim is then traced back to the graph path that produced it.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::convergence::{rank_claims, ScoreWeights, SynthesisError};
use crate::kg::{EdgeType, KnowledgeGraph, Methodology, NodeId, NodeLabel};
use crate::llm::{GenerationOutcome, GenerationRequest, LlmSettings, TextGenerator};

pub const DEFAULT_TOP_K: usize = 3;

pub const DISCLAIMER: &str = "This draft was produced by a research prototype for ideation \
purposes only. It is not legal advice, has not been checked for patentability or legal \
validity, and must be reviewed by a qualified patent professional before any use.";

pub const SECTIONS: [&str; 5] = ["Title", "Field", "Background", "Abstract", "Claims"];

#[derive(Debug, Error)]
pub enum DraftError {
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
    #[error("broken trace for claim {claim_number}: node {node_id} is missing")]
    BrokenTrace {
        claim_number: usize,
        node_id: NodeId,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContradictionRef {
    pub improving: String,
    pub worsening: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrincipleRef {
    pub name: String,
    pub triz_number: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserNeedRef {
    pub persona: String,
    pub job_to_be_done: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextClaim {
    pub claim_id: NodeId,
    pub text: String,
    pub methodology: Methodology,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextBundle {
    pub problem_statement: String,
    pub contradictions: Vec<ContradictionRef>,
    pub principles: Vec<PrincipleRef>,
    pub user_needs: Vec<UserNeedRef>,
    /// Best first, in `rank_claims` order.
    pub ranked_claims: Vec<ContextClaim>,
}

/// Gathers the top `top_k` ranked claims and the problem statement,
/// contradictions, principles and user needs from their supporting subgraphs.
pub fn assemble_context(
    graph: &KnowledgeGraph,
    top_k: usize,
    weights: &ScoreWeights,
) -> Result<ContextBundle, SynthesisError> {
    if top_k == 0 {
        return Err(SynthesisError::InvalidConfig(
            "top_k must be at least 1".into(),
        ));
    }
    let ranked = rank_claims(graph, weights)?;
    let mut seen = BTreeSet::new();
    let mut bundle = ContextBundle {
        problem_statement: String::new(),
        contradictions: Vec::new(),
        principles: Vec::new(),
        user_needs: Vec::new(),
        ranked_claims: Vec::new(),
    };
    let mut problems = Vec::new();

    for r in ranked.iter().take(top_k) {
        let claim = graph.expect_label(r.claim_id, NodeLabel::Claim)?;
        bundle.ranked_claims.push(ContextClaim {
            claim_id: r.claim_id,
            text: claim.str_prop("text").unwrap_or_default().to_string(),
            methodology: graph.claim_methodology(r.claim_id)?,
            score: r.score.total,
        });
        let sub = graph.get_supporting_subgraph(r.claim_id)?;
        for n in &sub.nodes {
            if !seen.insert(n.id) {
                continue;
            }
            let s = |k: &str| n.str_prop(k).unwrap_or_default().to_string();
            match n.label {
                NodeLabel::Problem => problems.push(s("statement")),
                NodeLabel::Contradiction => bundle.contradictions.push(ContradictionRef {
                    improving: s("improving"),
                    worsening: s("worsening"),
                }),
                NodeLabel::Principle => bundle.principles.push(PrincipleRef {
                    name: s("name"),
                    triz_number: n.num_prop("triz_number").unwrap_or(0.0) as u32,
                }),
                NodeLabel::UserNeed => bundle.user_needs.push(UserNeedRef {
                    persona: s("persona"),
                    job_to_be_done: s("job_to_be_done"),
                }),
                _ => {}
            }
        }
    }
    bundle.problem_statement = problems
        .into_iter()
        .next()
        .or_else(|| {
            graph
                .nodes_with_label(NodeLabel::Problem)
                .next()
                .and_then(|p| p.str_prop("statement"))
                .map(str::to_string)
        })
        .unwrap_or_default();
    Ok(bundle)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClaimKind {
    Independent,
    DependentOn(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub node_id: NodeId,
    pub label: NodeLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DraftClaim {
    pub number: usize,
    pub text: String,
    pub kind: ClaimKind,
    /// The graph claim this numbered claim was drafted from.
    pub claim_id: NodeId,
    pub methodology: Methodology,
    /// Filled by [`PatentDraft::attach_traces`].
    pub trace: Vec<TraceStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatentDraft {
    pub title: String,
    pub field: String,
    pub background: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub claims: Vec<DraftClaim>,
    pub disclaimer: String,
    /// Sections filled from templates instead of LLM output.
    pub templated_sections: Vec<String>,
}

fn sentence(text: &str) -> String {
    let t = text.trim().trim_end_matches('.');
    format!("{t}.")
}

fn lower_first(text: &str) -> String {
    let mut chars = text.trim().chars();
    match chars.next() {
        Some(c) => c.to_lowercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn upper_first(text: &str) -> String {
    let mut chars = text.trim().chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn subject(ctx: &ContextBundle) -> String {
    let s = ctx.problem_statement.trim();
    if s.is_empty() {
        ctx.ranked_claims
            .first()
            .map(|c| lower_first(c.text.trim_end_matches('.')))
            .unwrap_or_default()
    } else {
        s.to_string()
    }
}

fn template_title(ctx: &ContextBundle) -> String {
    format!("System and Method for {}", upper_first(&subject(ctx)))
}

fn template_field(ctx: &ContextBundle) -> String {
    let mut methods: Vec<&str> = Vec::new();
    for c in &ctx.ranked_claims {
        if !methods.contains(&c.methodology.as_str()) {
            methods.push(c.methodology.as_str());
        }
    }
    format!(
        "The present disclosure relates to {}, and in particular to solutions identified through {} analysis.",
        subject(ctx),
        methods.join(", ")
    )
}

fn template_background(ctx: &ContextBundle) -> String {
    let mut parts = vec![format!(
        "Existing approaches to {} leave open problems.",
        subject(ctx)
    )];
    for c in &ctx.contradictions {
        parts.push(format!(
            "Improving {} tends to worsen {}.",
            c.improving, c.worsening
        ));
    }
    for n in &ctx.user_needs {
        parts.push(format!(
            "{} needs to {}.",
            upper_first(&n.persona),
            lower_first(n.job_to_be_done.trim_end_matches('.'))
        ));
    }
    parts.join(" ")
}

fn template_abstract(ctx: &ContextBundle) -> String {
    let mut text = format!("Disclosed is an approach to {}.", subject(ctx));
    if !ctx.principles.is_empty() {
        let names: Vec<String> = ctx
            .principles
            .iter()
            .map(|p| format!("{} (principle {})", p.name, p.triz_number))
            .collect();
        let _ = write!(
            text,
            " It applies the inventive principles {}.",
            names.join(" and ")
        );
    }
    if let Some(top) = ctx.ranked_claims.first() {
        let _ = write!(
            text,
            " The central claim, derived from {} analysis, is: {}",
            top.methodology.as_str(),
            sentence(&top.text)
        );
    }
    text
}

fn template_claim(number: usize, claim: &ContextClaim) -> String {
    if number == 1 {
        sentence(&claim.text)
    } else {
        format!(
            "The system of claim 1, further comprising {}",
            sentence(&lower_first(&claim.text))
        )
    }
}

fn build_prompt(ctx: &ContextBundle) -> String {
    let mut p = String::from(
        "Write a patent draft using only the context below. Use exactly these headers, \
         each on its own line followed by a colon: Title, Field, Background, Abstract, Claims. \
         Under Claims write one numbered claim per line, in the given order; claim 1 is \
         independent and the rest depend on claim 1.\n\n",
    );
    let _ = writeln!(p, "Problem: {}", ctx.problem_statement);
    for c in &ctx.contradictions {
        let _ = writeln!(
            p,
            "Contradiction: improving {} worsens {}",
            c.improving, c.worsening
        );
    }
    for pr in &ctx.principles {
        let _ = writeln!(p, "Principle {}: {}", pr.triz_number, pr.name);
    }
    for n in &ctx.user_needs {
        let _ = writeln!(p, "User need: {} wants to {}", n.persona, n.job_to_be_done);
    }
    for (i, c) in ctx.ranked_claims.iter().enumerate() {
        let _ = writeln!(
            p,
            "Claim {} ({}): {}",
            i + 1,
            c.methodology.as_str(),
            c.text
        );
    }
    p
}

/// Matches a section header line, returning the section index and any text
/// following the header on the same line.
fn match_header(line: &str) -> Option<(usize, &str)> {
    let t = line.trim().trim_start_matches(['#', '*', ' ']);
    for (i, name) in SECTIONS.iter().enumerate() {
        let Some(head) = t.get(..name.len()) else {
            continue;
        };
        if !head.eq_ignore_ascii_case(name) {
            continue;
        }
        let rest = t[name.len()..].trim_start_matches('*');
        if rest.trim().is_empty() {
            return Some((i, ""));
        }
        if let Some(after) = rest.strip_prefix(':') {
            return Some((i, after.trim_start_matches('*').trim()));
        }
    }
    None
}

/// Splits LLM output into the five sections by header scanning.
fn split_sections(text: &str) -> [Option<String>; 5] {
    let mut buf: [Vec<&str>; 5] = Default::default();
    let mut found = [false; 5];
    let mut current = None;
    for line in text.lines() {
        if let Some((i, inline)) = match_header(line) {
            current = Some(i);
            found[i] = true;
            if !inline.is_empty() {
                buf[i].push(inline);
            }
        } else if let Some(i) = current {
            buf[i].push(line);
        }
    }
    std::array::from_fn(|i| {
        let body = buf[i].join("\n").trim().to_string();
        (found[i] && !body.is_empty()).then_some(body)
    })
}

/// Numbered items (`1.` or `1)`), with continuation lines folded in.
fn numbered_items(body: &str) -> Vec<String> {
    let mut items: Vec<String> = Vec::new();
    for line in body.lines() {
        let t = line.trim();
        let digits = t.chars().take_while(char::is_ascii_digit).count();
        let rest = &t[digits..];
        if digits > 0 && (rest.starts_with('.') || rest.starts_with(')')) {
            items.push(rest[1..].trim().to_string());
        } else if let Some(last) = items.last_mut() {
            if !t.is_empty() {
                last.push(' ');
                last.push_str(t);
            }
        }
    }
    items.retain(|s| !s.is_empty());
    items
}

/// Produces a complete draft for any LLM behaviour.
pub fn draft(ctx: &ContextBundle, llm: &dyn TextGenerator, settings: &LlmSettings) -> PatentDraft {
    let sections = match GenerationRequest::new(build_prompt(ctx), settings) {
        Ok(req) => match llm.generate(&req) {
            GenerationOutcome::Text(t) => split_sections(&t),
            GenerationOutcome::Malformed { reason, .. } => {
                log::info!("draft output malformed ({reason}); using templates");
                Default::default()
            }
            GenerationOutcome::Unavailable(reason) => {
                log::info!("llm unavailable for drafting ({reason}); using templates");
                Default::default()
            }
        },
        Err(e) => {
            log::warn!("{e}");
            Default::default()
        }
    };
    let [title, field, background, abstract_text, claims_body] = sections;
    let mut templated = Vec::new();
    let mut pick = |value: Option<String>, name: &str, fallback: &dyn Fn() -> String| {
        value.unwrap_or_else(|| {
            templated.push(name.to_string());
            fallback()
        })
    };
    let title = pick(title, "Title", &|| template_title(ctx));
    let field = pick(field, "Field", &|| template_field(ctx));
    let background = pick(background, "Background", &|| template_background(ctx));
    let abstract_text = pick(abstract_text, "Abstract", &|| template_abstract(ctx));

    let llm_claims = claims_body
        .as_deref()
        .map(numbered_items)
        .unwrap_or_default();
    if llm_claims.len() < ctx.ranked_claims.len() {
        templated.push("Claims".to_string());
    }
    let claims = ctx
        .ranked_claims
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let number = i + 1;
            DraftClaim {
                number,
                text: llm_claims
                    .get(i)
                    .cloned()
                    .unwrap_or_else(|| template_claim(number, c)),
                kind: if number == 1 {
                    ClaimKind::Independent
                } else {
                    ClaimKind::DependentOn(1)
                },
                claim_id: c.claim_id,
                methodology: c.methodology,
                trace: Vec::new(),
            }
        })
        .collect();

    PatentDraft {
        title,
        field,
        background,
        abstract_text,
        claims,
        disclaimer: DISCLAIMER.to_string(),
        templated_sections: templated,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimTrace {
    pub claim_number: usize,
    pub claim_id: NodeId,
    pub methodology: Methodology,
    pub path: Vec<TraceStep>,
}

fn step(graph: &KnowledgeGraph, id: NodeId, claim_number: usize) -> Result<TraceStep, DraftError> {
    graph
        .node(id)
        .map(|n| TraceStep {
            node_id: id,
            label: n.label,
        })
        .ok_or(DraftError::BrokenTrace {
            claim_number,
            node_id: id,
        })
}

fn first_src(graph: &KnowledgeGraph, id: NodeId, t: EdgeType) -> Option<NodeId> {
    graph.incoming(id, t).next().map(|e| e.src)
}

/// Origin path of one claim, ending at the claim itself. Links absent from
/// the graph (e.g. a claim added by hand) shorten the path rather than fail.
fn claim_path(graph: &KnowledgeGraph, claim_id: NodeId, methodology: Methodology) -> Vec<NodeId> {
    let mut path = Vec::new();
    match methodology {
        Methodology::Triz => {
            if let Some(principle) = first_src(graph, claim_id, EdgeType::Supports) {
                if let Some(contra) = first_src(graph, principle, EdgeType::ResolvedBy) {
                    if let Some(problem) = first_src(graph, contra, EdgeType::HasContradiction) {
                        path.push(problem);
                    }
                    path.push(contra);
                }
                path.push(principle);
            }
        }
        Methodology::DesignThinking => {
            let problem = graph.node(claim_id).and_then(|c| graph.claim_problem(c));
            if let Some(problem) = problem {
                if let Some(need) = first_src(graph, problem, EdgeType::Motivates) {
                    path.push(need);
                }
                path.push(problem);
            }
        }
        Methodology::Scamper => {
            if let Some(t) = first_src(graph, claim_id, EdgeType::Generates) {
                path.push(t);
            }
        }
    }
    path.push(claim_id);
    path
}

/// One trace per numbered claim. Fails if a drafted claim no longer exists.
pub fn trace_claims(
    draft: &PatentDraft,
    graph: &KnowledgeGraph,
) -> Result<Vec<ClaimTrace>, DraftError> {
    draft
        .claims
        .iter()
        .map(|c| {
            let broken = DraftError::BrokenTrace {
                claim_number: c.number,
                node_id: c.claim_id,
            };
            let methodology = graph.claim_methodology(c.claim_id).map_err(|_| broken)?;
            let path = claim_path(graph, c.claim_id, methodology)
                .into_iter()
                .map(|id| step(graph, id, c.number))
                .collect::<Result<_, _>>()?;
            Ok(ClaimTrace {
                claim_number: c.number,
                claim_id: c.claim_id,
                methodology,
                path,
            })
        })
        .collect()
}

impl PatentDraft {
    pub fn attach_traces(&mut self, graph: &KnowledgeGraph) -> Result<Vec<ClaimTrace>, DraftError> {
        let table = trace_claims(self, graph)?;
        for (claim, t) in self.claims.iter_mut().zip(&table) {
            claim.trace = t.path.clone();
        }
        Ok(table)
    }

    pub fn to_markdown(&self) -> String {
        let mut md = format!("# {}\n\n", self.title);
        for (name, body) in [
            ("Field", &self.field),
            ("Background", &self.background),
            ("Abstract", &self.abstract_text),
        ] {
            let _ = write!(md, "## {name}\n\n{body}\n\n");
        }
        md.push_str("## Claims\n\n");
        for c in &self.claims {
            let _ = writeln!(md, "{}. {}", c.number, c.text);
        }
        md.push_str(
            "\n## Claim Traceability\n\n| Claim | Methodology | Graph path |\n|---|---|---|\n",
        );
        for c in &self.claims {
            let path: Vec<String> = c
                .trace
                .iter()
                .map(|s| format!("{} {}", s.label.as_str(), s.node_id))
                .collect();
            let _ = writeln!(
                md,
                "| {} | {} | {} |",
                c.number,
                c.methodology.as_str(),
                path.join(" -> ")
            );
        }
        let _ = write!(md, "\n---\n\n*{}*\n", self.disclaimer);
        md
    }
}
