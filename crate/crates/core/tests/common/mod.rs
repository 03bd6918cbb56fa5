#![allow(dead_code)]

use std::path::{Path, PathBuf};

use ideaforge_core::kg::{
    props, EdgeType, KnowledgeGraph, Methodology, NodeId, NodeLabel, PropValue, Properties,
    ScamperType,
};
use ideaforge_core::pipeline::PipelineConfig;
use rand::seq::SliceRandom;
use rand::Rng;

pub const IDEA: &str = "voice-first legal assistant in Hindi for rural India";

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn atom_fixture() -> PathBuf {
    fixture("legal_assistant_atom.xml")
}

pub fn embedding_fixture() -> PathBuf {
    fixture("legal_assistant_embeddings.json")
}

/// Offline run of the legal-assistant idea over both fixtures.
pub fn fixture_config(out: &Path, theta: f64) -> PipelineConfig {
    let mut cfg = PipelineConfig::new(IDEA, out);
    cfg.offline = true;
    cfg.domain = "legal tech".into();
    cfg.theta = theta;
    cfg.prior_art_fixture = Some(atom_fixture());
    cfg.embedding_stub = Some(embedding_fixture());
    cfg
}

const WORDS: &[&str] = &[
    "voice",
    "legal",
    "assistant",
    "Hindi",
    "rural",
    "India",
    "court",
    "notice",
    "tenant",
    "speech",
    "offline",
    "kiosk",
    "paralegal",
    "form",
    "wage",
    "claim",
    "village",
    "IVR",
];

pub fn random_text<R: Rng>(rng: &mut R, max_words: usize) -> String {
    let n = rng.gen_range(1..=max_words);
    (0..n)
        .map(|_| *WORDS.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ")
}

fn random_scalar<R: Rng>(rng: &mut R) -> PropValue {
    match rng.gen_range(0..3) {
        0 => PropValue::Bool(rng.gen()),
        1 => PropValue::Num(rng.gen_range(-1e6..1e6)),
        _ => PropValue::Str(random_text(rng, 4)),
    }
}

pub fn claim_props(text: &str, m: Methodology, strength: f64) -> Properties {
    let mut p = props([("text", text), ("methodology", m.as_str())]);
    p.insert("strength".into(), strength.into());
    p
}

/// Schema-valid properties for `label`, plus a few random extras.
pub fn valid_props<R: Rng>(label: NodeLabel, rng: &mut R) -> Properties {
    let mut p = match label {
        NodeLabel::Problem => props([
            ("statement", random_text(rng, 6)),
            ("domain", random_text(rng, 2)),
        ]),
        NodeLabel::Contradiction => props([
            ("improving", random_text(rng, 3)),
            ("worsening", random_text(rng, 3)),
        ]),
        NodeLabel::Principle => {
            let mut p = props([
                ("name", random_text(rng, 2)),
                ("description", random_text(rng, 5)),
            ]);
            p.insert("triz_number".into(), rng.gen_range(1u32..=40).into());
            p
        }
        NodeLabel::UserNeed => {
            let mut p = props([
                ("persona", random_text(rng, 2)),
                ("job_to_be_done", random_text(rng, 5)),
            ]);
            p.insert("pain_level".into(), rng.gen_range(0.0..=1.0).into());
            p
        }
        NodeLabel::Transformation => props([
            (
                "scamper_type",
                ScamperType::ALL.choose(rng).unwrap().as_str().to_string(),
            ),
            ("description", random_text(rng, 5)),
        ]),
        NodeLabel::Analogy => props([
            ("source_domain", random_text(rng, 2)),
            ("mechanism", random_text(rng, 4)),
        ]),
        NodeLabel::PriorArt => {
            let mut p = props([
                ("title", random_text(rng, 6)),
                ("source", random_text(rng, 1)),
            ]);
            p.insert("similarity".into(), rng.gen_range(0.0..=1.0).into());
            p
        }
        NodeLabel::Claim => {
            let m = *Methodology::ALL.choose(rng).unwrap();
            claim_props(&random_text(rng, 8), m, rng.gen_range(0.0..=1.0))
        }
    };
    for i in 0..rng.gen_range(0..3) {
        p.insert(format!("extra_{i}"), random_scalar(rng));
    }
    p
}

/// A random graph where every edge respects the schema.
pub fn random_graph<R: Rng>(rng: &mut R) -> KnowledgeGraph {
    let mut g = KnowledgeGraph::new();
    let mut ids: Vec<(NodeId, NodeLabel)> = Vec::new();
    for _ in 0..rng.gen_range(0..30) {
        let label = *NodeLabel::ALL.choose(rng).unwrap();
        ids.push((
            g.create_node(label, valid_props(label, rng)).unwrap(),
            label,
        ));
    }
    if rng.gen_bool(0.2) && !ids.is_empty() {
        let (victim, _) = ids.swap_remove(rng.gen_range(0..ids.len()));
        g.remove_node(victim).unwrap();
    }
    for _ in 0..rng.gen_range(0..40) {
        let t = *EdgeType::ALL.choose(rng).unwrap();
        let (sl, dl) = t.endpoints();
        let srcs: Vec<NodeId> = ids
            .iter()
            .filter(|(_, l)| *l == sl)
            .map(|(i, _)| *i)
            .collect();
        let dsts: Vec<NodeId> = ids
            .iter()
            .filter(|(_, l)| *l == dl)
            .map(|(i, _)| *i)
            .collect();
        let (Some(&s), Some(&d)) = (srcs.choose(rng), dsts.choose(rng)) else {
            continue;
        };
        let mut p = Properties::new();
        if t == EdgeType::Convergent {
            if s == d || g.claim_methodology(s).unwrap() == g.claim_methodology(d).unwrap() {
                continue;
            }
            p.insert("similarity".into(), rng.gen_range(0.0..=1.0).into());
        } else if rng.gen_bool(0.3) {
            p.insert("weight".into(), random_scalar(rng));
        }
        g.create_edge(s, d, t, p).unwrap();
    }
    g
}
