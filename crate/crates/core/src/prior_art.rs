//! arXiv prior-art retrieval, Atom parsing and CHALLENGES attachment.
//!
//! Retrieval never fails the pipeline: network errors, bad XML and offline
//! mode all degrade to an empty result with a logged warning.

use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use quick_xml::events::Event;
use quick_xml::Reader;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::http::HttpTransport;
use crate::kg::{props, EdgeType, KnowledgeGraph, NodeLabel};
use crate::llm::{generate_json, GenerationRequest, JsonOutcome, LlmSettings, TextGenerator};
use crate::text::{informative_tokens, jaccard};

pub const ARXIV_ENDPOINT: &str = "http://export.arxiv.org/api/query";
pub const DEFAULT_MAX_RESULTS: usize = 5;
pub const DEFAULT_QUERY_TERMS: usize = 5;
/// Minimum claim/record Jaccard similarity for a CHALLENGES edge.
pub const DEFAULT_CHALLENGE_THRESHOLD: f64 = 0.2;
const MIN_REQUEST_INTERVAL: Duration = Duration::from_secs(3);
const REQUEST_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Error, PartialEq)]
pub enum PriorArtError {
    #[error("idea has no informative terms")]
    EmptyIdea,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorArtRecord {
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub source: String,
    pub similarity: f64,
}

/// The first `max_terms` informative tokens of the idea, space-separated.
pub fn derive_query(idea: &str, max_terms: usize) -> Result<String, PriorArtError> {
    let terms: Vec<String> = informative_tokens(idea)
        .into_iter()
        .take(max_terms)
        .collect();
    if terms.is_empty() {
        return Err(PriorArtError::EmptyIdea);
    }
    Ok(terms.join(" "))
}

/// arXiv API URL searching all fields for every query term.
pub fn query_url(base: &str, query: &str, max_results: usize) -> String {
    let search = query
        .split_whitespace()
        .map(|t| format!("all:{t}"))
        .collect::<Vec<_>>()
        .join(" AND ");
    let mut url = url::Url::parse(base).expect("valid arXiv base url");
    url.query_pairs_mut()
        .append_pair("search_query", &search)
        .append_pair("max_results", &max_results.to_string());
    url.into()
}

fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Clone, Copy, PartialEq)]
enum Field {
    Title,
    Summary,
    Id,
}

/// Parses entry title, summary and id out of an Atom feed. Entries without a
/// title are skipped.
pub fn parse_atom(xml: &str) -> Result<Vec<PriorArtRecord>, String> {
    let mut reader = Reader::from_str(xml);
    reader.config_mut().trim_text(true);

    let mut records = Vec::new();
    let mut depth = 0usize;
    let mut saw_feed = false;
    let mut current: Option<PriorArtRecord> = None;
    let mut field: Option<Field> = None;

    loop {
        let event = reader
            .read_event()
            .map_err(|e| format!("xml error at byte {}: {e}", reader.error_position()))?;
        match event {
            Event::Start(e) => {
                depth += 1;
                let name = e.local_name();
                match name.as_ref() {
                    b"feed" if depth == 1 => saw_feed = true,
                    b"entry" => {
                        current = Some(PriorArtRecord {
                            title: String::new(),
                            abstract_text: String::new(),
                            source: String::new(),
                            similarity: 0.0,
                        })
                    }
                    b"title" if current.is_some() => field = Some(Field::Title),
                    b"summary" if current.is_some() => field = Some(Field::Summary),
                    b"id" if current.is_some() => field = Some(Field::Id),
                    _ => {}
                }
            }
            Event::End(e) => {
                depth = depth.saturating_sub(1);
                match e.local_name().as_ref() {
                    b"entry" => {
                        if let Some(mut r) = current.take() {
                            r.title = collapse_ws(&r.title);
                            r.abstract_text = collapse_ws(&r.abstract_text);
                            r.source = r.source.trim().to_string();
                            if r.title.is_empty() {
                                log::warn!("skipping Atom entry without a title");
                            } else {
                                records.push(r);
                            }
                        }
                    }
                    b"title" | b"summary" | b"id" => field = None,
                    _ => {}
                }
            }
            Event::Text(t) => {
                if let (Some(f), Some(r)) = (field, current.as_mut()) {
                    let text = t.unescape().map_err(|e| format!("bad text: {e}"))?;
                    push_field(r, f, &text);
                }
            }
            Event::CData(c) => {
                if let (Some(f), Some(r)) = (field, current.as_mut()) {
                    push_field(r, f, &String::from_utf8_lossy(&c));
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }
    if depth != 0 {
        return Err("unexpected end of document".into());
    }
    if !saw_feed {
        return Err("not an Atom feed".into());
    }
    Ok(records)
}

fn push_field(r: &mut PriorArtRecord, f: Field, text: &str) {
    let target = match f {
        Field::Title => &mut r.title,
        Field::Summary => &mut r.abstract_text,
        Field::Id => &mut r.source,
    };
    if !target.is_empty() {
        target.push(' ');
    }
    target.push_str(text);
}

/// Polite arXiv client: at least three seconds between requests.
pub struct ArxivClient {
    base_url: String,
    transport: Arc<dyn HttpTransport>,
    last_request: Mutex<Option<Instant>>,
}

impl ArxivClient {
    pub fn new(transport: Arc<dyn HttpTransport>) -> Self {
        Self::with_base_url(ARXIV_ENDPOINT, transport)
    }

    pub fn with_base_url(base_url: impl Into<String>, transport: Arc<dyn HttpTransport>) -> Self {
        Self {
            base_url: base_url.into(),
            transport,
            last_request: Mutex::new(None),
        }
    }

    fn fetch(&self, url: &str) -> Result<String, String> {
        let mut last = self.last_request.lock().unwrap();
        if let Some(at) = *last {
            let since = at.elapsed();
            if since < MIN_REQUEST_INTERVAL {
                std::thread::sleep(MIN_REQUEST_INTERVAL - since);
            }
        }
        *last = Some(Instant::now());
        self.transport
            .get_text(url, REQUEST_TIMEOUT)
            .map_err(|e| e.to_string())
    }
}

/// Where prior art comes from.
pub enum PriorArtSource {
    Offline,
    /// Local Atom XML file standing in for the network.
    Fixture(PathBuf),
    Arxiv(ArxivClient),
}

impl PriorArtSource {
    pub fn fixture(path: impl AsRef<Path>) -> Self {
        PriorArtSource::Fixture(path.as_ref().to_path_buf())
    }

    /// At most `max_results` records; empty on any failure.
    pub fn search(&self, query: &str, max_results: usize) -> Vec<PriorArtRecord> {
        let xml = match self {
            PriorArtSource::Offline => return Vec::new(),
            PriorArtSource::Fixture(path) => match std::fs::read_to_string(path) {
                Ok(x) => x,
                Err(e) => {
                    log::warn!("cannot read prior-art fixture {}: {e}", path.display());
                    return Vec::new();
                }
            },
            PriorArtSource::Arxiv(client) => {
                match client.fetch(&query_url(&client.base_url, query, max_results)) {
                    Ok(x) => x,
                    Err(e) => {
                        log::warn!("arXiv search failed: {e}");
                        return Vec::new();
                    }
                }
            }
        };
        match parse_atom(&xml) {
            Ok(mut records) => {
                records.truncate(max_results);
                records
            }
            Err(e) => {
                log::warn!("discarding unparseable Atom feed: {e}");
                Vec::new()
            }
        }
    }
}

fn llm_similarity(
    llm: &dyn TextGenerator,
    settings: &LlmSettings,
    idea: &str,
    record: &PriorArtRecord,
) -> Option<f64> {
    let prompt = format!(
        "Rate how similar this paper is to the idea on a scale from 0 to 1.\n\
         Idea: \"{idea}\"\nPaper title: \"{}\"\nAbstract: \"{}\"\n\
         Answer as JSON: {{\"similarity\": 0.0}}",
        record.title, record.abstract_text
    );
    let request = GenerationRequest::new(prompt, settings).ok()?;
    match generate_json(llm, &request, &["similarity"]) {
        JsonOutcome::Parsed(m) => m
            .get("similarity")
            .and_then(Value::as_f64)
            .filter(|s| (0.0..=1.0).contains(s)),
        _ => None,
    }
}

/// Optional LLM refinement of the keyword-overlap score.
pub struct SimilarityRefiner<'a> {
    pub llm: &'a dyn TextGenerator,
    pub settings: &'a LlmSettings,
}

/// Adds one PriorArt node per record and a CHALLENGES edge to every claim
/// whose Jaccard similarity with the record text reaches `threshold`.
/// Returns the number of CHALLENGES edges created.
pub fn score_and_attach(
    records: &mut [PriorArtRecord],
    idea: &str,
    graph: &mut KnowledgeGraph,
    threshold: f64,
    refiner: Option<&SimilarityRefiner<'_>>,
) -> usize {
    let claims: Vec<(crate::kg::NodeId, String)> = graph
        .get_claims(None)
        .iter()
        .map(|c| (c.id, c.str_prop("text").unwrap_or_default().to_string()))
        .collect();
    let mut challenges = 0;
    for record in records.iter_mut() {
        let record_text = format!("{} {}", record.title, record.abstract_text);
        record.similarity = jaccard(&record_text, idea);
        if let Some(r) = refiner {
            if let Some(s) = llm_similarity(r.llm, r.settings, idea, record) {
                record.similarity = s;
            }
        }
        let mut p = props([
            ("title", record.title.clone()),
            ("source", record.source.clone()),
            ("abstract", record.abstract_text.clone()),
        ]);
        p.insert("similarity".into(), record.similarity.into());
        let node = match graph.create_node(NodeLabel::PriorArt, p) {
            Ok(id) => id,
            Err(e) => {
                log::warn!("skipping prior-art record {:?}: {e}", record.title);
                continue;
            }
        };
        for (claim_id, claim_text) in &claims {
            if jaccard(&record_text, claim_text) >= threshold
                && graph
                    .create_edge(node, *claim_id, EdgeType::Challenges, Default::default())
                    .is_ok()
            {
                challenges += 1;
            }
        }
    }
    challenges
}
