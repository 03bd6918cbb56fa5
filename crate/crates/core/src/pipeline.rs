//! The eight-step pipeline from idea text to ranked claims and patent draft.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{run_design_thinking, run_scamper, run_triz, AgentReport};
use crate::convergence::{
    convergent_pairs, detect_convergence, rank_claims, ConvergenceConfig, ConvergentPair,
    EmbeddingProvider, HttpEmbeddingProvider, RankedClaim, ScoreWeights, SimilarityProvider,
    StubEmbeddingProvider, SynthesisError, DEFAULT_THETA,
};
use crate::drafter::{assemble_context, draft, ClaimTrace, DraftError, PatentDraft, DEFAULT_TOP_K};
use crate::http::HttpTransport;
use crate::kg::{props, ExportFormat, GraphSummary, KgError, KnowledgeGraph, NodeLabel};
use crate::llm::{LlmSettings, OfflineGenerator, OllamaClient, TextGenerator, DEFAULT_ENDPOINT};
use crate::prior_art::{
    derive_query, score_and_attach, ArxivClient, PriorArtSource, SimilarityRefiner, ARXIV_ENDPOINT,
    DEFAULT_CHALLENGE_THRESHOLD, DEFAULT_MAX_RESULTS, DEFAULT_QUERY_TERMS,
};

pub const STEP_NAMES: [&str; 8] = [
    "problem",
    "triz",
    "design_thinking",
    "scamper",
    "prior_art",
    "convergence",
    "scoring",
    "drafting",
];

pub const SNAPSHOT_FILE: &str = "kg_snapshot.json";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Graph(#[from] KgError),
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
    #[error(transparent)]
    Draft(#[from] DraftError),
}

impl PipelineError {
    /// Output-path failures, as opposed to bad input or internal errors.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            PipelineError::Io { .. } | PipelineError::Graph(KgError::IoFailure { .. })
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub idea: String,
    pub domain: String,
    pub theta: f64,
    pub llm: LlmSettings,
    pub offline: bool,
    pub max_prior_art: usize,
    pub top_k: usize,
    pub weights: ScoreWeights,
    pub challenge_threshold: f64,
    pub output_dir: PathBuf,
    /// Defaults to `kg_snapshot.json` inside `output_dir`.
    pub snapshot_path: Option<PathBuf>,
    pub export_format: ExportFormat,
    pub prior_art_fixture: Option<PathBuf>,
    pub embedding_stub: Option<PathBuf>,
    pub llm_endpoint: String,
    pub embedding_url: Option<String>,
    pub arxiv_url: String,
}

impl PipelineConfig {
    pub fn new(idea: impl Into<String>, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            idea: idea.into(),
            domain: "general".into(),
            theta: DEFAULT_THETA,
            llm: LlmSettings::default(),
            offline: false,
            max_prior_art: DEFAULT_MAX_RESULTS,
            top_k: DEFAULT_TOP_K,
            weights: ScoreWeights::default(),
            challenge_threshold: DEFAULT_CHALLENGE_THRESHOLD,
            output_dir: output_dir.into(),
            snapshot_path: None,
            export_format: ExportFormat::Json,
            prior_art_fixture: None,
            embedding_stub: None,
            llm_endpoint: DEFAULT_ENDPOINT.into(),
            embedding_url: None,
            arxiv_url: ARXIV_ENDPOINT.into(),
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::InvalidConfig(m));
        if self.idea.trim().is_empty() {
            return bad("idea must not be empty".into());
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return bad(format!("theta must be in (0, 1], got {}", self.theta));
        }
        if self.top_k < 1 {
            return bad("top_k must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.challenge_threshold) {
            return bad(format!(
                "challenge threshold must be in [0, 1], got {}",
                self.challenge_threshold
            ));
        }
        let w = &self.weights;
        if [w.convergence, w.diversity, w.strength, w.prior_art]
            .iter()
            .any(|x| !x.is_finite() || *x < 0.0)
        {
            return bad("weights must be finite and non-negative".into());
        }
        Ok(())
    }

    pub fn snapshot_path(&self) -> PathBuf {
        self.snapshot_path
            .clone()
            .unwrap_or_else(|| self.output_dir.join(SNAPSHOT_FILE))
    }
}

/// External collaborators of a run, resolved from the config.
pub struct Services {
    pub llm: Arc<dyn TextGenerator>,
    pub embedder: Option<Arc<dyn EmbeddingProvider>>,
    pub prior_art: PriorArtSource,
    /// Ask the LLM to refine prior-art similarity.
    pub refine_prior_art: bool,
}

impl Services {
    /// Offline configs never hand `transport` to anything.
    pub fn from_config(
        config: &PipelineConfig,
        transport: Arc<dyn HttpTransport>,
    ) -> Result<Self, PipelineError> {
        let embedder: Option<Arc<dyn EmbeddingProvider>> =
            match (&config.embedding_stub, &config.embedding_url) {
                (Some(path), _) => Some(Arc::new(StubEmbeddingProvider::from_file(path).map_err(
                    |e| {
                        PipelineError::InvalidConfig(format!(
                            "embedding stub {}: {e}",
                            path.display()
                        ))
                    },
                )?)),
                (None, Some(url)) if !config.offline => Some(Arc::new(HttpEmbeddingProvider::new(
                    url.clone(),
                    transport.clone(),
                ))),
                _ => None,
            };
        let prior_art = match (&config.prior_art_fixture, config.offline) {
            (Some(path), _) => PriorArtSource::fixture(path),
            (None, true) => PriorArtSource::Offline,
            (None, false) => PriorArtSource::Arxiv(ArxivClient::with_base_url(
                config.arxiv_url.clone(),
                transport.clone(),
            )),
        };
        let llm: Arc<dyn TextGenerator> = if config.offline {
            Arc::new(OfflineGenerator)
        } else {
            Arc::new(OllamaClient::new(config.llm_endpoint.clone(), transport))
        };
        Ok(Self {
            llm,
            embedder,
            prior_art,
            refine_prior_art: !config.offline,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub name: String,
    pub duration_ms: f64,
    pub nodes_created: usize,
    pub edges_created: usize,
    pub used_fallback: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Artifacts {
    pub report: PathBuf,
    pub draft: PathBuf,
    pub graph_export: PathBuf,
    pub snapshot: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub idea: String,
    pub model_name: String,
    pub offline: bool,
    pub theta: f64,
    pub weights: ScoreWeights,
    pub started_at_unix_ms: u128,
    pub steps: Vec<StepRecord>,
    pub summary: GraphSummary,
    pub prior_art_records: usize,
    pub prior_art_challenges: usize,
    pub similarity_provider: SimilarityProvider,
    pub convergent_pairs: Vec<ConvergentPair>,
    pub ranked_claims: Vec<RankedClaim>,
    pub draft: PatentDraft,
    pub traces: Vec<ClaimTrace>,
    pub artifacts: Artifacts,
}

impl RunReport {
    /// The report with wall-clock fields (timestamps, durations, stamped
    /// paths) cleared, for comparing runs.
    pub fn without_timing(&self) -> RunReport {
        let mut r = self.clone();
        r.started_at_unix_ms = 0;
        r.artifacts = Artifacts::default();
        for s in &mut r.steps {
            s.duration_ms = 0.0;
        }
        r
    }
}

pub struct RunOutput {
    pub report: RunReport,
    pub graph: KnowledgeGraph,
}

struct StepTimer {
    name: &'static str,
    started: Instant,
    nodes: usize,
    edges: usize,
}

impl StepTimer {
    fn start(name: &'static str, graph: &KnowledgeGraph) -> Self {
        log::info!("step {name}");
        Self {
            name,
            started: Instant::now(),
            nodes: graph.node_count(),
            edges: graph.edge_count(),
        }
    }

    fn finish(self, graph: &KnowledgeGraph, used_fallback: bool) -> StepRecord {
        StepRecord {
            name: self.name.to_string(),
            duration_ms: self.started.elapsed().as_secs_f64() * 1e3,
            nodes_created: graph.node_count() - self.nodes,
            edges_created: graph.edge_count() - self.edges,
            used_fallback,
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), PipelineError> {
    fs::write(path, contents).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `name_{stamp}.ext` and `name_latest.ext`, returning the stamped path.
fn write_artifact(
    dir: &Path,
    name: &str,
    ext: &str,
    stamp: u128,
    contents: &str,
) -> Result<PathBuf, PipelineError> {
    let stamped = dir.join(format!("{name}_{stamp}.{ext}"));
    write_file(&stamped, contents)?;
    write_file(&dir.join(format!("{name}_latest.{ext}")), contents)?;
    Ok(stamped)
}

fn export_ext(format: ExportFormat) -> &'static str {
    match format {
        ExportFormat::Json => "json",
        ExportFormat::Dot => "dot",
    }
}

/// Runs all eight steps in order, snapshotting the graph after each one.
/// Analysis failures degrade to fallbacks; only invalid configuration or
/// unwritable outputs abort the run.
pub fn run_pipeline(
    config: &PipelineConfig,
    services: &Services,
) -> Result<RunOutput, PipelineError> {
    config.validate()?;
    fs::create_dir_all(&config.output_dir).map_err(|source| PipelineError::Io {
        path: config.output_dir.clone(),
        source,
    })?;
    let snapshot = config.snapshot_path();
    let started_at_unix_ms = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0);
    let idea = config.idea.trim();
    let llm = services.llm.as_ref();
    let mut graph = KnowledgeGraph::new();
    let mut steps = Vec::with_capacity(STEP_NAMES.len());

    macro_rules! step {
        ($name:expr, $body:expr) => {{
            let timer = StepTimer::start($name, &graph);
            #[allow(clippy::redundant_closure_call)]
            let (value, fallback) = $body(&mut graph)?;
            steps.push(timer.finish(&graph, fallback));
            graph.snapshot_save(&snapshot)?;
            value
        }};
    }

    let problem_id = step!(
        "problem",
        |g: &mut KnowledgeGraph| -> Result<_, PipelineError> {
            let id = g.create_node(
                NodeLabel::Problem,
                props([("statement", idea), ("domain", config.domain.as_str())]),
            )?;
            Ok((id, false))
        }
    );

    let agent = |r: AgentReport| (r.claim_id, r.used_fallback);
    step!(
        "triz",
        |g: &mut KnowledgeGraph| -> Result<_, PipelineError> {
            Ok(agent(run_triz(idea, problem_id, g, llm, &config.llm)?))
        }
    );
    step!(
        "design_thinking",
        |g: &mut KnowledgeGraph| -> Result<_, PipelineError> {
            Ok(agent(run_design_thinking(
                idea,
                problem_id,
                g,
                llm,
                &config.llm,
            )?))
        }
    );
    step!(
        "scamper",
        |g: &mut KnowledgeGraph| -> Result<_, PipelineError> {
            Ok(agent(run_scamper(idea, problem_id, g, llm, &config.llm)?))
        }
    );

    let (prior_art_records, prior_art_challenges) = step!(
        "prior_art",
        |g: &mut KnowledgeGraph| -> Result<_, PipelineError> {
            let mut records = match derive_query(idea, DEFAULT_QUERY_TERMS) {
                Ok(q) => services.prior_art.search(&q, config.max_prior_art),
                Err(e) => {
                    log::warn!("{e}");
                    Vec::new()
                }
            };
            let refiner = SimilarityRefiner {
                llm,
                settings: &config.llm,
            };
            let challenges = score_and_attach(
                &mut records,
                idea,
                g,
                config.challenge_threshold,
                services.refine_prior_art.then_some(&refiner),
            );
            Ok(((records.len(), challenges), records.is_empty()))
        }
    );

    let detection = step!(
        "convergence",
        |g: &mut KnowledgeGraph| -> Result<_, PipelineError> {
            let cfg = ConvergenceConfig {
                theta: config.theta,
                provider: SimilarityProvider::Embedding,
            };
            let det = detect_convergence(g, &cfg, services.embedder.as_deref())?;
            let fallback = det.provider_used == SimilarityProvider::Jaccard;
            Ok((det, fallback))
        }
    );

    let ranked = step!(
        "scoring",
        |g: &mut KnowledgeGraph| -> Result<_, PipelineError> {
            Ok((rank_claims(g, &config.weights)?, false))
        }
    );

    let stamp = started_at_unix_ms;
    let (patent, traces, draft_path, export_path) = step!(
        "drafting",
        |g: &mut KnowledgeGraph| -> Result<_, PipelineError> {
            let ctx = assemble_context(g, config.top_k, &config.weights)?;
            let mut d = draft(&ctx, llm, &config.llm);
            let traces = d.attach_traces(g)?;
            let draft_path =
                write_artifact(&config.output_dir, "draft", "md", stamp, &d.to_markdown())?;
            let export_path = write_artifact(
                &config.output_dir,
                "kg",
                export_ext(config.export_format),
                stamp,
                &g.export(config.export_format),
            )?;
            let fallback = !d.templated_sections.is_empty();
            Ok(((d, traces, draft_path, export_path), fallback))
        }
    );

    let mut report = RunReport {
        idea: idea.to_string(),
        model_name: config.llm.model_name.clone(),
        offline: config.offline,
        theta: config.theta,
        weights: config.weights,
        started_at_unix_ms,
        steps,
        summary: graph.summary(),
        prior_art_records,
        prior_art_challenges,
        similarity_provider: detection.provider_used,
        convergent_pairs: convergent_pairs(&graph),
        ranked_claims: ranked,
        draft: patent,
        traces,
        artifacts: Artifacts {
            report: config.output_dir.join(format!("run_report_{stamp}.json")),
            draft: draft_path,
            graph_export: export_path,
            snapshot,
        },
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    report.artifacts.report =
        write_artifact(&config.output_dir, "run_report", "json", stamp, &json)?;
    Ok(RunOutput { report, graph })
}
