//! Command-line front end: argument parsing, environment resolution and the
//! five subcommands. `main.rs` only wires in the real process environment.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use ideaforge_core::convergence::{rank_claims, ScoreWeights, SynthesisError, DEFAULT_THETA};
use ideaforge_core::http::ReqwestTransport;
use ideaforge_core::kg::{shared, ExportFormat, KgError, KnowledgeGraph};
use ideaforge_core::llm::{DEFAULT_ENDPOINT, DEFAULT_MODEL};
use ideaforge_core::mcp::McpServer;
use ideaforge_core::pipeline::{
    run_pipeline, PipelineConfig, PipelineError, RunReport, Services, SNAPSHOT_FILE,
};
use ideaforge_core::prior_art::ARXIV_ENDPOINT;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

pub const ENV_MODEL: &str = "OLLAMA_MODEL";
pub const ENV_LLM_ENDPOINT: &str = "OLLAMA_HOST";
pub const ENV_THETA: &str = "IDEAFORGE_THETA";
pub const ENV_EMBEDDING_URL: &str = "IDEAFORGE_EMBEDDING_URL";
pub const ENV_ARXIV_URL: &str = "IDEAFORGE_ARXIV_URL";

const DEFAULT_OUT: &str = "ideaforge-out";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_IO,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::InvalidConfig(m) => CliError::Usage(m),
            e if e.is_io() => CliError::Io(e.to_string()),
            e => CliError::Internal(e.to_string()),
        }
    }
}

impl From<KgError> for CliError {
    fn from(e: KgError) -> Self {
        match e {
            KgError::IoFailure { .. } | KgError::CorruptSnapshot(_) => CliError::Io(e.to_string()),
            e => CliError::Internal(e.to_string()),
        }
    }
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Io(e.to_string())
}

pub fn parse_theta(s: &str) -> Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("{s:?} is not a number"))?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("theta must be in (0, 1], got {v}"))
    }
}

/// `w1,w2,w3,w4`: convergence, diversity, strength, prior-art penalty.
pub fn parse_weights(s: &str) -> Result<ScoreWeights, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| format!("{p:?} is not a number"))
        })
        .collect::<Result<_, _>>()?;
    let [convergence, diversity, strength, prior_art] = parts[..] else {
        return Err(format!(
            "expected four comma-separated weights, got {}",
            parts.len()
        ));
    };
    if parts.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err("weights must be finite and non-negative".into());
    }
    Ok(ScoreWeights {
        convergence,
        diversity,
        strength,
        prior_art,
    })
}

fn parse_top_k(s: &str) -> Result<usize, String> {
    match s.trim().parse::<usize>() {
        Ok(k) if k >= 1 => Ok(k),
        _ => Err(format!("top-k must be an integer >= 1, got {s:?}")),
    }
}

fn parse_format(s: &str) -> Result<ExportFormat, String> {
    s.parse()
}

#[derive(Debug, Parser)]
#[command(
    name = "ideaforge",
    version,
    about = "Multi-methodology innovation analysis pipeline"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the full pipeline on an idea.
    Run(Box<RunArgs>),
    /// Serve the graph tools over JSON-RPC on stdin/stdout.
    ServeMcp(ServeArgs),
    /// Export a graph snapshot as JSON or DOT.
    Export(ExportArgs),
    /// Rank the claims in a graph snapshot.
    Score(ScoreArgs),
    /// Summarize the latest run report in an output directory.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Idea text.
    #[arg(
        long,
        conflicts_with = "idea_file",
        required_unless_present = "idea_file"
    )]
    pub idea: Option<String>,
    /// File containing the idea text.
    #[arg(long)]
    pub idea_file: Option<PathBuf>,
    /// Problem domain stored on the Problem node.
    #[arg(long)]
    pub domain: Option<String>,
    /// Convergence threshold in (0, 1] [env: IDEAFORGE_THETA].
    #[arg(long, value_parser = parse_theta)]
    pub theta: Option<f64>,
    /// LLM model name [env: OLLAMA_MODEL].
    #[arg(long)]
    pub model: Option<String>,
    /// Never touch the network; every stage uses its fallback.
    #[arg(long)]
    pub offline: bool,
    #[arg(long, default_value_t = ideaforge_core::prior_art::DEFAULT_MAX_RESULTS)]
    pub max_prior_art: usize,
    /// Claims included in the draft.
    #[arg(long, default_value_t = ideaforge_core::drafter::DEFAULT_TOP_K, value_parser = parse_top_k)]
    pub top_k: usize,
    /// Score weights w1,w2,w3,w4.
    #[arg(long, value_parser = parse_weights)]
    pub weights: Option<ScoreWeights>,
    /// Output directory.
    #[arg(long, default_value = DEFAULT_OUT)]
    pub out: PathBuf,
    /// Snapshot path (default: <out>/kg_snapshot.json).
    #[arg(long)]
    pub snapshot: Option<PathBuf>,
    /// Atom XML file used instead of querying arXiv.
    #[arg(long)]
    pub prior_art_fixture: Option<PathBuf>,
    /// JSON object mapping claim text to embedding vector.
    #[arg(long)]
    pub embedding_stub: Option<PathBuf>,
    /// Graph export format written next to the draft.
    #[arg(long, default_value = "json", value_parser = parse_format)]
    pub export: ExportFormat,
    /// Ollama base URL [env: OLLAMA_HOST].
    #[arg(long)]
    pub llm_endpoint: Option<String>,
    /// Embedding service URL [env: IDEAFORGE_EMBEDDING_URL].
    #[arg(long)]
    pub embedding_url: Option<String>,
    /// arXiv query endpoint [env: IDEAFORGE_ARXIV_URL].
    #[arg(long)]
    pub arxiv_url: Option<String>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Snapshot to serve; created on the first add_claim if missing.
    #[arg(long, default_value_os_t = default_snapshot())]
    pub snapshot: PathBuf,
    #[arg(long, value_parser = parse_weights)]
    pub weights: Option<ScoreWeights>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long, default_value_os_t = default_snapshot())]
    pub snapshot: PathBuf,
    #[arg(long, default_value = "json", value_parser = parse_format)]
    pub export: ExportFormat,
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long, default_value_os_t = default_snapshot())]
    pub snapshot: PathBuf,
    #[arg(long, value_parser = parse_weights)]
    pub weights: Option<ScoreWeights>,
    /// Show only the best k claims.
    #[arg(long, value_parser = parse_top_k)]
    pub top_k: Option<usize>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long, default_value = DEFAULT_OUT)]
    pub out: PathBuf,
    /// Print the raw report JSON.
    #[arg(long)]
    pub json: bool,
}

fn default_snapshot() -> PathBuf {
    Path::new(DEFAULT_OUT).join(SNAPSHOT_FILE)
}

/// `host:port` as accepted by Ollama becomes `http://host:port`.
fn normalize_endpoint(s: &str) -> String {
    let s = s.trim().trim_end_matches('/');
    if s.contains("://") {
        s.to_string()
    } else {
        format!("http://{s}")
    }
}

/// Builds the pipeline config. Precedence: flag, then environment, then default.
pub fn resolve_config(
    args: &RunArgs,
    env: &dyn Fn(&str) -> Option<String>,
) -> Result<PipelineConfig, CliError> {
    let idea = match (&args.idea, &args.idea_file) {
        (Some(i), _) => i.clone(),
        (None, Some(path)) => std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?,
        (None, None) => {
            return Err(CliError::Usage(
                "one of --idea or --idea-file is required".into(),
            ))
        }
    };
    let env_nonempty = |k: &str| env(k).filter(|v| !v.trim().is_empty());
    let theta = match (args.theta, env_nonempty(ENV_THETA)) {
        (Some(t), _) => t,
        (None, Some(v)) => {
            parse_theta(&v).map_err(|e| CliError::Usage(format!("{ENV_THETA}: {e}")))?
        }
        (None, None) => DEFAULT_THETA,
    };

    let mut cfg = PipelineConfig::new(idea.trim(), &args.out);
    cfg.theta = theta;
    cfg.llm.model_name = args
        .model
        .clone()
        .or_else(|| env_nonempty(ENV_MODEL))
        .unwrap_or_else(|| DEFAULT_MODEL.to_string());
    cfg.llm_endpoint = normalize_endpoint(
        &args
            .llm_endpoint
            .clone()
            .or_else(|| env_nonempty(ENV_LLM_ENDPOINT))
            .unwrap_or_else(|| DEFAULT_ENDPOINT.to_string()),
    );
    cfg.embedding_url = args
        .embedding_url
        .clone()
        .or_else(|| env_nonempty(ENV_EMBEDDING_URL));
    cfg.arxiv_url = args
        .arxiv_url
        .clone()
        .or_else(|| env_nonempty(ENV_ARXIV_URL))
        .unwrap_or_else(|| ARXIV_ENDPOINT.to_string());
    if let Some(d) = &args.domain {
        cfg.domain = d.clone();
    }
    cfg.offline = args.offline;
    cfg.max_prior_art = args.max_prior_art;
    cfg.top_k = args.top_k;
    cfg.weights = args.weights.unwrap_or_default();
    cfg.snapshot_path = args.snapshot.clone();
    cfg.export_format = args.export;
    cfg.prior_art_fixture = args.prior_art_fixture.clone();
    cfg.embedding_stub = args.embedding_stub.clone();
    cfg.validate()?;
    Ok(cfg)
}

fn short(text: &str, max: usize) -> String {
    if text.chars().count() <= max {
        text.to_string()
    } else {
        let cut: String = text.chars().take(max.saturating_sub(3)).collect();
        format!("{cut}...")
    }
}

/// Human-readable digest of a run report.
pub fn render_report(r: &RunReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "idea: {}", r.idea);
    let _ = writeln!(
        s,
        "model: {}{}  theta: {}",
        r.model_name,
        if r.offline { " (offline)" } else { "" },
        r.theta
    );
    let _ = writeln!(
        s,
        "\n{:<16} {:>10} {:>6} {:>6}  fallback",
        "step", "ms", "nodes", "edges"
    );
    for st in &r.steps {
        let _ = writeln!(
            s,
            "{:<16} {:>10.2} {:>6} {:>6}  {}",
            st.name,
            st.duration_ms,
            st.nodes_created,
            st.edges_created,
            if st.used_fallback { "yes" } else { "no" }
        );
    }
    let _ = writeln!(
        s,
        "\ngraph: {} nodes, {} edges; prior art {} ({} challenges); convergent pairs {} via {:?}",
        r.summary.total_nodes,
        r.summary.total_edges,
        r.prior_art_records,
        r.prior_art_challenges,
        r.convergent_pairs.len(),
        r.similarity_provider
    );
    let _ = writeln!(s, "\nranked claims:");
    for (i, c) in r.ranked_claims.iter().enumerate() {
        let _ = writeln!(
            s,
            "  {}. claim {:<4} total {:.3}  (conv {}, diversity {}, strength {}, challenges {})",
            i + 1,
            c.claim_id,
            c.score.total,
            c.score.convergent_count,
            c.score.methodology_diversity,
            c.score.claim_strength,
            c.score.prior_art_challenges
        );
    }
    let _ = writeln!(s, "\ndraft: {}", r.artifacts.draft.display());
    let _ = writeln!(s, "graph export: {}", r.artifacts.graph_export.display());
    let _ = writeln!(s, "report: {}", r.artifacts.report.display());
    s
}

fn load_graph(path: &Path) -> Result<KnowledgeGraph, CliError> {
    Ok(KnowledgeGraph::snapshot_load(path)?)
}

fn cmd_run(
    args: &RunArgs,
    env: &dyn Fn(&str) -> Option<String>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let cfg = resolve_config(args, env)?;
    let services = Services::from_config(&cfg, Arc::new(ReqwestTransport::new()))?;
    let run = run_pipeline(&cfg, &services)?;
    out.write_all(render_report(&run.report).as_bytes())
        .map_err(io_err)
}

fn cmd_serve(
    args: &ServeArgs,
    input: &mut dyn BufRead,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let graph = if args.snapshot.exists() {
        load_graph(&args.snapshot)?
    } else {
        log::info!(
            "{} not found; serving an empty graph",
            args.snapshot.display()
        );
        KnowledgeGraph::new()
    };
    let server = McpServer::new(shared(graph))
        .with_snapshot(&args.snapshot)
        .with_weights(args.weights.unwrap_or_default());
    server.serve(input, out).map_err(io_err)
}

fn cmd_export(args: &ExportArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let doc = load_graph(&args.snapshot)?.export(args.export);
    match &args.out {
        Some(path) => std::fs::write(path, doc)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
        None => out.write_all(doc.as_bytes()).map_err(io_err),
    }
}

fn cmd_score(args: &ScoreArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let graph = load_graph(&args.snapshot)?;
    let mut ranked = match rank_claims(&graph, &args.weights.unwrap_or_default()) {
        Ok(r) => r,
        Err(SynthesisError::EmptyClaimSet) => Vec::new(),
        Err(e) => return Err(CliError::Internal(e.to_string())),
    };
    if let Some(k) = args.top_k {
        ranked.truncate(k);
    }
    let text = if args.json {
        serde_json::to_string_pretty(&ranked).map_err(|e| CliError::Internal(e.to_string()))? + "\n"
    } else {
        let mut s = format!(
            "{:<4} {:<6} {:<8} {:>6}  text\n",
            "rank", "claim", "method", "score"
        );
        for (i, r) in ranked.iter().enumerate() {
            let n = graph.node(r.claim_id);
            let _ = writeln!(
                s,
                "{:<4} {:<6} {:<8} {:>6.3}  {}",
                i + 1,
                r.claim_id,
                n.and_then(|n| n.str_prop("methodology")).unwrap_or(""),
                r.score.total,
                short(n.and_then(|n| n.str_prop("text")).unwrap_or(""), 70)
            );
        }
        s
    };
    out.write_all(text.as_bytes()).map_err(io_err)
}

fn cmd_report(args: &ReportArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let path = args.out.join("run_report_latest.json");
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    if args.json {
        return out.write_all(text.as_bytes()).map_err(io_err);
    }
    let report: RunReport = serde_json::from_str(&text)
        .map_err(|e| CliError::Io(format!("{} is not a run report: {e}", path.display())))?;
    out.write_all(render_report(&report).as_bytes())
        .map_err(io_err)
}

/// Parses `argv` and runs the command, returning the process exit code.
pub fn run_cli<I, T>(
    argv: I,
    env: &dyn Fn(&str) -> Option<String>,
    input: &mut dyn BufRead,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = err.write_all(text.as_bytes());
                EXIT_USAGE
            } else {
                let _ = out.write_all(text.as_bytes());
                EXIT_OK
            };
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a, env, out),
        Command::ServeMcp(a) => cmd_serve(a, input, out),
        Command::Export(a) => cmd_export(a, out),
        Command::Score(a) => cmd_score(a, out),
        Command::Report(a) => cmd_report(a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
