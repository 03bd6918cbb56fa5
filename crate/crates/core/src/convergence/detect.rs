use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::embedding::{cosine, EmbeddingProvider, EmbeddingVector};
use super::SynthesisError;
use crate::kg::{props, EdgeType, KnowledgeGraph, Methodology, NodeId, PropValue};
use crate::text::jaccard;

pub const DEFAULT_THETA: f64 = 0.65;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimilarityProvider {
    Embedding,
    Jaccard,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceConfig {
    pub theta: f64,
    pub provider: SimilarityProvider,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            theta: DEFAULT_THETA,
            provider: SimilarityProvider::Embedding,
        }
    }
}

impl ConvergenceConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.theta > 0.0 && self.theta <= 1.0 {
            Ok(())
        } else {
            Err(format!("theta must be in (0, 1], got {}", self.theta))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergentPair {
    pub claim_a: NodeId,
    pub claim_b: NodeId,
    pub similarity: f64,
    pub count: u64,
}

impl ConvergentPair {
    /// Order-free identity of the pair.
    pub fn key(&self) -> (NodeId, NodeId) {
        (
            self.claim_a.min(self.claim_b),
            self.claim_a.max(self.claim_b),
        )
    }
}

/// Pairs found by one detection pass plus the similarity source actually used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub pairs: Vec<ConvergentPair>,
    pub provider_used: SimilarityProvider,
}

struct ClaimText {
    id: NodeId,
    methodology: Methodology,
    text: String,
}

enum Scorer {
    Embedding(Vec<EmbeddingVector>),
    Jaccard,
}

fn embed_all(
    claims: &[ClaimText],
    provider: &dyn EmbeddingProvider,
) -> Option<Vec<EmbeddingVector>> {
    let texts: Vec<&str> = claims.iter().map(|c| c.text.as_str()).collect();
    match provider.embed_batch(&texts) {
        Ok(v) => Some(v),
        Err(e) => {
            log::warn!("{e}; falling back to Jaccard similarity for this pass");
            None
        }
    }
}

/// One detection pass. Every cross-methodology claim pair whose similarity
/// reaches `theta` gets (or re-increments) a CONVERGENT edge; pairs within a
/// methodology are never compared. An unavailable embedding provider
/// downgrades the whole pass to Jaccard.
pub fn detect_convergence(
    graph: &mut KnowledgeGraph,
    config: &ConvergenceConfig,
    embedder: Option<&dyn EmbeddingProvider>,
) -> Result<Detection, SynthesisError> {
    detect_in_order(graph, config, embedder, &Methodology::ALL)
}

pub(super) fn detect_in_order(
    graph: &mut KnowledgeGraph,
    config: &ConvergenceConfig,
    embedder: Option<&dyn EmbeddingProvider>,
    order: &[Methodology],
) -> Result<Detection, SynthesisError> {
    config.validate().map_err(SynthesisError::InvalidConfig)?;
    let claims: Vec<ClaimText> = graph
        .get_claims(None)
        .into_iter()
        .map(|n| {
            Ok(ClaimText {
                id: n.id,
                methodology: graph.claim_methodology(n.id)?,
                text: n.str_prop("text").unwrap_or_default().to_string(),
            })
        })
        .collect::<Result<_, SynthesisError>>()?;

    let scorer = match (config.provider, embedder) {
        (SimilarityProvider::Embedding, Some(p)) if !claims.is_empty() => {
            embed_all(&claims, p).map_or(Scorer::Jaccard, Scorer::Embedding)
        }
        (SimilarityProvider::Embedding, None) => {
            log::info!("no embedding provider configured; using Jaccard similarity");
            Scorer::Jaccard
        }
        _ => Scorer::Jaccard,
    };
    let mut provider_used = match scorer {
        Scorer::Embedding(_) => SimilarityProvider::Embedding,
        Scorer::Jaccard => SimilarityProvider::Jaccard,
    };

    let group = |m: Methodology| -> Vec<usize> {
        (0..claims.len())
            .filter(|&i| claims[i].methodology == m)
            .collect()
    };

    let mut qualifying = Vec::new();
    for (i, &mi) in order.iter().enumerate() {
        for &mj in &order[i + 1..] {
            for a in group(mi) {
                for b in group(mj) {
                    let sim = match &scorer {
                        Scorer::Embedding(vecs) => match cosine(&vecs[a], &vecs[b]) {
                            Ok(s) => s,
                            Err(e) => {
                                log::warn!(
                                    "{e}; using Jaccard for claims {} and {}",
                                    claims[a].id,
                                    claims[b].id
                                );
                                provider_used = SimilarityProvider::Jaccard;
                                jaccard(&claims[a].text, &claims[b].text)
                            }
                        },
                        Scorer::Jaccard => jaccard(&claims[a].text, &claims[b].text),
                    };
                    if sim >= config.theta {
                        qualifying.push((claims[a].id, claims[b].id, sim));
                    }
                }
            }
        }
    }

    let mut pairs = Vec::with_capacity(qualifying.len());
    for (a, b, sim) in qualifying {
        let edge_id =
            graph.create_edge(a, b, EdgeType::Convergent, props([("similarity", sim)]))?;
        let count = graph
            .edge(edge_id)
            .and_then(|e| e.properties.get("count"))
            .and_then(PropValue::as_f64)
            .unwrap_or(1.0) as u64;
        pairs.push(ConvergentPair {
            claim_a: a,
            claim_b: b,
            similarity: sim,
            count,
        });
    }
    Ok(Detection {
        pairs,
        provider_used,
    })
}

/// Current CONVERGENT edges as pair records, in edge order.
pub fn convergent_pairs(graph: &KnowledgeGraph) -> Vec<ConvergentPair> {
    graph
        .convergent_edges()
        .map(|e| ConvergentPair {
            claim_a: e.src,
            claim_b: e.dst,
            similarity: e
                .properties
                .get("similarity")
                .and_then(PropValue::as_f64)
                .unwrap_or(0.0),
            count: e
                .properties
                .get("count")
                .and_then(PropValue::as_f64)
                .unwrap_or(1.0) as u64,
        })
        .collect()
}

/// Distinct methodologies among the claim and its CONVERGENT neighbours.
pub fn methodology_diversity(
    claim_id: NodeId,
    graph: &KnowledgeGraph,
) -> Result<usize, SynthesisError> {
    let mut set = BTreeSet::from([graph.claim_methodology(claim_id)?]);
    for e in graph.incident(claim_id, EdgeType::Convergent) {
        if let Some(other) = e.other(claim_id) {
            set.insert(graph.claim_methodology(other)?);
        }
    }
    Ok(set.len())
}

/// Sum of detection counts over a claim's CONVERGENT edges: how many times
/// convergence involving this claim has been observed across passes.
pub fn convergence_detections(
    claim_id: NodeId,
    graph: &KnowledgeGraph,
) -> Result<u64, SynthesisError> {
    graph.expect_label(claim_id, crate::kg::NodeLabel::Claim)?;
    Ok(graph
        .incident(claim_id, EdgeType::Convergent)
        .map(|e| {
            e.properties
                .get("count")
                .and_then(PropValue::as_f64)
                .unwrap_or(1.0) as u64
        })
        .sum())
}
