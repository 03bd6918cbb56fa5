//! Innovation score: weighted convergence, diversity, strength and prior-art
//! penalty. Count-like components are normalized by the current maximum over
//! all claims (a zero maximum normalizes to zero); strength is used as stored.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::detect::methodology_diversity;
use super::SynthesisError;
use crate::kg::{EdgeType, KnowledgeGraph, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreWeights {
    pub convergence: f64,
    pub diversity: f64,
    pub strength: f64,
    pub prior_art: f64,
}

impl Default for ScoreWeights {
    fn default() -> Self {
        Self {
            convergence: 0.4,
            diversity: 0.3,
            strength: 0.2,
            prior_art: 0.1,
        }
    }
}

impl ScoreWeights {
    pub fn scaled(self, k: f64) -> Self {
        Self {
            convergence: self.convergence * k,
            diversity: self.diversity * k,
            strength: self.strength * k,
            prior_art: self.prior_art * k,
        }
    }

    fn magnitude(&self) -> f64 {
        let m = self.convergence.abs()
            + self.diversity.abs()
            + self.strength.abs()
            + self.prior_art.abs();
        if m > 0.0 {
            m
        } else {
            1.0
        }
    }
}

/// Raw per-claim inputs gathered from the graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimStats {
    pub claim_id: NodeId,
    pub convergent_count: usize,
    pub methodology_diversity: usize,
    pub claim_strength: f64,
    pub prior_art_challenges: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedComponents {
    pub convergent: f64,
    pub diversity: f64,
    pub strength: f64,
    pub challenges: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    pub convergent_count: usize,
    pub methodology_diversity: usize,
    pub claim_strength: f64,
    pub prior_art_challenges: usize,
    pub normalized: NormalizedComponents,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedClaim {
    pub claim_id: NodeId,
    pub score: ScoreBreakdown,
}

fn ratio(x: usize, max: usize) -> f64 {
    if max == 0 {
        0.0
    } else {
        x as f64 / max as f64
    }
}

pub fn claim_stats(claim_id: NodeId, graph: &KnowledgeGraph) -> Result<ClaimStats, SynthesisError> {
    let claim = graph.expect_label(claim_id, crate::kg::NodeLabel::Claim)?;
    Ok(ClaimStats {
        claim_id,
        convergent_count: graph.incident(claim_id, EdgeType::Convergent).count(),
        methodology_diversity: methodology_diversity(claim_id, graph)?,
        claim_strength: claim.num_prop("strength").unwrap_or(0.0),
        prior_art_challenges: graph.incoming(claim_id, EdgeType::Challenges).count(),
    })
}

/// Scores every claim in `stats` against the set-wide maxima.
pub fn score_stats(stats: &[ClaimStats], weights: &ScoreWeights) -> Vec<ScoreBreakdown> {
    let max_conv = stats.iter().map(|s| s.convergent_count).max().unwrap_or(0);
    let max_div = stats
        .iter()
        .map(|s| s.methodology_diversity)
        .max()
        .unwrap_or(0);
    let max_chal = stats
        .iter()
        .map(|s| s.prior_art_challenges)
        .max()
        .unwrap_or(0);
    stats
        .iter()
        .map(|s| {
            let normalized = NormalizedComponents {
                convergent: ratio(s.convergent_count, max_conv),
                diversity: ratio(s.methodology_diversity, max_div),
                strength: s.claim_strength,
                challenges: ratio(s.prior_art_challenges, max_chal),
            };
            let total = weights.convergence * normalized.convergent
                + weights.diversity * normalized.diversity
                + weights.strength * normalized.strength
                - weights.prior_art * normalized.challenges;
            ScoreBreakdown {
                convergent_count: s.convergent_count,
                methodology_diversity: s.methodology_diversity,
                claim_strength: s.claim_strength,
                prior_art_challenges: s.prior_art_challenges,
                normalized,
                total,
            }
        })
        .collect()
}

fn all_stats(graph: &KnowledgeGraph) -> Result<Vec<ClaimStats>, SynthesisError> {
    graph
        .get_claims(None)
        .iter()
        .map(|c| claim_stats(c.id, graph))
        .collect()
}

pub fn innovation_score(
    claim_id: NodeId,
    graph: &KnowledgeGraph,
    weights: &ScoreWeights,
) -> Result<ScoreBreakdown, SynthesisError> {
    graph.expect_label(claim_id, crate::kg::NodeLabel::Claim)?;
    let stats = all_stats(graph)?;
    let idx = stats
        .iter()
        .position(|s| s.claim_id == claim_id)
        .expect("claim is in the claim set");
    Ok(score_stats(&stats, weights).swap_remove(idx))
}

/// Totals compared on a 1e-9 grid relative to the weight magnitude, so float
/// noise neither breaks ties nor depends on the overall weight scale.
fn rank_key(total: f64, weights: &ScoreWeights) -> i64 {
    (total / weights.magnitude() * 1e9).round() as i64
}

/// Descending by total; ties by higher strength, then insertion order.
pub fn rank_stats(stats: &[ClaimStats], weights: &ScoreWeights) -> Vec<RankedClaim> {
    let scores = score_stats(stats, weights);
    let mut order: Vec<usize> = (0..stats.len()).collect();
    order.sort_by(|&a, &b| {
        rank_key(scores[b].total, weights)
            .cmp(&rank_key(scores[a].total, weights))
            .then_with(|| {
                stats[b]
                    .claim_strength
                    .partial_cmp(&stats[a].claim_strength)
                    .unwrap_or(Ordering::Equal)
            })
            .then_with(|| stats[a].claim_id.cmp(&stats[b].claim_id))
    });
    order
        .into_iter()
        .map(|i| RankedClaim {
            claim_id: stats[i].claim_id,
            score: scores[i].clone(),
        })
        .collect()
}

pub fn rank_claims(
    graph: &KnowledgeGraph,
    weights: &ScoreWeights,
) -> Result<Vec<RankedClaim>, SynthesisError> {
    let stats = all_stats(graph)?;
    if stats.is_empty() {
        return Err(SynthesisError::EmptyClaimSet);
    }
    Ok(rank_stats(&stats, weights))
}
