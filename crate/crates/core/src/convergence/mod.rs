//! Cross-methodology convergence detection and claim ranking.

mod detect;
mod embedding;
mod score;

use thiserror::Error;

use crate::kg::KgError;

pub use detect::{
    convergence_detections, convergent_pairs, detect_convergence, methodology_diversity,
    ConvergenceConfig, ConvergentPair, Detection, SimilarityProvider, DEFAULT_THETA,
};
pub use embedding::{
    cosine, EmbeddingError, EmbeddingProvider, EmbeddingVector, HttpEmbeddingProvider,
    StubEmbeddingProvider,
};
pub use score::{
    claim_stats, innovation_score, rank_claims, rank_stats, score_stats, ClaimStats,
    NormalizedComponents, RankedClaim, ScoreBreakdown, ScoreWeights,
};

#[derive(Debug, Error)]
pub enum SynthesisError {
    #[error(transparent)]
    Graph(#[from] KgError),
    #[error("graph contains no claims")]
    EmptyClaimSet,
    #[error("invalid convergence config: {0}")]
    InvalidConfig(String),
}
