//! Multi-methodology innovation analysis over a typed property graph.
//!
//! TRIZ, Design Thinking and SCAMPER agents write into a shared
//! [`kg::KnowledgeGraph`]; cross-methodology convergence is detected by text
//! similarity, claims are ranked by a weighted innovation score, and a patent
//! draft is assembled from the supporting subgraphs. Every stage has a
//! deterministic offline path.

pub mod agents;
pub mod convergence;
pub mod drafter;
pub mod http;
pub mod kg;
pub mod llm;
pub mod mcp;
pub mod pipeline;
pub mod prior_art;
pub mod text;
