//! Embedding providers and cosine similarity.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::http::HttpTransport;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EmbeddingError {
    #[error("embedding provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("zero vector has no direction")]
    ZeroVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub components: Vec<f64>,
    pub provider_tag: String,
}

impl EmbeddingVector {
    pub fn new(components: Vec<f64>, provider_tag: impl Into<String>) -> Self {
        Self {
            components,
            provider_tag: provider_tag.into(),
        }
    }

    fn norm(&self) -> f64 {
        self.components.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// dot(u, v) / (|u| |v|), clamped to [-1, 1].
pub fn cosine(u: &EmbeddingVector, v: &EmbeddingVector) -> Result<f64, EmbeddingError> {
    if u.components.len() != v.components.len() {
        return Err(EmbeddingError::DimensionMismatch(
            u.components.len(),
            v.components.len(),
        ));
    }
    let (nu, nv) = (u.norm(), v.norm());
    if nu == 0.0 || nv == 0.0 {
        return Err(EmbeddingError::ZeroVector);
    }
    let dot: f64 = u
        .components
        .iter()
        .zip(&v.components)
        .map(|(a, b)| a * b)
        .sum();
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

pub trait EmbeddingProvider: Send + Sync {
    fn tag(&self) -> &str;

    /// One vector per input text, all of equal length.
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbeddingError>;

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbeddingError> {
        self.embed_batch(&[text])?
            .pop()
            .ok_or_else(|| EmbeddingError::ProviderUnavailable("empty response".into()))
    }
}

fn check_batch(vectors: &[Vec<f64>], expected: usize) -> Result<(), EmbeddingError> {
    if vectors.len() != expected {
        return Err(EmbeddingError::ProviderUnavailable(format!(
            "expected {expected} vectors, got {}",
            vectors.len()
        )));
    }
    if let Some(first) = vectors.first() {
        if let Some(bad) = vectors.iter().find(|v| v.len() != first.len()) {
            return Err(EmbeddingError::DimensionMismatch(first.len(), bad.len()));
        }
    }
    Ok(())
}

/// HTTP embedding service: POST `{texts: [...]}` returns `{vectors: [[...]]}`.
pub struct HttpEmbeddingProvider {
    url: String,
    transport: Arc<dyn HttpTransport>,
    timeout: Duration,
}

impl HttpEmbeddingProvider {
    pub fn new(url: impl Into<String>, transport: Arc<dyn HttpTransport>) -> Self {
        Self {
            url: url.into(),
            transport,
            timeout: Duration::from_secs(30),
        }
    }
}

impl EmbeddingProvider for HttpEmbeddingProvider {
    fn tag(&self) -> &str {
        "http"
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbeddingError> {
        let resp = self
            .transport
            .post_json(&self.url, &json!({ "texts": texts }), self.timeout)
            .map_err(|e| EmbeddingError::ProviderUnavailable(e.to_string()))?;
        let vectors: Vec<Vec<f64>> = resp
            .get("vectors")
            .cloned()
            .map(serde_json::from_value)
            .transpose()
            .map_err(|e| EmbeddingError::ProviderUnavailable(format!("bad response: {e}")))?
            .ok_or_else(|| EmbeddingError::ProviderUnavailable("response lacks vectors".into()))?;
        check_batch(&vectors, texts.len())?;
        Ok(vectors
            .into_iter()
            .map(|c| EmbeddingVector::new(c, self.tag()))
            .collect())
    }
}

/// Fixed text → vector table, loaded from a JSON object file.
/// Unknown texts make the provider unavailable.
#[derive(Debug, Clone, Default)]
pub struct StubEmbeddingProvider {
    table: HashMap<String, Vec<f64>>,
}

impl StubEmbeddingProvider {
    pub fn new(table: HashMap<String, Vec<f64>>) -> Self {
        Self { table }
    }

    pub fn from_file(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let bytes = std::fs::read(path)?;
        let value: Value = serde_json::from_slice(&bytes)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        let table: HashMap<String, Vec<f64>> = serde_json::from_value(value)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        Ok(Self { table })
    }
}

impl EmbeddingProvider for StubEmbeddingProvider {
    fn tag(&self) -> &str {
        "stub"
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbeddingError> {
        let vectors = texts
            .iter()
            .map(|t| {
                self.table.get(*t).cloned().ok_or_else(|| {
                    EmbeddingError::ProviderUnavailable(format!("no stub vector for {t:?}"))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        check_batch(&vectors, texts.len())?;
        Ok(vectors
            .into_iter()
            .map(|c| EmbeddingVector::new(c, self.tag()))
            .collect())
    }
}
