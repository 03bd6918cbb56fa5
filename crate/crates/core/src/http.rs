//! Minimal blocking HTTP seam shared by the LLM, embedding and arXiv clients.
//!
//! Everything that touches the network goes through [`HttpTransport`], so a
//! test can swap in a transport that refuses (and counts) every call.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum TransportError {
    #[error("request failed: {0}")]
    Request(String),
    #[error("timed out after {0:?}")]
    Timeout(Duration),
    #[error("http status {0}")]
    Status(u16),
    #[error("undecodable response: {0}")]
    Decode(String),
    #[error("network access forbidden")]
    Forbidden,
}

pub trait HttpTransport: Send + Sync {
    fn post_json(
        &self,
        url: &str,
        body: &Value,
        timeout: Duration,
    ) -> Result<Value, TransportError>;
    fn get_text(&self, url: &str, timeout: Duration) -> Result<String, TransportError>;
}

/// reqwest-backed transport.
pub struct ReqwestTransport {
    client: reqwest::blocking::Client,
}

impl Default for ReqwestTransport {
    fn default() -> Self {
        Self::new()
    }
}

impl ReqwestTransport {
    pub fn new() -> Self {
        let client = reqwest::blocking::Client::builder()
            .user_agent(concat!("ideaforge/", env!("CARGO_PKG_VERSION")))
            .build()
            .expect("http client builds");
        Self { client }
    }

    fn map_err(e: reqwest::Error, timeout: Duration) -> TransportError {
        if e.is_timeout() {
            TransportError::Timeout(timeout)
        } else if let Some(s) = e.status() {
            TransportError::Status(s.as_u16())
        } else {
            TransportError::Request(e.to_string())
        }
    }
}

impl HttpTransport for ReqwestTransport {
    fn post_json(
        &self,
        url: &str,
        body: &Value,
        timeout: Duration,
    ) -> Result<Value, TransportError> {
        let resp = self
            .client
            .post(url)
            .timeout(timeout)
            .json(body)
            .send()
            .and_then(|r| r.error_for_status())
            .map_err(|e| Self::map_err(e, timeout))?;
        resp.json::<Value>()
            .map_err(|e| TransportError::Decode(e.to_string()))
    }

    fn get_text(&self, url: &str, timeout: Duration) -> Result<String, TransportError> {
        let resp = self
            .client
            .get(url)
            .timeout(timeout)
            .send()
            .and_then(|r| r.error_for_status())
            .map_err(|e| Self::map_err(e, timeout))?;
        resp.text()
            .map_err(|e| TransportError::Decode(e.to_string()))
    }
}

/// Transport that refuses every request and counts the attempts.
#[derive(Debug, Default)]
pub struct ForbiddenTransport {
    attempts: AtomicUsize,
}

impl ForbiddenTransport {
    pub fn attempts(&self) -> usize {
        self.attempts.load(Ordering::SeqCst)
    }
}

impl HttpTransport for ForbiddenTransport {
    fn post_json(&self, url: &str, _: &Value, _: Duration) -> Result<Value, TransportError> {
        self.attempts.fetch_add(1, Ordering::SeqCst);
        log::error!("blocked POST {url}");
        Err(TransportError::Forbidden)
    }

    fn get_text(&self, url: &str, _: Duration) -> Result<String, TransportError> {
        self.attempts.fetch_add(1, Ordering::SeqCst);
        log::error!("blocked GET {url}");
        Err(TransportError::Forbidden)
    }
}
