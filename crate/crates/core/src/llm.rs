//! Text-generation backends and structured-JSON extraction.
//!
//! Failures never propagate as errors: every call ends in one of the
//! [`GenerationOutcome`] variants so callers can always fall back to
//! deterministic defaults.

use std::collections::VecDeque;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::http::HttpTransport;

pub const DEFAULT_MODEL: &str = "tinyllama";
pub const DEFAULT_ENDPOINT: &str = "http://localhost:11434";
const JSON_ONLY_SUFFIX: &str = "\n\nRespond with JSON only.";

#[derive(Debug, Error, PartialEq)]
pub enum LlmError {
    #[error("invalid generation request: {0}")]
    InvalidRequest(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LlmSettings {
    pub model_name: String,
    pub max_tokens: u32,
    pub temperature: f64,
    pub timeout: Duration,
}

impl Default for LlmSettings {
    fn default() -> Self {
        Self {
            model_name: DEFAULT_MODEL.to_string(),
            max_tokens: 512,
            temperature: 0.2,
            timeout: Duration::from_secs(60),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRequest {
    pub prompt: String,
    pub model_name: String,
    pub max_tokens: u32,
    pub temperature: f64,
    pub timeout: Duration,
}

impl GenerationRequest {
    pub fn new(prompt: impl Into<String>, settings: &LlmSettings) -> Result<Self, LlmError> {
        let prompt = prompt.into();
        if prompt.trim().is_empty() {
            return Err(LlmError::InvalidRequest("empty prompt".into()));
        }
        if settings.timeout.is_zero() {
            return Err(LlmError::InvalidRequest("timeout must be positive".into()));
        }
        if settings.max_tokens == 0 {
            return Err(LlmError::InvalidRequest(
                "max_tokens must be positive".into(),
            ));
        }
        if settings.temperature.is_nan() || settings.temperature < 0.0 {
            return Err(LlmError::InvalidRequest("temperature must be >= 0".into()));
        }
        Ok(Self {
            prompt,
            model_name: settings.model_name.clone(),
            max_tokens: settings.max_tokens,
            temperature: settings.temperature,
            timeout: settings.timeout,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GenerationOutcome {
    Text(String),
    Malformed { raw: String, reason: String },
    Unavailable(String),
}

pub trait TextGenerator: Send + Sync {
    fn generate(&self, request: &GenerationRequest) -> GenerationOutcome;
}

/// Offline mode: never touches the network.
#[derive(Debug, Clone, Copy, Default)]
pub struct OfflineGenerator;

impl TextGenerator for OfflineGenerator {
    fn generate(&self, _: &GenerationRequest) -> GenerationOutcome {
        GenerationOutcome::Unavailable("offline".into())
    }
}

/// Client for an Ollama-compatible `/api/generate` endpoint.
pub struct OllamaClient {
    endpoint: String,
    transport: Arc<dyn HttpTransport>,
}

impl OllamaClient {
    pub fn new(endpoint: impl Into<String>, transport: Arc<dyn HttpTransport>) -> Self {
        Self {
            endpoint: endpoint.into(),
            transport,
        }
    }

    fn url(&self) -> String {
        format!("{}/api/generate", self.endpoint.trim_end_matches('/'))
    }
}

impl TextGenerator for OllamaClient {
    fn generate(&self, request: &GenerationRequest) -> GenerationOutcome {
        let body = json!({
            "model": request.model_name,
            "prompt": request.prompt,
            "stream": false,
            "options": {
                "temperature": request.temperature,
                "num_predict": request.max_tokens,
            },
        });
        match self
            .transport
            .post_json(&self.url(), &body, request.timeout)
        {
            Ok(resp) => match resp.get("response").and_then(Value::as_str) {
                Some(text) => GenerationOutcome::Text(text.to_string()),
                None => GenerationOutcome::Malformed {
                    raw: resp.to_string(),
                    reason: "response field missing".into(),
                },
            },
            Err(e) => {
                log::warn!("llm backend unavailable: {e}");
                GenerationOutcome::Unavailable(e.to_string())
            }
        }
    }
}

/// Replays a fixed queue of outcomes, then repeats `exhausted` forever.
/// Records every prompt it receives.
pub struct ScriptedGenerator {
    queue: Mutex<VecDeque<GenerationOutcome>>,
    exhausted: GenerationOutcome,
    prompts: Mutex<Vec<String>>,
}

impl ScriptedGenerator {
    pub fn new(outcomes: impl IntoIterator<Item = GenerationOutcome>) -> Self {
        Self {
            queue: Mutex::new(outcomes.into_iter().collect()),
            exhausted: GenerationOutcome::Unavailable("script exhausted".into()),
            prompts: Mutex::new(Vec::new()),
        }
    }

    pub fn texts<S: Into<String>>(texts: impl IntoIterator<Item = S>) -> Self {
        Self::new(texts.into_iter().map(|t| GenerationOutcome::Text(t.into())))
    }

    pub fn always(outcome: GenerationOutcome) -> Self {
        Self {
            queue: Mutex::new(VecDeque::new()),
            exhausted: outcome,
            prompts: Mutex::new(Vec::new()),
        }
    }

    pub fn prompts(&self) -> Vec<String> {
        self.prompts.lock().unwrap().clone()
    }
}

impl TextGenerator for ScriptedGenerator {
    fn generate(&self, request: &GenerationRequest) -> GenerationOutcome {
        self.prompts.lock().unwrap().push(request.prompt.clone());
        self.queue
            .lock()
            .unwrap()
            .pop_front()
            .unwrap_or_else(|| self.exhausted.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum JsonOutcome {
    Parsed(Map<String, Value>),
    Malformed { raw: String, reason: String },
    Unavailable(String),
}

impl JsonOutcome {
    pub fn parsed(self) -> Option<Map<String, Value>> {
        match self {
            JsonOutcome::Parsed(m) => Some(m),
            _ => None,
        }
    }
}

/// Byte range of the first balanced `{...}` block, honoring string literals
/// and escapes.
fn first_object_span(text: &str) -> Option<(usize, usize)> {
    let start = text.find('{')?;
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, c) in text[start..].char_indices() {
        if in_string {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match c {
            '"' => in_string = true,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some((start, start + i + 1));
                }
            }
            _ => {}
        }
    }
    None
}

/// Extracts and parses the first balanced JSON object in `text`.
pub fn extract_json_object(text: &str) -> Result<Map<String, Value>, String> {
    if !text.contains('{') {
        return Err("no JSON object found".into());
    }
    let (s, e) = first_object_span(text).ok_or_else(|| "unbalanced JSON object".to_string())?;
    match serde_json::from_str::<Value>(&text[s..e]) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err("not a JSON object".into()),
        Err(err) => Err(format!("invalid JSON: {err}")),
    }
}

/// Pure parse of backend text into a keyed JSON object.
pub fn parse_structured(text: &str, required_keys: &[&str]) -> JsonOutcome {
    let malformed = |reason: String| JsonOutcome::Malformed {
        raw: text.to_string(),
        reason,
    };
    match extract_json_object(text) {
        Ok(map) => match required_keys.iter().find(|k| !map.contains_key(**k)) {
            Some(missing) => malformed(format!("missing key {missing}")),
            None => JsonOutcome::Parsed(map),
        },
        Err(reason) => malformed(reason),
    }
}

fn to_json_outcome(outcome: GenerationOutcome, required_keys: &[&str]) -> JsonOutcome {
    match outcome {
        GenerationOutcome::Text(t) => parse_structured(&t, required_keys),
        GenerationOutcome::Malformed { raw, reason } => JsonOutcome::Malformed { raw, reason },
        GenerationOutcome::Unavailable(r) => JsonOutcome::Unavailable(r),
    }
}

/// Generates and parses a JSON object. A malformed first answer gets one
/// retry with an explicit JSON-only instruction appended.
pub fn generate_json(
    llm: &dyn TextGenerator,
    request: &GenerationRequest,
    required_keys: &[&str],
) -> JsonOutcome {
    match to_json_outcome(llm.generate(request), required_keys) {
        JsonOutcome::Malformed { raw, reason } => {
            log::debug!("malformed llm output ({reason}), retrying: {raw}");
            let retry = GenerationRequest {
                prompt: format!("{}{JSON_ONLY_SUFFIX}", request.prompt),
                ..request.clone()
            };
            let second = to_json_outcome(llm.generate(&retry), required_keys);
            if let JsonOutcome::Malformed { raw, reason } = &second {
                log::warn!("llm output still malformed after retry ({reason}): {raw}");
            }
            second
        }
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req() -> GenerationRequest {
        GenerationRequest::new("p", &LlmSettings::default()).unwrap()
    }

    #[test]
    fn defaults() {
        let s = LlmSettings::default();
        assert_eq!(s.model_name, "tinyllama");
        assert_eq!(s.max_tokens, 512);
        assert_eq!(s.temperature, 0.2);
        assert_eq!(s.timeout, Duration::from_secs(60));
    }

    #[test]
    fn request_validation() {
        let s = LlmSettings::default();
        assert!(GenerationRequest::new("  ", &s).is_err());
        let zero = LlmSettings {
            timeout: Duration::ZERO,
            ..s.clone()
        };
        assert!(GenerationRequest::new("p", &zero).is_err());
    }

    #[test]
    fn offline_is_unavailable() {
        assert_eq!(
            OfflineGenerator.generate(&req()),
            GenerationOutcome::Unavailable("offline".into())
        );
    }

    #[test]
    fn extracts_object_between_noise() {
        let out = parse_structured(
            "noise {\"improving\":\"a\",\"worsening\":\"b\"} noise",
            &["improving", "worsening"],
        );
        let m = out.parsed().unwrap();
        assert_eq!(m["improving"], "a");
        assert_eq!(m["worsening"], "b");
    }

    #[test]
    fn missing_key_is_malformed() {
        assert_eq!(
            parse_structured("{\"improving\":\"a\"}", &["improving", "worsening"]),
            JsonOutcome::Malformed {
                raw: "{\"improving\":\"a\"}".into(),
                reason: "missing key worsening".into()
            }
        );
    }

    #[test]
    fn no_json_is_malformed() {
        match parse_structured("not json at all", &["k"]) {
            JsonOutcome::Malformed { raw, reason } => {
                assert_eq!(raw, "not json at all");
                assert_eq!(reason, "no JSON object found");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn braces_inside_strings_and_nesting() {
        let text = r#"Sure! {"a": "x } y { \" z", "b": {"c": [1, {"d": 2}]}} trailing }"#;
        let m = extract_json_object(text).unwrap();
        assert_eq!(m["a"], "x } y { \" z");
        assert_eq!(m["b"]["c"][1]["d"], 2);
    }

    #[test]
    fn unbalanced_is_reported() {
        assert_eq!(
            extract_json_object("{\"a\": {\"b\": 1}").unwrap_err(),
            "unbalanced JSON object"
        );
    }

    #[test]
    fn retry_once_then_succeed() {
        let llm = ScriptedGenerator::texts(["garbage", "{\"k\": 1}"]);
        let out = generate_json(&llm, &req(), &["k"]);
        assert!(matches!(out, JsonOutcome::Parsed(_)));
        let prompts = llm.prompts();
        assert_eq!(prompts.len(), 2);
        assert!(prompts[1].ends_with("Respond with JSON only."));
    }

    #[test]
    fn retry_only_once() {
        let llm = ScriptedGenerator::texts(["garbage", "still garbage", "{\"k\": 1}"]);
        let out = generate_json(&llm, &req(), &["k"]);
        assert!(matches!(out, JsonOutcome::Malformed { .. }));
        assert_eq!(llm.prompts().len(), 2);
    }

    #[test]
    fn unavailable_is_not_retried() {
        let llm = ScriptedGenerator::always(GenerationOutcome::Unavailable("down".into()));
        assert_eq!(
            generate_json(&llm, &req(), &["k"]),
            JsonOutcome::Unavailable("down".into())
        );
        assert_eq!(llm.prompts().len(), 1);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn json_leaf() -> impl Strategy<Value = Value> {
            prop_oneof![
                Just(Value::Null),
                any::<bool>().prop_map(Value::Bool),
                any::<i32>().prop_map(|n| json!(n)),
                "[ -~]{0,12}".prop_map(Value::String),
                "[{}\"\\\\]{0,6}".prop_map(Value::String),
            ]
        }

        fn json_value() -> impl Strategy<Value = Value> {
            json_leaf().prop_recursive(4, 32, 6, |inner| {
                prop_oneof![
                    prop::collection::vec(inner.clone(), 0..4).prop_map(Value::Array),
                    prop::collection::btree_map("[a-z{}]{1,6}", inner, 0..4)
                        .prop_map(|m| Value::Object(m.into_iter().collect())),
                ]
            })
        }

        proptest! {
            #[test]
            fn extraction_recovers_embedded_object(
                obj in prop::collection::btree_map("[a-z{}\"]{1,6}", json_value(), 1..5),
                prefix in "[a-zA-Z .:!]{0,20}",
                suffix in "[a-zA-Z .:!}]{0,20}",
            ) {
                let value = Value::Object(obj.into_iter().collect());
                let text = format!("{prefix}{value}{suffix}");
                let got = extract_json_object(&text).unwrap();
                prop_assert_eq!(Value::Object(got), value);
            }

            #[test]
            fn parse_is_pure(text in ".{0,60}") {
                prop_assert_eq!(parse_structured(&text, &["a"]), parse_structured(&text, &["a"]));
            }
        }
    }
}
