//! Tool server speaking newline-delimited JSON-RPC 2.0 (the stdio transport
//! of the Model Context Protocol). Five tools read or extend the graph.

use std::io::{self, BufRead, Write};
use std::path::PathBuf;
use std::sync::{RwLockReadGuard, RwLockWriteGuard};

use serde_json::{json, Map, Value};

use crate::convergence::{convergent_pairs, rank_claims, ScoreWeights, SynthesisError};
use crate::kg::{props, KnowledgeGraph, Methodology, NodeId, NodeLabel, SharedGraph};

pub const PROTOCOL_VERSION: &str = "2024-11-05";

pub const PARSE_ERROR: i64 = -32700;
pub const INVALID_REQUEST: i64 = -32600;
pub const METHOD_NOT_FOUND: i64 = -32601;
pub const INVALID_PARAMS: i64 = -32602;

pub const TOOL_NAMES: [&str; 5] = [
    "get_all_claims",
    "get_convergent_claims",
    "get_strongest_claims",
    "get_kg_summary",
    "add_claim",
];

/// Name, description and JSON input schema of every tool.
pub fn tool_descriptors() -> Vec<Value> {
    let methodology = json!({ "type": "string", "enum": ["TRIZ", "DT", "SCAMPER"] });
    vec![
        json!({
            "name": "get_all_claims",
            "description": "List every claim in the graph, optionally filtered by methodology.",
            "inputSchema": {
                "type": "object",
                "properties": { "methodology": methodology },
                "additionalProperties": false
            }
        }),
        json!({
            "name": "get_convergent_claims",
            "description": "List CONVERGENT claim pairs with similarity and detection count.",
            "inputSchema": { "type": "object", "properties": {}, "additionalProperties": false }
        }),
        json!({
            "name": "get_strongest_claims",
            "description": "Top claims by innovation score, with the score breakdown.",
            "inputSchema": {
                "type": "object",
                "properties": { "limit": { "type": "integer", "minimum": 1, "default": 3 } },
                "additionalProperties": false
            }
        }),
        json!({
            "name": "get_kg_summary",
            "description": "Node and edge counts per label and type.",
            "inputSchema": { "type": "object", "properties": {}, "additionalProperties": false }
        }),
        json!({
            "name": "add_claim",
            "description": "Add a claim node. Strength defaults to the methodology's fixed value.",
            "inputSchema": {
                "type": "object",
                "properties": {
                    "text": { "type": "string", "minLength": 1 },
                    "methodology": methodology,
                    "strength": { "type": "number", "minimum": 0, "maximum": 1 },
                    "problem_id": { "type": "string" }
                },
                "required": ["text", "methodology"],
                "additionalProperties": false
            }
        }),
    ]
}

/// Error carried back to the caller inside a successful tool result.
struct ToolError(String);

impl From<SynthesisError> for ToolError {
    fn from(e: SynthesisError) -> Self {
        ToolError(e.to_string())
    }
}

impl From<crate::kg::KgError> for ToolError {
    fn from(e: crate::kg::KgError) -> Self {
        ToolError(e.to_string())
    }
}

fn rpc_error(id: Value, code: i64, message: impl Into<String>) -> Value {
    json!({ "jsonrpc": "2.0", "id": id, "error": { "code": code, "message": message.into() } })
}

fn rpc_result(id: Value, result: Value) -> Value {
    json!({ "jsonrpc": "2.0", "id": id, "result": result })
}

fn claim_json(n: &crate::kg::Node) -> Value {
    json!({
        "id": n.id,
        "text": n.str_prop("text"),
        "methodology": n.str_prop("methodology"),
        "strength": n.num_prop("strength"),
    })
}

pub struct McpServer {
    graph: SharedGraph,
    snapshot_path: Option<PathBuf>,
    weights: ScoreWeights,
}

impl McpServer {
    pub fn new(graph: SharedGraph) -> Self {
        Self {
            graph,
            snapshot_path: None,
            weights: ScoreWeights::default(),
        }
    }

    /// Persist the graph here after every mutating tool call.
    pub fn with_snapshot(mut self, path: impl Into<PathBuf>) -> Self {
        self.snapshot_path = Some(path.into());
        self
    }

    pub fn with_weights(mut self, weights: ScoreWeights) -> Self {
        self.weights = weights;
        self
    }

    fn read(&self) -> RwLockReadGuard<'_, KnowledgeGraph> {
        self.graph.read().unwrap_or_else(|e| e.into_inner())
    }

    fn write(&self) -> RwLockWriteGuard<'_, KnowledgeGraph> {
        self.graph.write().unwrap_or_else(|e| e.into_inner())
    }

    /// Reads requests until EOF, writing one response line per request.
    pub fn serve<R: BufRead, W: Write>(&self, reader: R, mut writer: W) -> io::Result<()> {
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            if let Some(resp) = self.handle_line(&line) {
                writeln!(writer, "{resp}")?;
                writer.flush()?;
            }
        }
        Ok(())
    }

    /// Response for one raw message, or `None` for notifications.
    pub fn handle_line(&self, line: &str) -> Option<Value> {
        match serde_json::from_str::<Value>(line) {
            Ok(msg) => self.handle_message(msg),
            Err(e) => Some(rpc_error(
                Value::Null,
                PARSE_ERROR,
                format!("parse error: {e}"),
            )),
        }
    }

    pub fn handle_message(&self, msg: Value) -> Option<Value> {
        let Value::Object(obj) = msg else {
            return Some(rpc_error(
                Value::Null,
                INVALID_REQUEST,
                "request must be an object",
            ));
        };
        let id = obj.get("id").cloned();
        let valid_id = matches!(
            id,
            None | Some(Value::Null | Value::Number(_) | Value::String(_))
        );
        let method = obj.get("method").and_then(Value::as_str);
        if obj.get("jsonrpc") != Some(&json!("2.0")) || method.is_none() || !valid_id {
            let id = if valid_id {
                id.unwrap_or(Value::Null)
            } else {
                Value::Null
            };
            return Some(rpc_error(
                id,
                INVALID_REQUEST,
                "invalid JSON-RPC 2.0 request",
            ));
        }
        let method = method.unwrap_or_default();
        let Some(id) = id else {
            log::debug!("notification {method}");
            return None;
        };
        let params = obj.get("params").cloned().unwrap_or(Value::Null);
        Some(match method {
            "initialize" => rpc_result(
                id,
                json!({
                    "protocolVersion": PROTOCOL_VERSION,
                    "capabilities": { "tools": {} },
                    "serverInfo": { "name": "ideaforge", "version": env!("CARGO_PKG_VERSION") }
                }),
            ),
            "ping" => rpc_result(id, json!({})),
            "tools/list" => rpc_result(id, json!({ "tools": tool_descriptors() })),
            "tools/call" => self.tools_call(id, &params),
            other => rpc_error(id, METHOD_NOT_FOUND, format!("method not found: {other}")),
        })
    }

    fn tools_call(&self, id: Value, params: &Value) -> Value {
        let Some(name) = params.get("name").and_then(Value::as_str) else {
            return rpc_error(id, INVALID_PARAMS, "tools/call requires a string name");
        };
        let empty = Map::new();
        let args = match params.get("arguments") {
            None | Some(Value::Null) => &empty,
            Some(Value::Object(m)) => m,
            Some(_) => return rpc_error(id, INVALID_PARAMS, "arguments must be an object"),
        };
        if !TOOL_NAMES.contains(&name) {
            return rpc_error(id, METHOD_NOT_FOUND, format!("unknown tool: {name}"));
        }
        let outcome = self.call_tool(name, args);
        let (payload, is_error) = match outcome {
            Ok(v) => (v, false),
            Err(ToolError(msg)) => (json!({ "error": msg }), true),
        };
        rpc_result(
            id,
            json!({
                "content": [{ "type": "text", "text": payload.to_string() }],
                "structuredContent": payload,
                "isError": is_error,
            }),
        )
    }

    /// Runs a tool by name. Read tools take the shared lock; `add_claim`
    /// takes the exclusive one.
    fn call_tool(&self, name: &str, args: &Map<String, Value>) -> Result<Value, ToolError> {
        match name {
            "get_all_claims" => {
                let filter = match args.get("methodology") {
                    None | Some(Value::Null) => None,
                    Some(v) => Some(parse_methodology(v)?),
                };
                let g = self.read();
                let claims: Vec<Value> = g.get_claims(filter).into_iter().map(claim_json).collect();
                Ok(json!({ "claims": claims }))
            }
            "get_convergent_claims" => Ok(json!({ "pairs": convergent_pairs(&self.read()) })),
            "get_strongest_claims" => {
                let limit = match args.get("limit") {
                    None | Some(Value::Null) => 3,
                    Some(v) => v.as_i64().filter(|&l| l >= 1).ok_or_else(|| {
                        ToolError(format!("limit must be an integer >= 1, got {v}"))
                    })? as usize,
                };
                let g = self.read();
                let ranked = match rank_claims(&g, &self.weights) {
                    Ok(r) => r,
                    Err(SynthesisError::EmptyClaimSet) => Vec::new(),
                    Err(e) => return Err(e.into()),
                };
                let claims: Vec<Value> = ranked
                    .into_iter()
                    .take(limit)
                    .map(|r| {
                        let n = g.node(r.claim_id);
                        json!({
                            "claim_id": r.claim_id,
                            "text": n.and_then(|n| n.str_prop("text")),
                            "methodology": n.and_then(|n| n.str_prop("methodology")),
                            "score": r.score,
                        })
                    })
                    .collect();
                Ok(json!({ "claims": claims }))
            }
            "get_kg_summary" => Ok(serde_json::to_value(self.read().summary())
                .map_err(|e| ToolError(e.to_string()))?),
            "add_claim" => self.add_claim(args),
            _ => Err(ToolError(format!("unknown tool: {name}"))),
        }
    }

    fn add_claim(&self, args: &Map<String, Value>) -> Result<Value, ToolError> {
        let text = args
            .get("text")
            .and_then(Value::as_str)
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .ok_or_else(|| ToolError("text must be a non-empty string".into()))?;
        let methodology = parse_methodology(
            args.get("methodology")
                .ok_or_else(|| ToolError("methodology is required".into()))?,
        )?;
        let strength = match args.get("strength") {
            None | Some(Value::Null) => methodology.strength(),
            Some(v) => v
                .as_f64()
                .filter(|s| (0.0..=1.0).contains(s))
                .ok_or_else(|| {
                    ToolError(format!("strength must be a number in [0, 1], got {v}"))
                })?,
        };
        let mut p = props([("text", text), ("methodology", methodology.as_str())]);
        p.insert("strength".into(), strength.into());

        let mut g = self.write();
        if let Some(v) = args.get("problem_id").filter(|v| !v.is_null()) {
            let pid: NodeId = v.as_str().and_then(|s| s.parse().ok()).ok_or_else(|| {
                ToolError(format!("problem_id must be a node id string, got {v}"))
            })?;
            g.expect_label(pid, NodeLabel::Problem)?;
            p.insert("problem_id".into(), pid.to_string().into());
        }
        let id = g.create_node(NodeLabel::Claim, p)?;
        if let Some(path) = &self.snapshot_path {
            g.snapshot_save(path)?;
        }
        Ok(json!({ "claim_id": id, "strength": strength }))
    }
}

fn parse_methodology(v: &Value) -> Result<Methodology, ToolError> {
    v.as_str()
        .ok_or_else(|| ToolError(format!("methodology must be a string, got {v}")))?
        .parse()
        .map_err(|_| {
            ToolError(format!(
                "unknown methodology {v}; expected TRIZ, DT or SCAMPER"
            ))
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::shared;

    fn server() -> McpServer {
        McpServer::new(shared(KnowledgeGraph::new()))
    }

    fn call(s: &McpServer, id: i64, name: &str, args: Value) -> Value {
        s.handle_message(json!({
            "jsonrpc": "2.0", "id": id, "method": "tools/call",
            "params": { "name": name, "arguments": args }
        }))
        .unwrap()
    }

    #[test]
    fn lists_five_tools() {
        let s = server();
        let resp = s
            .handle_line(r#"{"jsonrpc":"2.0","id":1,"method":"tools/list"}"#)
            .unwrap();
        let names: Vec<&str> = resp["result"]["tools"]
            .as_array()
            .unwrap()
            .iter()
            .map(|t| t["name"].as_str().unwrap())
            .collect();
        assert_eq!(names, TOOL_NAMES);
        assert_eq!(resp["id"], 1);
    }

    #[test]
    fn protocol_errors() {
        let s = server();
        assert_eq!(
            s.handle_line("{not json").unwrap()["error"]["code"],
            PARSE_ERROR
        );
        assert_eq!(s.handle_line("{not json").unwrap()["id"], Value::Null);
        let r = s
            .handle_line(r#"{"jsonrpc":"2.0","id":"a","method":"resources/list"}"#)
            .unwrap();
        assert_eq!(r["error"]["code"], METHOD_NOT_FOUND);
        assert_eq!(r["id"], "a");
        let r = s
            .handle_line(r#"{"jsonrpc":"1.0","id":2,"method":"ping"}"#)
            .unwrap();
        assert_eq!(r["error"]["code"], INVALID_REQUEST);
        assert_eq!(
            s.handle_line("[1,2]").unwrap()["error"]["code"],
            INVALID_REQUEST
        );
        assert!(s
            .handle_line(r#"{"jsonrpc":"2.0","method":"notifications/initialized"}"#)
            .is_none());
        let r = call(&s, 3, "delete_everything", json!({}));
        assert_eq!(r["error"]["code"], METHOD_NOT_FOUND);
    }

    #[test]
    fn add_claim_defaults_and_errors() {
        let s = server();
        let r = call(
            &s,
            1,
            "add_claim",
            json!({ "text": "new claim", "methodology": "DT" }),
        );
        assert_eq!(r["result"]["isError"], false);
        assert_eq!(r["result"]["structuredContent"]["strength"], 0.65);
        let id: NodeId = r["result"]["structuredContent"]["claim_id"]
            .as_str()
            .unwrap()
            .parse()
            .unwrap();
        assert_eq!(s.read().node(id).unwrap().num_prop("strength"), Some(0.65));

        for args in [
            json!({ "text": "", "methodology": "TRIZ" }),
            json!({ "text": "x", "methodology": "BIOMIMICRY" }),
            json!({ "text": "x", "methodology": "TRIZ", "strength": 1.5 }),
            json!({ "text": "x", "methodology": "TRIZ", "problem_id": "99" }),
        ] {
            let r = call(&s, 2, "add_claim", args);
            assert_eq!(r["result"]["isError"], true, "{r}");
        }
        let all = call(&s, 3, "get_all_claims", json!({}));
        assert_eq!(
            all["result"]["structuredContent"]["claims"]
                .as_array()
                .unwrap()
                .len(),
            1
        );
    }

    #[test]
    fn strongest_claims_limits() {
        let s = server();
        let r = call(&s, 1, "get_strongest_claims", json!({ "limit": 3 }));
        assert_eq!(r["result"]["structuredContent"]["claims"], json!([]));
        let r = call(&s, 2, "get_strongest_claims", json!({ "limit": 0 }));
        assert_eq!(r["result"]["isError"], true);
        for m in ["SCAMPER", "TRIZ", "DT"] {
            call(&s, 3, "add_claim", json!({ "text": m, "methodology": m }));
        }
        let r = call(&s, 4, "get_strongest_claims", json!({ "limit": 1 }));
        let claims = r["result"]["structuredContent"]["claims"]
            .as_array()
            .unwrap();
        assert_eq!(claims.len(), 1);
        assert_eq!(claims[0]["methodology"], "TRIZ");
    }

    #[test]
    fn serve_over_lines() {
        let s = server();
        let input = concat!(
            r#"{"jsonrpc":"2.0","id":1,"method":"initialize","params":{}}"#,
            "\n",
            r#"{"jsonrpc":"2.0","method":"notifications/initialized"}"#,
            "\n",
            "\n",
            r#"{"jsonrpc":"2.0","id":2,"method":"tools/call","params":{"name":"get_kg_summary"}}"#,
            "\n",
        );
        let mut out = Vec::new();
        s.serve(input.as_bytes(), &mut out).unwrap();
        let lines: Vec<Value> = String::from_utf8(out)
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0]["result"]["protocolVersion"], PROTOCOL_VERSION);
        assert_eq!(lines[1]["result"]["structuredContent"]["total_nodes"], 0);
    }

    #[test]
    fn add_claim_persists_snapshot() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("kg.json");
        let s = server().with_snapshot(&path);
        call(
            &s,
            1,
            "add_claim",
            json!({ "text": "t", "methodology": "SCAMPER" }),
        );
        let g = KnowledgeGraph::snapshot_load(&path).unwrap();
        assert_eq!(g.get_claims(None).len(), 1);
    }
}
