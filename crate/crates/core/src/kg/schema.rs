//! Node labels, edge types, property values and the per-label property rules.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::KgError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeLabel {
    Problem,
    Contradiction,
    Principle,
    UserNeed,
    Transformation,
    Analogy,
    PriorArt,
    Claim,
}

impl NodeLabel {
    pub const ALL: [NodeLabel; 8] = [
        NodeLabel::Problem,
        NodeLabel::Contradiction,
        NodeLabel::Principle,
        NodeLabel::UserNeed,
        NodeLabel::Transformation,
        NodeLabel::Analogy,
        NodeLabel::PriorArt,
        NodeLabel::Claim,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NodeLabel::Problem => "Problem",
            NodeLabel::Contradiction => "Contradiction",
            NodeLabel::Principle => "Principle",
            NodeLabel::UserNeed => "UserNeed",
            NodeLabel::Transformation => "Transformation",
            NodeLabel::Analogy => "Analogy",
            NodeLabel::PriorArt => "PriorArt",
            NodeLabel::Claim => "Claim",
        }
    }

    pub fn required_properties(self) -> &'static [&'static str] {
        match self {
            NodeLabel::Problem => &["statement", "domain"],
            NodeLabel::Contradiction => &["improving", "worsening"],
            NodeLabel::Principle => &["name", "triz_number", "description"],
            NodeLabel::UserNeed => &["persona", "job_to_be_done", "pain_level"],
            NodeLabel::Transformation => &["scamper_type", "description"],
            NodeLabel::Analogy => &["source_domain", "mechanism"],
            NodeLabel::PriorArt => &["title", "source", "similarity"],
            NodeLabel::Claim => &["text", "methodology", "strength"],
        }
    }

    /// The property used as a short human-readable caption.
    pub fn caption_property(self) -> &'static str {
        match self {
            NodeLabel::Problem => "statement",
            NodeLabel::Contradiction => "improving",
            NodeLabel::Principle => "name",
            NodeLabel::UserNeed => "persona",
            NodeLabel::Transformation => "scamper_type",
            NodeLabel::Analogy => "source_domain",
            NodeLabel::PriorArt => "title",
            NodeLabel::Claim => "text",
        }
    }
}

impl fmt::Display for NodeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NodeLabel {
    type Err = KgError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NodeLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| KgError::SchemaViolation(format!("unknown node label {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EdgeType {
    HasContradiction,
    ResolvedBy,
    Supports,
    Motivates,
    Generates,
    Inspires,
    Challenges,
    Convergent,
}

impl EdgeType {
    pub const ALL: [EdgeType; 8] = [
        EdgeType::HasContradiction,
        EdgeType::ResolvedBy,
        EdgeType::Supports,
        EdgeType::Motivates,
        EdgeType::Generates,
        EdgeType::Inspires,
        EdgeType::Challenges,
        EdgeType::Convergent,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeType::HasContradiction => "HAS_CONTRADICTION",
            EdgeType::ResolvedBy => "RESOLVED_BY",
            EdgeType::Supports => "SUPPORTS",
            EdgeType::Motivates => "MOTIVATES",
            EdgeType::Generates => "GENERATES",
            EdgeType::Inspires => "INSPIRES",
            EdgeType::Challenges => "CHALLENGES",
            EdgeType::Convergent => "CONVERGENT",
        }
    }

    /// The only legal (source, target) label pair for this edge type.
    pub fn endpoints(self) -> (NodeLabel, NodeLabel) {
        use NodeLabel::*;
        match self {
            EdgeType::HasContradiction => (Problem, Contradiction),
            EdgeType::ResolvedBy => (Contradiction, Principle),
            EdgeType::Supports => (Principle, Claim),
            EdgeType::Motivates => (UserNeed, Problem),
            EdgeType::Generates => (Transformation, Claim),
            EdgeType::Inspires => (Analogy, Claim),
            EdgeType::Challenges => (PriorArt, Claim),
            EdgeType::Convergent => (Claim, Claim),
        }
    }

    pub fn allows(self, src: NodeLabel, dst: NodeLabel) -> bool {
        self.endpoints() == (src, dst)
    }
}

impl fmt::Display for EdgeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EdgeType {
    type Err = KgError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EdgeType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| KgError::SchemaViolation(format!("unknown edge type {s:?}")))
    }
}

/// Source methodology of a claim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Methodology {
    #[serde(rename = "TRIZ")]
    Triz,
    #[serde(rename = "DT")]
    DesignThinking,
    #[serde(rename = "SCAMPER")]
    Scamper,
}

impl Methodology {
    pub const ALL: [Methodology; 3] = [
        Methodology::Triz,
        Methodology::DesignThinking,
        Methodology::Scamper,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Methodology::Triz => "TRIZ",
            Methodology::DesignThinking => "DT",
            Methodology::Scamper => "SCAMPER",
        }
    }

    /// Fixed claim strength assigned by the generating agent.
    pub fn strength(self) -> f64 {
        match self {
            Methodology::Triz => 0.7,
            Methodology::DesignThinking => 0.65,
            Methodology::Scamper => 0.6,
        }
    }
}

impl fmt::Display for Methodology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Methodology {
    type Err = KgError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Methodology::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| KgError::SchemaViolation(format!("unknown methodology {s:?}")))
    }
}

/// The seven SCAMPER operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ScamperType {
    Substitute,
    Combine,
    Adapt,
    Modify,
    PutToOtherUses,
    Eliminate,
    Reverse,
}

impl ScamperType {
    pub const ALL: [ScamperType; 7] = [
        ScamperType::Substitute,
        ScamperType::Combine,
        ScamperType::Adapt,
        ScamperType::Modify,
        ScamperType::PutToOtherUses,
        ScamperType::Eliminate,
        ScamperType::Reverse,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScamperType::Substitute => "Substitute",
            ScamperType::Combine => "Combine",
            ScamperType::Adapt => "Adapt",
            ScamperType::Modify => "Modify",
            ScamperType::PutToOtherUses => "PutToOtherUses",
            ScamperType::Eliminate => "Eliminate",
            ScamperType::Reverse => "Reverse",
        }
    }

    /// Lenient parse: ignores case, spaces, hyphens and underscores, so
    /// "put to other uses" and "PUT_TO_OTHER_USES" both match. "Magnify" and
    /// "Minify" map onto Modify.
    pub fn parse_loose(s: &str) -> Option<ScamperType> {
        let key: String = s
            .chars()
            .filter(|c| c.is_alphanumeric())
            .flat_map(char::to_lowercase)
            .collect();
        match key.as_str() {
            "substitute" => Some(ScamperType::Substitute),
            "combine" => Some(ScamperType::Combine),
            "adapt" => Some(ScamperType::Adapt),
            "modify" | "magnify" | "minify" => Some(ScamperType::Modify),
            "puttootheruses" | "puttootheruse" | "othuses" => Some(ScamperType::PutToOtherUses),
            "eliminate" => Some(ScamperType::Eliminate),
            "reverse" | "rearrange" => Some(ScamperType::Reverse),
            _ => None,
        }
    }
}

impl fmt::Display for ScamperType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Scalar property value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PropValue {
    Bool(bool),
    Num(f64),
    Str(String),
}

impl PropValue {
    pub fn as_str(&self) -> Option<&str> {
        match self {
            PropValue::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            PropValue::Num(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            PropValue::Bool(b) => Some(*b),
            _ => None,
        }
    }
}

impl fmt::Display for PropValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PropValue::Bool(b) => write!(f, "{b}"),
            PropValue::Num(n) => write!(f, "{n}"),
            PropValue::Str(s) => f.write_str(s),
        }
    }
}

impl From<&str> for PropValue {
    fn from(s: &str) -> Self {
        PropValue::Str(s.to_string())
    }
}

impl From<String> for PropValue {
    fn from(s: String) -> Self {
        PropValue::Str(s)
    }
}

impl From<f64> for PropValue {
    fn from(n: f64) -> Self {
        PropValue::Num(n)
    }
}

impl From<u32> for PropValue {
    fn from(n: u32) -> Self {
        PropValue::Num(f64::from(n))
    }
}

impl From<bool> for PropValue {
    fn from(b: bool) -> Self {
        PropValue::Bool(b)
    }
}

pub type Properties = BTreeMap<String, PropValue>;

/// Builds a property map from `(key, value)` pairs.
pub fn props<K, V, I>(pairs: I) -> Properties
where
    I: IntoIterator<Item = (K, V)>,
    K: Into<String>,
    V: Into<PropValue>,
{
    pairs
        .into_iter()
        .map(|(k, v)| (k.into(), v.into()))
        .collect()
}

fn require_str<'a>(label: NodeLabel, props: &'a Properties, key: &str) -> Result<&'a str, KgError> {
    props
        .get(key)
        .and_then(PropValue::as_str)
        .ok_or_else(|| KgError::SchemaViolation(format!("{label}.{key} must be a string")))
}

fn require_unit(label: NodeLabel, props: &Properties, key: &str) -> Result<f64, KgError> {
    let v = props
        .get(key)
        .and_then(PropValue::as_f64)
        .ok_or_else(|| KgError::SchemaViolation(format!("{label}.{key} must be a number")))?;
    if !(0.0..=1.0).contains(&v) {
        return Err(KgError::SchemaViolation(format!(
            "{label}.{key} = {v} outside [0, 1]"
        )));
    }
    Ok(v)
}

/// Checks required keys, value types and ranges for a node of `label`.
/// Extra properties are allowed.
pub fn validate_node(label: NodeLabel, props: &Properties) -> Result<(), KgError> {
    for key in label.required_properties() {
        if !props.contains_key(*key) {
            return Err(KgError::SchemaViolation(format!(
                "{label} requires property {key:?}"
            )));
        }
    }
    match label {
        NodeLabel::Problem => {
            require_str(label, props, "statement")?;
            require_str(label, props, "domain")?;
        }
        NodeLabel::Contradiction => {
            require_str(label, props, "improving")?;
            require_str(label, props, "worsening")?;
        }
        NodeLabel::Principle => {
            require_str(label, props, "name")?;
            require_str(label, props, "description")?;
            let n = props
                .get("triz_number")
                .and_then(PropValue::as_f64)
                .ok_or_else(|| {
                    KgError::SchemaViolation("Principle.triz_number must be a number".into())
                })?;
            if n.fract() != 0.0 || !(1.0..=40.0).contains(&n) {
                return Err(KgError::SchemaViolation(format!(
                    "Principle.triz_number = {n} is not an integer in 1..=40"
                )));
            }
        }
        NodeLabel::UserNeed => {
            require_str(label, props, "persona")?;
            require_str(label, props, "job_to_be_done")?;
            require_unit(label, props, "pain_level")?;
        }
        NodeLabel::Transformation => {
            let t = require_str(label, props, "scamper_type")?;
            if !ScamperType::ALL.iter().any(|s| s.as_str() == t) {
                return Err(KgError::SchemaViolation(format!(
                    "Transformation.scamper_type {t:?} is not a SCAMPER operation"
                )));
            }
            require_str(label, props, "description")?;
        }
        NodeLabel::Analogy => {
            require_str(label, props, "source_domain")?;
            require_str(label, props, "mechanism")?;
        }
        NodeLabel::PriorArt => {
            require_str(label, props, "title")?;
            require_str(label, props, "source")?;
            require_unit(label, props, "similarity")?;
        }
        NodeLabel::Claim => {
            require_str(label, props, "text")?;
            require_str(label, props, "methodology")?.parse::<Methodology>()?;
            require_unit(label, props, "strength")?;
        }
    }
    Ok(())
}
