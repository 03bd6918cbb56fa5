//! Shared tokenizer, stopword list and Jaccard similarity.
//!
//! Tokenization is deliberately plain: lowercase, split on any character that
//! is not alphanumeric, drop empties, dedupe keeping first occurrence. No
//! stemming. Prior-art scoring, query derivation, fallback claim templates and
//! the Jaccard convergence provider all go through this module so their token
//! sets agree.

use std::collections::HashSet;

/// Fixed English stopword list used for query derivation and fallback
/// templates. Jaccard similarity does not remove stopwords.
pub const STOPWORDS: &[&str] = &[
    "a", "about", "after", "all", "also", "an", "and", "any", "are", "as", "at", "be", "been",
    "but", "by", "can", "could", "for", "from", "has", "have", "how", "in", "into", "is", "it",
    "its", "may", "more", "not", "of", "on", "or", "our", "over", "should", "so", "such", "than",
    "that", "the", "their", "there", "these", "this", "those", "to", "was", "we", "were", "what",
    "when", "which", "while", "who", "will", "with", "within", "without", "would",
];

pub fn is_stopword(token: &str) -> bool {
    STOPWORDS.binary_search(&token).is_ok()
}

/// Lowercased, deduplicated tokens in first-occurrence order.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for raw in text.split(|c: char| !c.is_alphanumeric()) {
        if raw.is_empty() {
            continue;
        }
        let token = raw.to_lowercase();
        if seen.insert(token.clone()) {
            out.push(token);
        }
    }
    out
}

/// Tokens with stopwords removed, order preserved.
pub fn informative_tokens(text: &str) -> Vec<String> {
    tokenize(text)
        .into_iter()
        .filter(|t| !is_stopword(t))
        .collect()
}

/// Jaccard similarity of the two token sets.
///
/// Both empty is 1.0 and exactly one empty is 0.0.
pub fn jaccard(a: &str, b: &str) -> f64 {
    let ta: HashSet<String> = tokenize(a).into_iter().collect();
    let tb: HashSet<String> = tokenize(b).into_iter().collect();
    match (ta.is_empty(), tb.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let inter = ta.intersection(&tb).count();
    let union = ta.len() + tb.len() - inter;
    inter as f64 / union as f64
}

/// The leading words of `text` (original casing and inner punctuation kept)
/// that carry its first `max_tokens` informative tokens.
///
/// Used to build readable subjects for fallback claim text, e.g.
/// "voice-first legal assistant Hindi rural India".
pub fn informative_phrase(text: &str, max_tokens: usize) -> String {
    let mut words = Vec::new();
    let mut taken = 0usize;
    for word in text.split_whitespace() {
        if taken >= max_tokens {
            break;
        }
        let trimmed = word.trim_matches(|c: char| !c.is_alphanumeric());
        let informative = informative_tokens(trimmed);
        if informative.is_empty() {
            continue;
        }
        taken += informative.len();
        words.push(trimmed);
    }
    words.join(" ")
}
