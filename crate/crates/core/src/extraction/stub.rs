//! Deterministic rule-based backend standing in for the model.
//!
//! It sees exactly what a model would see (the rendered prompts) and answers
//! with reply text in the same JSON shapes:
//!
//! * extraction: every lexicon name found in the context block becomes a
//!   record; the evidence is the sentence naming it, the usage role and
//!   content type come from cue words in that sentence, and the confidence is
//!   a seeded hash of (name, window).
//! * relevance: relevant iff the context block shares at least one content
//!   word with the research question.

use serde_json::json;
use sha2::{Digest, Sha256};

use super::backend::{BackendError, BackendRequest, ExtractorBackend};
use super::prompt::{context_block, research_question, PromptKind};
use super::types::{ContentType, UsageRole};
use crate::text::{sentence_spans, tokenize};

/// Names the stub recognizes when no lexicon is configured.
pub const DEFAULT_LEXICON: &[&str] = &[
    "ACE 2005 (zh)",
    "ACE 2005",
    "ACE-2005",
    "ACE05",
    "ACE",
    "RAMS",
    "WikiEvents",
    "WIKIEVENTS",
    "MAVEN",
    "DocEE",
    "ChFinAnn",
    "TAC KBP 2015",
    "Rich ERE",
    "GENIA",
    "MUC-4",
    "CASIE",
    "DuEE",
    "PlantVillage",
    "ImageNet",
    "SQuAD",
    "MIMIC-III",
    "BERT",
    "RoBERTa",
    "ResNet",
];

const EVALUATE_CUES: &[&str] = &[
    "evaluat",
    "benchmark on",
    "compare",
    "tested on",
    "test on",
    "report results on",
];
const MODIFY_CUES: &[&str] = &[
    "extend",
    "modif",
    "adapt",
    "re-annotat",
    "convert",
    "augment",
];
const DISCOVERY_CUES: &[&str] = &["show that", "found that", "find that", "reveal"];
const PERFORMED_CUES: &[&str] = &["following", "setup of", "as in"];

const STOPWORDS: &[&str] = &[
    "the", "and", "for", "with", "from", "into", "onto", "over", "under", "about", "what", "which",
    "that", "this", "these", "those", "are", "was", "were", "how", "does", "can", "using", "use",
    "based", "via", "its", "their", "our", "data", "dataset", "datasets",
];

#[derive(Debug, Clone)]
pub struct StubBackend {
    lexicon: Vec<String>,
    seed: u64,
}

impl Default for StubBackend {
    fn default() -> Self {
        Self::new(DEFAULT_LEXICON.iter().map(|s| s.to_string()).collect(), 0)
    }
}

impl StubBackend {
    pub fn new(mut lexicon: Vec<String>, seed: u64) -> Self {
        // longest names first so "ACE 2005" wins over "ACE"
        lexicon.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        lexicon.dedup();
        Self { lexicon, seed }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn confidence(&self, name: &str, window: &str) -> f64 {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(name.as_bytes());
        h.update([0]);
        h.update(window.as_bytes());
        let d = h.finalize();
        let unit = u16::from_le_bytes([d[0], d[1]]) as f64 / u16::MAX as f64;
        ((0.60 + 0.39 * unit) * 100.0).round() / 100.0
    }

    /// Non-overlapping lexicon hits at word boundaries, in text order.
    /// Names inside URLs do not count.
    fn find_names<'a>(&'a self, window: &str) -> Vec<(usize, &'a str)> {
        let mut taken = vec![false; window.len()];
        let mut offset = 0;
        for token in window.split_inclusive(char::is_whitespace) {
            if token.contains("://") || token.starts_with("www.") || token.starts_with("(http") {
                taken[offset..offset + token.len()]
                    .iter_mut()
                    .for_each(|t| *t = true);
            }
            offset += token.len();
        }
        let mut hits = Vec::new();
        for name in &self.lexicon {
            for (start, _) in window.match_indices(name.as_str()) {
                let end = start + name.len();
                let before_ok = !window[..start]
                    .chars()
                    .next_back()
                    .is_some_and(char::is_alphanumeric);
                let after_ok = !window[end..]
                    .chars()
                    .next()
                    .is_some_and(char::is_alphanumeric);
                if before_ok && after_ok && !taken[start..end].iter().any(|t| *t) {
                    taken[start..end].iter_mut().for_each(|t| *t = true);
                    hits.push((start, name.as_str()));
                }
            }
        }
        hits.sort();
        hits
    }

    fn extract(&self, window: &str) -> String {
        let sentences = sentence_spans(window);
        let datasets: Vec<_> = self
            .find_names(window)
            .into_iter()
            .map(|(at, name)| {
                let evidence = sentences
                    .iter()
                    .find(|s| s.start <= at && at < s.end)
                    .map(|s| &window[s.clone()])
                    .unwrap_or(window);
                let cue = evidence.to_lowercase();
                let has = |cues: &[&str]| cues.iter().any(|c| cue.contains(c));
                let role = if has(EVALUATE_CUES) {
                    UsageRole::EvaluateAgainst
                } else if has(MODIFY_CUES) {
                    UsageRole::Modify
                } else {
                    UsageRole::Use
                };
                let content = if has(DISCOVERY_CUES) {
                    ContentType::Discovery
                } else if has(PERFORMED_CUES) {
                    ContentType::PerformedWork
                } else {
                    ContentType::ProducedResource
                };
                json!({
                    "name": name,
                    "usage_role": role.label(),
                    "content_type": content.label(),
                    "evidence": evidence,
                    "confidence": self.confidence(name, window),
                    "rationale": format!("The context names {name} in the cited work's usage."),
                })
            })
            .collect();
        json!({ "datasets": datasets }).to_string()
    }

    fn judge(&self, question: &str, window: &str) -> String {
        let terms = content_terms(question);
        let window_terms: std::collections::BTreeSet<String> =
            tokenize(window).into_iter().collect();
        let shared: Vec<&String> = terms.iter().filter(|t| window_terms.contains(*t)).collect();
        let verdict = if shared.is_empty() {
            json!({
                "is_relevant": false,
                "confidence": 0.8,
                "reasoning": "No research-question term appears in the context."
            })
        } else {
            let frac = shared.len() as f64 / terms.len() as f64;
            json!({
                "is_relevant": true,
                "confidence": ((0.5 + 0.5 * frac) * 100.0).round() / 100.0,
                "reasoning": format!(
                    "Context mentions {}.",
                    shared.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
                )
            })
        };
        verdict.to_string()
    }
}

/// Lowercase research-question words of three or more characters that are
/// not stopwords, deduplicated in first-seen order.
pub fn content_terms(question: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for t in tokenize(question) {
        if t.chars().count() >= 3 && !STOPWORDS.contains(&t.as_str()) && !out.contains(&t) {
            out.push(t);
        }
    }
    out
}

impl ExtractorBackend for StubBackend {
    fn complete(&self, request: &BackendRequest) -> Result<String, BackendError> {
        let window = context_block(&request.user)
            .ok_or_else(|| BackendError::Protocol("prompt has no context block".into()))?;
        Ok(match request.kind {
            PromptKind::Extraction => self.extract(window),
            PromptKind::Relevance => {
                let question = research_question(&request.user).unwrap_or_default();
                self.judge(question, window)
            }
        })
    }

    fn describe(&self) -> String {
        format!("stub:seed={}:lexicon={}", self.seed, self.lexicon.len())
    }
}

/// Backend answering through a closure; handy for scripted replies.
pub struct FnBackend<F>(pub F);

impl<F> ExtractorBackend for FnBackend<F>
where
    F: Fn(&BackendRequest) -> Result<String, BackendError> + Send + Sync,
{
    fn complete(&self, request: &BackendRequest) -> Result<String, BackendError> {
        (self.0)(request)
    }

    fn describe(&self) -> String {
        "scripted".into()
    }
}
