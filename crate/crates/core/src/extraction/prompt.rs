//! Prompt templates for the two model passes and the response schemas sent
//! alongside them.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::types::DatasetMention;
use crate::corpus::{CitationContext, Query};

pub const BEGIN_CONTEXT: &str = "[BEGIN CONTEXT]";
pub const END_CONTEXT: &str = "[END CONTEXT]";

/// Appended to the user prompt when a reply could not be decoded.
pub const REPAIR_SUFFIX: &str = "\n\nOutput valid JSON only.";

const EXTRACTION_SYSTEM: &str = r#"You are an expert scientific annotator. Extract dataset entities from the
given citation context. Rules:
- Output valid JSON only (no extra text).
- Ground findings strictly in the provided context; do not hallucinate.
- Controlled vocabularies:
  usage_role ∈ {"Use","Modify","Evaluate Against"}
  content_type ∈ {"Performed Work","Discovery","Produced Resource"}"#;

const EXTRACTION_TASK: &str = r#"Task:
1) Identify dataset/benchmark/corpus names explicitly or implicitly referenced.
2) For each dataset, provide:
   - name
   - usage_role
   - content_type
   - evidence (verbatim span)
   - confidence (0.0-1.0)
   - rationale (1-2 sentences grounded in context)
Output JSON only:
{
  "datasets": [
    {
      "name": "...",
      "usage_role": "Use|Modify|Evaluate Against",
      "content_type": "Performed Work|Discovery|Produced Resource",
      "evidence": "...",
      "confidence": 0.0-1.0,
      "rationale": "..."
    }
  ]
}"#;

const RELEVANCE_SYSTEM: &str =
    "Decide whether a candidate dataset is relevant to the research question,
based solely on the provided context and titles. Respond with valid JSON only.";

const RELEVANCE_RULES: &str = r#"Decision rules:
- Relevant if the context shows the dataset was used, modified, or evaluated
  in pursuit of the RQ (or a directly aligned objective).
- Not relevant if usage is unrelated, purely background, or from a different domain.
- Be conservative; require explicit evidence in the context.
Output JSON only:
{
  "is_relevant": true/false,
  "confidence": 0.0-1.0,
  "reasoning": "brief, evidence-based justification"
}"#;

/// Which pass a prompt belongs to; selects the response schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    Extraction,
    Relevance,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub kind: PromptKind,
    pub system: String,
    pub user: String,
}

pub fn build_extraction_prompt(context: &CitationContext, query: &Query) -> Prompt {
    let user = format!(
        "Research Question (RQ):\n\"{rq}\"\nCiting Paper Title: \"{citing}\"\nCited Paper Title: \"{cited}\"\n\
         Citation Context (verbatim):\n{BEGIN_CONTEXT}\n{window}\n{END_CONTEXT}\n\n{EXTRACTION_TASK}",
        rq = query.text,
        citing = context.citing_title,
        cited = context.cited_title,
        window = context.window_text,
    );
    Prompt {
        kind: PromptKind::Extraction,
        system: EXTRACTION_SYSTEM.to_string(),
        user,
    }
}

/// Abstracts are sent as empty strings when the corpus has none.
pub fn build_relevance_prompt(
    mention: &DatasetMention,
    context: &CitationContext,
    query: &Query,
) -> Prompt {
    let user = format!(
        "Research Question (RQ):\n\"{rq}\"\n\nCandidate Dataset:\n\"name\": \"{name}\"\n\nContext:\n\
         {BEGIN_CONTEXT}\n{window}\n{END_CONTEXT}\n\n\
         Citing Paper Title: \"{citing}\"\nCiting Paper Abstract: \"{citing_abs}\"\n\
         Cited Paper Title: \"{cited}\"\nCited Paper Abstract: \"{cited_abs}\"\n\n{RELEVANCE_RULES}",
        rq = query.text,
        name = mention.surface_name,
        window = context.window_text,
        citing = context.citing_title,
        citing_abs = context.citing_abstract,
        cited = context.cited_title,
        cited_abs = context.cited_abstract,
    );
    Prompt {
        kind: PromptKind::Relevance,
        system: RELEVANCE_SYSTEM.to_string(),
        user,
    }
}

/// JSON Schema the backend is asked to enforce for `kind`.
pub fn response_schema(kind: PromptKind) -> Value {
    match kind {
        PromptKind::Extraction => json!({
            "type": "object",
            "properties": {
                "datasets": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "properties": {
                            "name": {"type": "string"},
                            "usage_role": {"type": "string", "enum": ["Use", "Modify", "Evaluate Against"]},
                            "content_type": {
                                "type": "string",
                                "enum": ["Performed Work", "Discovery", "Produced Resource"]
                            },
                            "evidence": {"type": "string"},
                            "confidence": {"type": "number", "minimum": 0.0, "maximum": 1.0},
                            "rationale": {"type": "string"}
                        },
                        "required": ["name", "usage_role", "content_type", "evidence", "confidence", "rationale"],
                        "additionalProperties": false
                    }
                }
            },
            "required": ["datasets"],
            "additionalProperties": false
        }),
        PromptKind::Relevance => json!({
            "type": "object",
            "properties": {
                "is_relevant": {"type": "boolean"},
                "confidence": {"type": "number", "minimum": 0.0, "maximum": 1.0},
                "reasoning": {"type": "string"}
            },
            "required": ["is_relevant", "confidence", "reasoning"],
            "additionalProperties": false
        }),
    }
}

pub fn schema_name(kind: PromptKind) -> &'static str {
    match kind {
        PromptKind::Extraction => "dataset_mentions",
        PromptKind::Relevance => "relevance_verdict",
    }
}

/// Text between the context delimiters of a rendered user prompt.
pub fn context_block(user: &str) -> Option<&str> {
    let start = user.find(BEGIN_CONTEXT)? + BEGIN_CONTEXT.len();
    let end = start + user[start..].find(END_CONTEXT)?;
    Some(user[start..end].trim_matches('\n'))
}

/// Value of a `Label: "value"` line in a rendered user prompt.
pub fn quoted_field<'a>(user: &'a str, label: &str) -> Option<&'a str> {
    user.lines().find_map(|line| {
        let rest = line.strip_prefix(label)?.strip_prefix(": \"")?;
        rest.strip_suffix('"')
    })
}

/// Research question of a rendered user prompt.
pub fn research_question(user: &str) -> Option<&str> {
    let mut lines = user.lines();
    lines.find(|l| *l == "Research Question (RQ):")?;
    let line = lines.next()?;
    line.strip_prefix('"')?.strip_suffix('"')
}
