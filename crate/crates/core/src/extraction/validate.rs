//! Three-tier validation of decoded model records.
//!
//! * schema: required fields, controlled vocabularies, confidence range
//! * semantic: evidence must be a verbatim span of the window
//! * domain: the name must not be a method/tool or a bare generic word

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::types::{ContentType, DatasetMention, UsageRole};
use crate::corpus::CitationContext;
use crate::links::find_links;
use crate::resolution::{CanonicalKey, Normalizer};
use crate::text::sentence_spans;

pub const DEFAULT_BLOCKLIST: &str = include_str!("../../config/blocklist.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationTier {
    Schema,
    Semantic,
    Domain,
}

impl fmt::Display for ValidationTier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValidationTier::Schema => "schema",
            ValidationTier::Semantic => "semantic",
            ValidationTier::Domain => "domain",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, thiserror::Error)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Rejection {
    #[error("record is not a JSON object")]
    NotAnObject,
    #[error("missing field {field}")]
    MissingField { field: String },
    #[error("field {field} has the wrong type")]
    WrongType { field: String },
    #[error("name is empty")]
    EmptyName,
    #[error("usage_role {value:?} is not in the vocabulary")]
    UnknownUsageRole { value: String },
    #[error("content_type {value:?} is not in the vocabulary")]
    UnknownContentType { value: String },
    #[error("confidence {value} outside [0, 1]")]
    ConfidenceOutOfRange { value: f64 },
    #[error("evidence is empty")]
    EmptyEvidence,
    #[error("evidence is not a verbatim span of the context")]
    EvidenceNotInContext,
    #[error("{name:?} is a method or tool, not a dataset")]
    BlockedName { name: String },
    #[error("{name:?} is only a generic word")]
    GenericName { name: String },
}

impl Rejection {
    pub fn tier(&self) -> ValidationTier {
        use Rejection::*;
        match self {
            NotAnObject
            | MissingField { .. }
            | WrongType { .. }
            | EmptyName
            | UnknownUsageRole { .. }
            | UnknownContentType { .. }
            | ConfidenceOutOfRange { .. } => ValidationTier::Schema,
            EmptyEvidence | EvidenceNotInContext => ValidationTier::Semantic,
            BlockedName { .. } | GenericName { .. } => ValidationTier::Domain,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MentionValidator {
    normalizer: Normalizer,
    blocked: BTreeSet<CanonicalKey>,
}

impl Default for MentionValidator {
    fn default() -> Self {
        Self::new(Normalizer::default(), DEFAULT_BLOCKLIST)
    }
}

impl MentionValidator {
    /// `blocklist` holds one name per line; `#` starts a comment.
    pub fn new(normalizer: Normalizer, blocklist: &str) -> Self {
        let blocked = blocklist
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .filter_map(|name| normalizer.normalize(name).ok())
            .collect();
        Self {
            normalizer,
            blocked,
        }
    }

    pub fn blocklist_len(&self) -> usize {
        self.blocked.len()
    }

    /// Runs the schema, semantic and domain tiers in order and returns the
    /// first failure.
    pub fn validate(
        &self,
        raw: &Value,
        context: &CitationContext,
    ) -> Result<DatasetMention, Rejection> {
        let obj = raw.as_object().ok_or(Rejection::NotAnObject)?;
        let text = |field: &str| -> Result<&str, Rejection> {
            match obj.get(field) {
                None | Some(Value::Null) => Err(Rejection::MissingField {
                    field: field.to_string(),
                }),
                Some(Value::String(s)) => Ok(s.as_str()),
                Some(_) => Err(Rejection::WrongType {
                    field: field.to_string(),
                }),
            }
        };

        // schema
        let name = text("name")?.trim();
        if name.is_empty() {
            return Err(Rejection::EmptyName);
        }
        let role = text("usage_role")?;
        let usage_role: UsageRole = role.parse().map_err(|_| Rejection::UnknownUsageRole {
            value: role.to_string(),
        })?;
        let ct = text("content_type")?;
        let content_type: ContentType = ct.parse().map_err(|_| Rejection::UnknownContentType {
            value: ct.to_string(),
        })?;
        let evidence = text("evidence")?.trim();
        let confidence = match obj.get("confidence") {
            None | Some(Value::Null) => {
                return Err(Rejection::MissingField {
                    field: "confidence".into(),
                })
            }
            Some(v) => v.as_f64().ok_or(Rejection::WrongType {
                field: "confidence".into(),
            })?,
        };
        if !(0.0..=1.0).contains(&confidence) {
            return Err(Rejection::ConfidenceOutOfRange { value: confidence });
        }
        let rationale = text("rationale")?;

        // semantic
        if evidence.is_empty() {
            return Err(Rejection::EmptyEvidence);
        }
        if !context.window_text.contains(evidence) {
            return Err(Rejection::EvidenceNotInContext);
        }

        // domain
        let key = self
            .normalizer
            .normalize(name)
            .map_err(|_| Rejection::GenericName {
                name: name.to_string(),
            })?;
        if self.blocked.contains(&key) {
            return Err(Rejection::BlockedName {
                name: name.to_string(),
            });
        }

        Ok(DatasetMention {
            surface_name: name.to_string(),
            usage_role,
            content_type,
            evidence: evidence.to_string(),
            confidence,
            rationale: rationale.to_string(),
            relation: context.relation(),
            context_id: context.context_id.clone(),
            extracted_url: extracted_url(name, evidence, &context.window_text),
        })
    }
}

/// First link inside the evidence span, else the first link in a window
/// sentence that names the dataset.
fn extracted_url(name: &str, evidence: &str, window: &str) -> Option<String> {
    if let Some(link) = find_links(evidence).into_iter().next() {
        return Some(link);
    }
    sentence_spans(window)
        .into_iter()
        .map(|span| &window[span])
        .filter(|sentence| sentence.contains(name))
        .find_map(|sentence| find_links(sentence).into_iter().next())
}
