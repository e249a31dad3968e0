use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Relation;

/// Citation intent: what the citing work did with the dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum UsageRole {
    #[serde(rename = "Use")]
    Use,
    #[serde(rename = "Modify")]
    Modify,
    #[serde(rename = "Evaluate Against")]
    EvaluateAgainst,
}

/// What the cited work contributed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ContentType {
    #[serde(rename = "Performed Work")]
    PerformedWork,
    #[serde(rename = "Discovery")]
    Discovery,
    #[serde(rename = "Produced Resource")]
    ProducedResource,
}

impl UsageRole {
    pub const ALL: [UsageRole; 3] = [
        UsageRole::Use,
        UsageRole::Modify,
        UsageRole::EvaluateAgainst,
    ];

    pub fn label(self) -> &'static str {
        match self {
            UsageRole::Use => "Use",
            UsageRole::Modify => "Modify",
            UsageRole::EvaluateAgainst => "Evaluate Against",
        }
    }
}

impl ContentType {
    pub const ALL: [ContentType; 3] = [
        ContentType::PerformedWork,
        ContentType::Discovery,
        ContentType::ProducedResource,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ContentType::PerformedWork => "Performed Work",
            ContentType::Discovery => "Discovery",
            ContentType::ProducedResource => "Produced Resource",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{value:?} is not in the {vocabulary} vocabulary")]
pub struct VocabularyError {
    pub vocabulary: &'static str,
    pub value: String,
}

impl FromStr for UsageRole {
    type Err = VocabularyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|r| r.label() == s)
            .ok_or_else(|| VocabularyError {
                vocabulary: "usage_role",
                value: s.to_string(),
            })
    }
}

impl FromStr for ContentType {
    type Err = VocabularyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|r| r.label() == s)
            .ok_or_else(|| VocabularyError {
                vocabulary: "content_type",
                value: s.to_string(),
            })
    }
}

impl fmt::Display for UsageRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl fmt::Display for ContentType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A validated dataset reference found in one citation window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMention {
    pub surface_name: String,
    pub usage_role: UsageRole,
    pub content_type: ContentType,
    /// Verbatim substring of the source window.
    pub evidence: String,
    pub confidence: f64,
    pub rationale: String,
    pub relation: Relation,
    pub context_id: String,
    pub extracted_url: Option<String>,
}

/// Outcome of the relevance pass for one mention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceVerdict {
    pub is_relevant: bool,
    pub confidence: f64,
    pub reasoning: String,
    /// Set when the backend gave no usable answer; `is_relevant` then reflects
    /// the configured fallback policy.
    #[serde(default)]
    pub undetermined: bool,
}
