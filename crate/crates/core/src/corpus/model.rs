use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Default number of seed papers retrieved per query.
pub const DEFAULT_SEED_K: usize = 300;

/// Opaque paper key as found in the snapshot.
pub type PaperId = String;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paper {
    #[serde(alias = "paperId")]
    pub paper_id: PaperId,
    pub title: String,
    #[serde(default, rename = "abstract")]
    pub abstract_text: String,
    #[serde(default)]
    pub year: Option<i32>,
    #[serde(default)]
    pub venue: String,
    #[serde(default)]
    pub doi: Option<String>,
    #[serde(default, alias = "fieldsOfStudy")]
    pub fields_of_study: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CitationEdge {
    pub citing_id: PaperId,
    pub cited_id: PaperId,
    #[serde(default)]
    pub contexts: Vec<String>,
}

/// Directed (citing, cited) pair.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Relation {
    pub citing_id: PaperId,
    pub cited_id: PaperId,
}

impl Relation {
    pub fn new(citing_id: impl Into<PaperId>, cited_id: impl Into<PaperId>) -> Self {
        Self {
            citing_id: citing_id.into(),
            cited_id: cited_id.into(),
        }
    }
}

/// One sentence window tying a citing paper to a cited paper, joined with the
/// minimal metadata of both ends.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CitationContext {
    pub context_id: String,
    pub citing_id: PaperId,
    pub cited_id: PaperId,
    pub window_text: String,
    pub citing_title: String,
    pub cited_title: String,
    pub citing_abstract: String,
    pub cited_abstract: String,
}

impl CitationContext {
    pub fn relation(&self) -> Relation {
        Relation::new(self.citing_id.clone(), self.cited_id.clone())
    }
}

/// Deterministic context key for the `ordinal`-th snippet of an edge.
pub fn context_id(citing_id: &str, cited_id: &str, ordinal: usize) -> String {
    let mut hasher = Sha256::new();
    for part in [citing_id.as_bytes(), cited_id.as_bytes()] {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part);
    }
    hasher.update((ordinal as u64).to_le_bytes());
    let digest = hasher.finalize();
    format!("ctx-{}", hex::encode(&digest[..10]))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub text: String,
    #[serde(default)]
    pub field_constraints: BTreeSet<String>,
    #[serde(default = "default_seed_k")]
    pub seed_k: usize,
}

fn default_seed_k() -> usize {
    DEFAULT_SEED_K
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum QueryError {
    #[error("query text is empty")]
    EmptyText,
    #[error("seed_k must be at least 1")]
    ZeroSeedK,
}

impl Query {
    pub fn new(text: impl Into<String>) -> Result<Self, QueryError> {
        let query = Self {
            text: text.into(),
            field_constraints: BTreeSet::new(),
            seed_k: DEFAULT_SEED_K,
        };
        query.validate()?;
        Ok(query)
    }

    pub fn with_seed_k(mut self, k: usize) -> Self {
        self.seed_k = k;
        self
    }

    pub fn with_fields<I, S>(mut self, fields: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.field_constraints = fields.into_iter().map(Into::into).collect();
        self
    }

    pub fn validate(&self) -> Result<(), QueryError> {
        if self.text.trim().is_empty() {
            return Err(QueryError::EmptyText);
        }
        if self.seed_k == 0 {
            return Err(QueryError::ZeroSeedK);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn context_ids_are_stable_and_distinct() {
        let a = context_id("P1", "P2", 0);
        assert_eq!(a, context_id("P1", "P2", 0));
        assert_ne!(a, context_id("P1", "P2", 1));
        assert_ne!(a, context_id("P2", "P1", 0));
        // length prefixing keeps concatenation ambiguities apart
        assert_ne!(context_id("P1", "2", 0), context_id("P", "12", 0));
        assert!(a.starts_with("ctx-") && a.len() == 24);
    }

    #[test]
    fn query_validation() {
        assert_eq!(Query::new("  ").unwrap_err(), QueryError::EmptyText);
        let q = Query::new("event extraction").unwrap().with_seed_k(0);
        assert_eq!(q.validate().unwrap_err(), QueryError::ZeroSeedK);
        assert_eq!(Query::new("x").unwrap().seed_k, 300);
    }
}
