//! External search backends used as the last link-resolution tier.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchHit {
    pub url: String,
    #[serde(default)]
    pub title: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SearchError {
    #[error("search transport error: {0}")]
    Transport(String),
    #[error("search backend returned status {0}")]
    Status(u16),
    #[error("search reply not understood: {0}")]
    Protocol(String),
}

/// Query string in, ranked `(url, title)` hits out.
pub trait SearchBackend: Send + Sync {
    fn search(&self, query: &str) -> Result<Vec<SearchHit>, SearchError>;

    fn describe(&self) -> String;
}

/// Returns no results for every query.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoSearch;

impl SearchBackend for NoSearch {
    fn search(&self, _query: &str) -> Result<Vec<SearchHit>, SearchError> {
        Ok(Vec::new())
    }

    fn describe(&self) -> String {
        "none".into()
    }
}

/// Canned results keyed by the exact query string.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureSearch {
    pub table: BTreeMap<String, Vec<SearchHit>>,
}

impl FixtureSearch {
    pub fn new(table: BTreeMap<String, Vec<SearchHit>>) -> Self {
        Self { table }
    }

    /// Reads a JSON object mapping query strings to hit lists.
    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let table = serde_json::from_str(&text).map_err(std::io::Error::other)?;
        Ok(Self { table })
    }
}

impl SearchBackend for FixtureSearch {
    fn search(&self, query: &str) -> Result<Vec<SearchHit>, SearchError> {
        Ok(self.table.get(query).cloned().unwrap_or_default())
    }

    fn describe(&self) -> String {
        format!("fixture:{}", self.table.len())
    }
}

/// `GET {endpoint}?q=<query>` answering with a JSON array of hits or an
/// object holding one under `results`.
pub struct HttpSearch {
    endpoint: String,
    agent: ureq::Agent,
}

impl HttpSearch {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            endpoint: endpoint.into(),
            agent,
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SearchReply {
    Hits(Vec<SearchHit>),
    Wrapped { results: Vec<SearchHit> },
}

impl SearchBackend for HttpSearch {
    fn search(&self, query: &str) -> Result<Vec<SearchHit>, SearchError> {
        let mut resp = self
            .agent
            .get(&self.endpoint)
            .query("q", query)
            .call()
            .map_err(|e| SearchError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        if status != 200 {
            return Err(SearchError::Status(status));
        }
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| SearchError::Transport(e.to_string()))?;
        match serde_json::from_str(&body).map_err(|e| SearchError::Protocol(e.to_string()))? {
            SearchReply::Hits(h) | SearchReply::Wrapped { results: h } => Ok(h),
        }
    }

    fn describe(&self) -> String {
        format!("http:{}", self.endpoint)
    }
}
