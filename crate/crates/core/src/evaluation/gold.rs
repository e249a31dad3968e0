//! Survey-derived gold standards.
//!
//! File format (JSONL): an optional header line `{"query_label": ".."}`
//! followed by one item per line,
//! `{"name": "..", "aliases": [".."], "family_id": ".."}`; `aliases` and
//! `family_id` are optional. Without a header the file stem is the label.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EvaluationError;
use crate::resolution::Normalizer;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldItem {
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub aliases: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family_id: Option<String>,
}

impl GoldItem {
    pub fn named(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            aliases: Vec::new(),
            family_id: None,
        }
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.name.as_str()).chain(self.aliases.iter().map(String::as_str))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldStandard {
    pub query_label: String,
    pub items: Vec<GoldItem>,
}

#[derive(Deserialize)]
struct Header {
    query_label: String,
}

impl GoldStandard {
    /// Rejects an empty item list and names that collide or vanish under the
    /// default normalizer.
    pub fn new(
        query_label: impl Into<String>,
        items: Vec<GoldItem>,
    ) -> Result<Self, EvaluationError> {
        Self::with_normalizer(query_label, items, &Normalizer::default())
    }

    pub fn with_normalizer(
        query_label: impl Into<String>,
        items: Vec<GoldItem>,
        normalizer: &Normalizer,
    ) -> Result<Self, EvaluationError> {
        if items.is_empty() {
            return Err(EvaluationError::EmptyGold);
        }
        let mut seen: BTreeMap<String, &str> = BTreeMap::new();
        for item in &items {
            let key = normalizer.normalize(&item.name).map_err(|_| {
                EvaluationError::InvalidGold(format!(
                    "gold name {:?} normalizes to nothing",
                    item.name
                ))
            })?;
            if let Some(prev) = seen.insert(key.as_str().to_string(), &item.name) {
                return Err(EvaluationError::InvalidGold(format!(
                    "gold names {prev:?} and {:?} collide after normalization",
                    item.name
                )));
            }
        }
        Ok(Self {
            query_label: query_label.into(),
            items,
        })
    }

    pub fn parse(text: &str, default_label: &str) -> Result<Self, EvaluationError> {
        let mut label = default_label.to_string();
        let mut items = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if items.is_empty() {
                if let Ok(h) = serde_json::from_str::<Header>(line) {
                    label = h.query_label;
                    continue;
                }
            }
            let item: GoldItem = serde_json::from_str(line)
                .map_err(|e| EvaluationError::InvalidGold(format!("line {}: {e}", i + 1)))?;
            items.push(item);
        }
        Self::new(label, items)
    }

    pub fn load(path: &Path) -> Result<Self, EvaluationError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| EvaluationError::Io(format!("{}: {e}", path.display())))?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("gold");
        Self::parse(&text, stem)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}
