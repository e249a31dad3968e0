//! Merging of entities that share a family identifier.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CanonicalKey, Normalizer, ResolvedEntity};
use crate::links::prefer_pid;

#[derive(Debug, thiserror::Error)]
pub enum FamilyError {
    #[error("reading family mapping {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("family mapping line {line}: {message}")]
    Format { line: usize, message: String },
}

/// Entity whose links carry more than one family identifier. It is left
/// unmerged and flagged for review.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyConflict {
    pub canonical_key: CanonicalKey,
    pub candidates: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FamilyAssignment {
    pub ids: BTreeMap<CanonicalKey, String>,
    pub conflicts: Vec<FamilyConflict>,
}

#[derive(Deserialize)]
struct MappingRow {
    canonical_key: String,
    family_id: String,
}

/// Reads a JSONL file of `{"canonical_key": .., "family_id": ..}` rows.
/// Keys are normalized, so surface names are accepted too.
pub fn load_family_mapping(
    path: &Path,
    normalizer: &Normalizer,
) -> Result<BTreeMap<CanonicalKey, String>, FamilyError> {
    let text = std::fs::read_to_string(path).map_err(|source| FamilyError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: MappingRow = serde_json::from_str(line).map_err(|e| FamilyError::Format {
            line: i + 1,
            message: e.to_string(),
        })?;
        let key = normalizer
            .normalize(&row.canonical_key)
            .map_err(|e| FamilyError::Format {
                line: i + 1,
                message: e.to_string(),
            })?;
        if row.family_id.trim().is_empty() {
            return Err(FamilyError::Format {
                line: i + 1,
                message: "empty family_id".into(),
            });
        }
        out.insert(key, row.family_id.trim().to_string());
    }
    Ok(out)
}

/// Family id per entity: the override if present, else the unique id found
/// in the entity's links. Entities with several distinct ids get none.
pub fn detect_family_ids(
    entities: &[ResolvedEntity],
    overrides: &BTreeMap<CanonicalKey, String>,
) -> FamilyAssignment {
    let mut out = FamilyAssignment::default();
    for e in entities {
        if let Some(id) = overrides.get(&e.canonical_key) {
            out.ids.insert(e.canonical_key.clone(), id.clone());
            continue;
        }
        let found: BTreeSet<String> = e.links.iter().filter_map(|l| l.family_id()).collect();
        match found.len() {
            0 => {}
            1 => {
                out.ids.insert(
                    e.canonical_key.clone(),
                    found.into_iter().next().expect("one id"),
                );
            }
            _ => out.conflicts.push(FamilyConflict {
                canonical_key: e.canonical_key.clone(),
                candidates: found.into_iter().collect(),
            }),
        }
    }
    out
}

fn absorb(into: &mut ResolvedEntity, other: ResolvedEntity) {
    for (form, n) in other.surface_counts {
        *into.surface_counts.entry(form).or_insert(0) += n;
    }
    into.aliases.extend(other.aliases);
    into.provenance.extend(other.provenance);
    into.relations.extend(other.relations);
    for (r, n) in other.roles {
        *into.roles.entry(r).or_insert(0) += n;
    }
    for (c, n) in other.content_types {
        *into.content_types.entry(c).or_insert(0) += n;
    }
    into.links.extend(other.links);
    into.merged_mention_count += other.merged_mention_count;
}

/// Unions entities sharing a family id. The merged entity's display name is
/// reselected over all member surface forms and its key is that name's
/// canonical form. Entities without an id pass through unchanged.
pub fn family_merge(
    entities: Vec<ResolvedEntity>,
    family_of: &BTreeMap<CanonicalKey, String>,
    normalizer: &Normalizer,
) -> Vec<ResolvedEntity> {
    let mut out = Vec::new();
    let mut families: BTreeMap<String, Vec<ResolvedEntity>> = BTreeMap::new();
    for e in entities {
        match family_of.get(&e.canonical_key) {
            Some(id) => families.entry(id.clone()).or_default().push(e),
            None => out.push(e),
        }
    }
    for (id, mut members) in families {
        members.sort_by(|a, b| a.canonical_key.cmp(&b.canonical_key));
        let mut iter = members.into_iter();
        let mut merged = iter.next().expect("family is non-empty");
        for other in iter {
            absorb(&mut merged, other);
        }
        merged.links = prefer_pid(std::mem::take(&mut merged.links));
        merged.display_name = ResolvedEntity::select_display_name(&merged.surface_counts)
            .expect("entity has surface forms");
        // the display name came from a member, so it normalizes
        merged.canonical_key = normalizer
            .normalize(&merged.display_name)
            .unwrap_or(merged.canonical_key);
        merged.citation_count = ResolvedEntity::distinct_citing_papers(&merged.relations);
        merged.family_id = Some(id);
        out.push(merged);
    }
    out.sort_by(|a, b| a.canonical_key.cmp(&b.canonical_key));
    out
}
