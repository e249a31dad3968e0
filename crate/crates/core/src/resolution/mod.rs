//! Deterministic entity consolidation.
//!
//! Mentions are first consolidated per bibliographic relation, then grouped
//! globally by canonical key, and finally merged across keys that share a
//! family identifier (catalog number or DOI). No fuzzy or transitive merging
//! happens at any step.

mod family;
mod normalize;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub use family::{
    detect_family_ids, family_merge, load_family_mapping, FamilyAssignment, FamilyConflict,
    FamilyError,
};
pub use normalize::{
    normalize_name, CanonicalKey, NormalizeError, Normalizer, DEFAULT_GENERIC_WORDS,
};

use crate::corpus::Relation;
use crate::extraction::{ContentType, DatasetMention, UsageRole};
use crate::links::{prefer_pid, Link};

/// Mentions of one dataset on one relation, folded into their most reliable
/// member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsolidatedMention {
    pub representative: DatasetMention,
    pub canonical_key: CanonicalKey,
    /// Surface name of every absorbed mention, sorted, with repeats.
    pub surface_forms: Vec<String>,
    pub context_ids: BTreeSet<String>,
    /// Usage roles of every absorbed mention, sorted, with repeats.
    pub roles: Vec<UsageRole>,
    pub content_types: Vec<ContentType>,
    pub urls: Vec<String>,
    pub merged_count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LocalConsolidation {
    pub consolidated: Vec<ConsolidatedMention>,
    /// Mentions whose name normalizes to nothing; reported, never grouped.
    pub quarantine: Vec<DatasetMention>,
}

/// Consolidated dataset entity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedEntity {
    pub display_name: String,
    pub canonical_key: CanonicalKey,
    pub aliases: BTreeSet<String>,
    /// How often each surface form was seen; drives display-name selection.
    pub surface_counts: BTreeMap<String, usize>,
    pub provenance: BTreeSet<String>,
    pub relations: BTreeSet<Relation>,
    pub roles: BTreeMap<UsageRole, usize>,
    pub content_types: BTreeMap<ContentType, usize>,
    pub links: Vec<Link>,
    pub merged_mention_count: usize,
    pub citation_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family_id: Option<String>,
}

impl ResolvedEntity {
    /// Most frequent surface form; ties go to the lexicographically smallest.
    pub fn select_display_name(surface_counts: &BTreeMap<String, usize>) -> Option<String> {
        // BTreeMap iterates in ascending order, so the first maximum wins ties
        let mut best: Option<(&String, usize)> = None;
        for (name, &count) in surface_counts {
            if best.is_none_or(|(_, c)| count > c) {
                best = Some((name, count));
            }
        }
        best.map(|(n, _)| n.clone())
    }

    pub fn distinct_citing_papers(relations: &BTreeSet<Relation>) -> usize {
        relations
            .iter()
            .map(|r| r.citing_id.as_str())
            .collect::<BTreeSet<_>>()
            .len()
    }

    pub fn has_persistent_id(&self) -> bool {
        self.links.iter().any(|l| l.kind.is_persistent())
    }
}

fn representative_order(a: &DatasetMention, b: &DatasetMention) -> std::cmp::Ordering {
    // best first: confidence desc, longer surface, lexicographic, context id
    b.confidence
        .total_cmp(&a.confidence)
        .then_with(|| {
            b.surface_name
                .chars()
                .count()
                .cmp(&a.surface_name.chars().count())
        })
        .then_with(|| a.surface_name.cmp(&b.surface_name))
        .then_with(|| a.context_id.cmp(&b.context_id))
}

/// Folds mentions sharing (relation, canonical key) into one record.
pub fn local_consolidate(
    mentions: &[DatasetMention],
    normalizer: &Normalizer,
) -> LocalConsolidation {
    let mut groups: BTreeMap<(Relation, CanonicalKey), Vec<&DatasetMention>> = BTreeMap::new();
    let mut quarantine = Vec::new();
    for m in mentions {
        match normalizer.normalize(&m.surface_name) {
            Ok(key) => groups.entry((m.relation.clone(), key)).or_default().push(m),
            Err(_) => quarantine.push(m.clone()),
        }
    }
    quarantine
        .sort_by(|a, b| (&a.context_id, &a.surface_name).cmp(&(&b.context_id, &b.surface_name)));

    let consolidated = groups
        .into_iter()
        .map(|((_, canonical_key), mut members)| {
            members.sort_by(|a, b| representative_order(a, b));
            let mut surface_forms: Vec<String> =
                members.iter().map(|m| m.surface_name.clone()).collect();
            surface_forms.sort();
            let mut roles: Vec<UsageRole> = members.iter().map(|m| m.usage_role).collect();
            roles.sort();
            let mut content_types: Vec<ContentType> =
                members.iter().map(|m| m.content_type).collect();
            content_types.sort();
            let urls: BTreeSet<String> = members
                .iter()
                .filter_map(|m| m.extracted_url.clone())
                .collect();
            ConsolidatedMention {
                representative: members[0].clone(),
                canonical_key,
                surface_forms,
                context_ids: members.iter().map(|m| m.context_id.clone()).collect(),
                roles,
                content_types,
                urls: urls.into_iter().collect(),
                merged_count: members.len(),
            }
        })
        .collect();
    LocalConsolidation {
        consolidated,
        quarantine,
    }
}

fn count<T: Ord + Copy>(items: impl IntoIterator<Item = T>) -> BTreeMap<T, usize> {
    let mut out = BTreeMap::new();
    for item in items {
        *out.entry(item).or_insert(0) += 1;
    }
    out
}

/// One entity per canonical key, sorted by key.
pub fn group_entities(consolidated: &[ConsolidatedMention]) -> Vec<ResolvedEntity> {
    let mut groups: BTreeMap<&CanonicalKey, Vec<&ConsolidatedMention>> = BTreeMap::new();
    for c in consolidated {
        groups.entry(&c.canonical_key).or_default().push(c);
    }
    groups
        .into_iter()
        .map(|(key, members)| {
            let mut surface_counts: BTreeMap<String, usize> = BTreeMap::new();
            for form in members.iter().flat_map(|m| &m.surface_forms) {
                *surface_counts.entry(form.clone()).or_insert(0) += 1;
            }
            let relations: BTreeSet<Relation> = members
                .iter()
                .map(|m| m.representative.relation.clone())
                .collect();
            let display_name =
                ResolvedEntity::select_display_name(&surface_counts).expect("group is non-empty");
            ResolvedEntity {
                display_name,
                canonical_key: key.clone(),
                aliases: surface_counts.keys().cloned().collect(),
                provenance: members
                    .iter()
                    .flat_map(|m| m.context_ids.iter().cloned())
                    .collect(),
                citation_count: ResolvedEntity::distinct_citing_papers(&relations),
                relations,
                roles: count(members.iter().flat_map(|m| m.roles.iter().copied())),
                content_types: count(members.iter().flat_map(|m| m.content_types.iter().copied())),
                links: prefer_pid(
                    members
                        .iter()
                        .flat_map(|m| &m.urls)
                        .map(|u| Link::classify(u))
                        .collect(),
                ),
                merged_mention_count: members.iter().map(|m| m.merged_count).sum(),
                surface_counts,
                family_id: None,
            }
        })
        .collect()
}

/// Full resolution result for a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    /// Entities after family merging, sorted by canonical key.
    pub entities: Vec<ResolvedEntity>,
    /// Entity count after canonical-name grouping, before family merging.
    pub grouped_count: usize,
    pub quarantine: Vec<DatasetMention>,
    pub conflicts: Vec<FamilyConflict>,
}

/// Runs consolidation, grouping and family merging. `family_overrides`
/// takes precedence over identifiers detected in links.
pub fn resolve(
    mentions: &[DatasetMention],
    normalizer: &Normalizer,
    family_overrides: &BTreeMap<CanonicalKey, String>,
) -> Resolution {
    let local = local_consolidate(mentions, normalizer);
    let grouped = group_entities(&local.consolidated);
    let grouped_count = grouped.len();
    let assignment = detect_family_ids(&grouped, family_overrides);
    let entities = family_merge(grouped, &assignment.ids, normalizer);
    Resolution {
        entities,
        grouped_count,
        quarantine: local.quarantine,
        conflicts: assignment.conflicts,
    }
}
