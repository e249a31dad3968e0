//! Ranked output table and its evidence snippets.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::CitationContext;
use crate::enrichment::{LinkFlag, LinkOutcome, LinkRecord, RankedEntity};
use crate::extraction::{ContentType, DatasetMention, UsageRole};
use crate::resolution::ResolvedEntity;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceSnippet {
    pub context_id: String,
    pub citing_id: String,
    pub cited_id: String,
    pub citing_title: String,
    pub cited_title: String,
    pub window_text: String,
    /// Verbatim substring of `window_text`.
    pub evidence: String,
    pub surface_name: String,
    pub usage_role: UsageRole,
    pub content_type: ContentType,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub rank: usize,
    pub display_name: String,
    pub canonical_key: String,
    pub citation_count: usize,
    pub mention_count: usize,
    pub aliases: Vec<String>,
    pub roles: BTreeMap<UsageRole, usize>,
    pub content_types: BTreeMap<ContentType, usize>,
    pub link: Option<LinkRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link_flag: Option<LinkFlag>,
    pub trusted: bool,
    pub has_pid: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family_id: Option<String>,
    pub evidence: Vec<EvidenceSnippet>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedTable {
    pub run_id: String,
    pub query: String,
    pub rows: Vec<TableRow>,
}

/// Evidence for an entity: kept mentions from its provenance contexts whose
/// surface form is one of its aliases, most confident first.
pub fn entity_evidence(
    entity: &ResolvedEntity,
    mentions: &[DatasetMention],
    contexts: &HashMap<&str, &CitationContext>,
) -> Vec<EvidenceSnippet> {
    let mut out: Vec<EvidenceSnippet> = mentions
        .iter()
        .filter(|m| {
            entity.provenance.contains(&m.context_id) && entity.aliases.contains(&m.surface_name)
        })
        .filter_map(|m| {
            let c = contexts.get(m.context_id.as_str())?;
            Some(EvidenceSnippet {
                context_id: m.context_id.clone(),
                citing_id: c.citing_id.clone(),
                cited_id: c.cited_id.clone(),
                citing_title: c.citing_title.clone(),
                cited_title: c.cited_title.clone(),
                window_text: c.window_text.clone(),
                evidence: m.evidence.clone(),
                surface_name: m.surface_name.clone(),
                usage_role: m.usage_role,
                content_type: m.content_type,
                confidence: m.confidence,
            })
        })
        .collect();
    out.sort_by(|a, b| {
        b.confidence
            .total_cmp(&a.confidence)
            .then_with(|| a.context_id.cmp(&b.context_id))
            .then_with(|| a.surface_name.cmp(&b.surface_name))
    });
    out
}

pub fn build_row(
    ranked: &RankedEntity,
    link: &LinkOutcome,
    evidence: &[EvidenceSnippet],
    per_row: usize,
) -> TableRow {
    let e = &ranked.entity;
    let trusted = link.link.as_ref().is_some_and(|l| l.trusted);
    let has_pid = link.link.as_ref().is_some_and(|l| l.kind.is_persistent());
    TableRow {
        rank: ranked.rank,
        display_name: e.display_name.clone(),
        canonical_key: e.canonical_key.as_str().to_string(),
        citation_count: ranked.citation_count,
        mention_count: e.merged_mention_count,
        aliases: e.aliases.iter().cloned().collect(),
        roles: e.roles.clone(),
        content_types: e.content_types.clone(),
        link: link.link.clone(),
        link_flag: link.flag.clone(),
        trusted,
        has_pid,
        family_id: e.family_id.clone(),
        evidence: evidence.iter().take(per_row).cloned().collect(),
    }
}

fn tsv_cell(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

/// Tab-separated export with a header line.
pub fn to_tsv(table: &RankedTable) -> String {
    let mut out = String::from(
        "rank\tdataset\tcitations\tmentions\troles\tcontent_types\tlink\tlink_kind\tlink_tier\ttrusted\taliases\n",
    );
    for r in &table.rows {
        let roles: Vec<String> = r
            .roles
            .iter()
            .map(|(k, v)| format!("{}={v}", k.label()))
            .collect();
        let types: Vec<String> = r
            .content_types
            .iter()
            .map(|(k, v)| format!("{}={v}", k.label()))
            .collect();
        let (href, kind, tier) = match &r.link {
            Some(l) => (l.href(), l.kind.to_string(), l.tier.to_string()),
            None => (String::new(), String::new(), String::new()),
        };
        let fields = [
            r.rank.to_string(),
            r.display_name.clone(),
            r.citation_count.to_string(),
            r.mention_count.to_string(),
            roles.join("; "),
            types.join("; "),
            href,
            kind,
            tier,
            r.trusted.to_string(),
            r.aliases.join("; "),
        ];
        let cells: Vec<String> = fields.iter().map(|f| tsv_cell(f)).collect();
        out.push_str(&cells.join("\t"));
        out.push('\n');
    }
    out
}
