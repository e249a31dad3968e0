//! Link attachment, source-trust classification and citation-count ranking.

mod search;

use std::cmp::Reverse;
use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use search::{FixtureSearch, HttpSearch, NoSearch, SearchBackend, SearchError, SearchHit};

use crate::corpus::{Corpus, Paper};
use crate::links::{Link, LinkKind};
use crate::resolution::ResolvedEntity;

pub const DEFAULT_TRUSTED_HOSTS: &str = include_str!("../../config/trusted_hosts.txt");

/// Title words marking a cited paper as one that introduces a resource.
pub const RESOURCE_TITLE_PATTERNS: &[&str] = &["dataset", "corpus", "benchmark", "shared task"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LinkTier {
    ContextExtracted,
    #[serde(rename = "CitedPaperDOI")]
    CitedPaperDoi,
    ExternalSearch,
}

impl fmt::Display for LinkTier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LinkTier::ContextExtracted => "ContextExtracted",
            LinkTier::CitedPaperDoi => "CitedPaperDOI",
            LinkTier::ExternalSearch => "ExternalSearch",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkRecord {
    pub kind: LinkKind,
    pub value: String,
    pub tier: LinkTier,
    pub trusted: bool,
}

impl LinkRecord {
    pub fn link(&self) -> Link {
        Link {
            kind: self.kind,
            value: self.value.clone(),
        }
    }

    pub fn href(&self) -> String {
        self.link().href()
    }
}

/// Why an entity ended up without a link.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "flag", content = "detail", rename_all = "snake_case")]
pub enum LinkFlag {
    NotFound,
    SearchFailed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkOutcome {
    pub link: Option<LinkRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag: Option<LinkFlag>,
}

/// Host patterns whose landing pages count as trusted. A pattern matches the
/// host itself and its subdomains.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrustedHosts {
    hosts: Vec<String>,
}

impl Default for TrustedHosts {
    fn default() -> Self {
        Self::parse(DEFAULT_TRUSTED_HOSTS)
    }
}

impl TrustedHosts {
    /// One host per line; `#` starts a comment; a leading `*.` is ignored.
    pub fn parse(text: &str) -> Self {
        let mut hosts: Vec<String> = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .map(|l| {
                l.trim_start_matches("*.")
                    .trim_end_matches('.')
                    .to_ascii_lowercase()
            })
            .filter(|l| !l.is_empty())
            .collect();
        hosts.sort();
        hosts.dedup();
        Self { hosts }
    }

    pub fn hosts(&self) -> &[String] {
        &self.hosts
    }

    pub fn matches_host(&self, host: &str) -> bool {
        let host = host.trim_end_matches('.').to_ascii_lowercase();
        let host = host.strip_prefix("www.").unwrap_or(&host);
        self.hosts
            .iter()
            .any(|h| host == h || host.ends_with(&format!(".{h}")))
    }
}

/// PIDs are trusted unconditionally; URLs only on a listed host.
pub fn classify_trust(link: &Link, trusted: &TrustedHosts) -> bool {
    if link.kind.is_persistent() {
        return true;
    }
    match url::Url::parse(&link.value) {
        Ok(u) if matches!(u.scheme(), "http" | "https") => {
            u.host_str().is_some_and(|h| trusted.matches_host(h))
        }
        _ => false,
    }
}

pub fn is_resource_paper(paper: &Paper) -> bool {
    let title = paper.title.to_lowercase();
    RESOURCE_TITLE_PATTERNS.iter().any(|p| title.contains(p))
}

fn record(link: Link, tier: LinkTier, trusted: &TrustedHosts) -> LinkRecord {
    let is_trusted = classify_trust(&link, trusted);
    LinkRecord {
        kind: link.kind,
        value: link.value,
        tier,
        trusted: is_trusted,
    }
}

/// DOI of the resource paper the entity's relations cite most often; ties go
/// to the smaller paper id.
fn cited_resource_doi(entity: &ResolvedEntity, corpus: &Corpus) -> Option<Link> {
    let mut votes: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &entity.relations {
        *votes.entry(r.cited_id.as_str()).or_insert(0) += 1;
    }
    let mut candidates: Vec<(&str, usize)> = votes.into_iter().collect();
    candidates.sort_by_key(|&(id, n)| (Reverse(n), id));
    candidates.into_iter().find_map(|(id, _)| {
        let paper = corpus.paper(id)?;
        let doi = paper.doi.as_deref()?;
        let link = Link::classify(doi);
        (link.kind == LinkKind::Doi && is_resource_paper(paper)).then_some(link)
    })
}

/// First tier that yields a link wins: a URL extracted from the entity's own
/// contexts, then a cited resource paper's DOI, then external search on the
/// display name. Search failures produce no link and a flag.
pub fn resolve_link(
    entity: &ResolvedEntity,
    corpus: &Corpus,
    search: &dyn SearchBackend,
    trusted: &TrustedHosts,
) -> LinkOutcome {
    if let Some(link) = entity.links.first() {
        return LinkOutcome {
            link: Some(record(link.clone(), LinkTier::ContextExtracted, trusted)),
            flag: None,
        };
    }
    if let Some(link) = cited_resource_doi(entity, corpus) {
        return LinkOutcome {
            link: Some(record(link, LinkTier::CitedPaperDoi, trusted)),
            flag: None,
        };
    }
    match search.search(&entity.display_name) {
        Ok(hits) => match hits.into_iter().find(|h| !h.url.trim().is_empty()) {
            Some(hit) => LinkOutcome {
                link: Some(record(
                    Link::classify(&hit.url),
                    LinkTier::ExternalSearch,
                    trusted,
                )),
                flag: None,
            },
            None => LinkOutcome {
                link: None,
                flag: Some(LinkFlag::NotFound),
            },
        },
        Err(e) => {
            tracing::warn!(entity = %entity.display_name, error = %e, "link search failed");
            LinkOutcome {
                link: None,
                flag: Some(LinkFlag::SearchFailed(e.to_string())),
            }
        }
    }
}

/// Resolves links for every entity, in input order, using up to
/// `parallelism` threads.
pub fn resolve_links(
    entities: &[ResolvedEntity],
    corpus: &Corpus,
    search: &dyn SearchBackend,
    trusted: &TrustedHosts,
    parallelism: usize,
) -> Vec<LinkOutcome> {
    let run = || {
        entities
            .par_iter()
            .map(|e| resolve_link(e, corpus, search, trusted))
            .collect()
    };
    match rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
    {
        Ok(pool) => pool.install(run),
        Err(_) => entities
            .iter()
            .map(|e| resolve_link(e, corpus, search, trusted))
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedEntity {
    pub entity: ResolvedEntity,
    pub rank: usize,
    pub citation_count: usize,
}

/// Citation count descending, display name ascending, canonical key as the
/// final tiebreak; ranks are 1..n.
pub fn rank_entities(entities: Vec<ResolvedEntity>) -> Vec<RankedEntity> {
    let mut keyed: Vec<(usize, ResolvedEntity)> = entities
        .into_iter()
        .map(|e| (ResolvedEntity::distinct_citing_papers(&e.relations), e))
        .collect();
    keyed.sort_by(|(ca, a), (cb, b)| {
        cb.cmp(ca)
            .then_with(|| a.display_name.cmp(&b.display_name))
            .then_with(|| a.canonical_key.cmp(&b.canonical_key))
    });
    keyed
        .into_iter()
        .enumerate()
        .map(|(i, (citation_count, entity))| RankedEntity {
            entity,
            rank: i + 1,
            citation_count,
        })
        .collect()
}
