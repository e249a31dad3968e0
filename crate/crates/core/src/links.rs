//! Link values: persistent identifiers (DOI, Handle, ARK) and plain URLs.

use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

/// Persistent identifiers sort before plain URLs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum LinkKind {
    Doi,
    Handle,
    Ark,
    Url,
}

impl LinkKind {
    pub fn is_persistent(self) -> bool {
        !matches!(self, LinkKind::Url)
    }
}

impl fmt::Display for LinkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LinkKind::Doi => "DOI",
            LinkKind::Handle => "HANDLE",
            LinkKind::Ark => "ARK",
            LinkKind::Url => "URL",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Link {
    pub kind: LinkKind,
    pub value: String,
}

static DOI_SYNTAX: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^10\.\d{4,9}/\S+$").expect("valid regex"));
static DOI_IN_TEXT: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^(?:https?://(?:dx\.)?doi\.org/|doi:\s*)(10\.\d{4,9}/\S+)$")
        .expect("valid regex")
});
static HANDLE_URL: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^(?:https?://hdl\.handle\.net/|hdl:)(\d[\w.]*/\S+)$").expect("valid regex")
});
static ARK: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)(?:^|/)(ark:/?\d{5,9}/\S+)$").expect("valid regex"));
static LINKS_IN_TEXT: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r#"(?i)\bhttps?://[^\s<>"'()\[\]{}]+|\bdoi:\s*10\.\d{4,9}/[^\s<>"'()\[\]{}]+"#)
        .expect("valid regex")
});
static LDC_CATALOG: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\bLDC\d{4}[A-Z]\d{2,3}\b").expect("valid regex"));

pub fn is_doi(value: &str) -> bool {
    DOI_SYNTAX.is_match(value)
}

impl Link {
    /// Classifies a raw identifier or URL. DOIs are stored as the bare
    /// lowercase `10.x/y` form, ARKs as `ark:/NAAN/name`.
    pub fn classify(raw: &str) -> Self {
        let raw = raw.trim();
        if is_doi(raw) {
            return Self {
                kind: LinkKind::Doi,
                value: raw.to_lowercase(),
            };
        }
        if let Some(c) = DOI_IN_TEXT.captures(raw) {
            return Self {
                kind: LinkKind::Doi,
                value: c[1].to_lowercase(),
            };
        }
        if let Some(c) = HANDLE_URL.captures(raw) {
            return Self {
                kind: LinkKind::Handle,
                value: c[1].to_string(),
            };
        }
        if let Some(c) = ARK.captures(raw) {
            let ark = &c[1];
            let value = if ark[4..].starts_with('/') {
                ark.to_string()
            } else {
                format!("ark:/{}", &ark[4..])
            };
            return Self {
                kind: LinkKind::Ark,
                value,
            };
        }
        Self {
            kind: LinkKind::Url,
            value: raw.to_string(),
        }
    }

    /// Resolvable URL for the link.
    pub fn href(&self) -> String {
        match self.kind {
            LinkKind::Doi => format!("https://doi.org/{}", self.value),
            LinkKind::Handle => format!("https://hdl.handle.net/{}", self.value),
            LinkKind::Ark => format!("https://n2t.net/{}", self.value),
            LinkKind::Url => self.value.clone(),
        }
    }

    /// Family identifier carried by the link: an LDC catalog number anywhere
    /// in the value, or the DOI itself.
    pub fn family_id(&self) -> Option<String> {
        if let Some(m) = LDC_CATALOG.find(&self.value) {
            return Some(m.as_str().to_string());
        }
        match self.kind {
            LinkKind::Doi => Some(format!("doi:{}", self.value)),
            _ => None,
        }
    }
}

/// URLs and `doi:` identifiers appearing in free text, in order, with
/// trailing sentence punctuation removed.
pub fn find_links(text: &str) -> Vec<String> {
    LINKS_IN_TEXT
        .find_iter(text)
        .map(|m| {
            m.as_str()
                .trim_end_matches(['.', ',', ';', ':', '!', '?'])
                .to_string()
        })
        .collect()
}

/// Sorts PIDs before URLs and removes duplicates.
pub fn prefer_pid(mut links: Vec<Link>) -> Vec<Link> {
    links.sort();
    links.dedup();
    links
}
