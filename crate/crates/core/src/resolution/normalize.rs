//! Strict canonical-name normalization.
//!
//! Rule sequence: NFKC; trim surrounding quote and bracket marks; delete
//! parenthetical segments innermost-out; lowercase; punctuation to spaces;
//! drop generic type words and split markers as whole tokens; drop leading
//! articles; collapse whitespace. The sequence is re-applied until it reaches
//! a fixed point, so the result is always its own normalization.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

/// Generic type words and split markers removed as whole tokens.
pub const DEFAULT_GENERIC_WORDS: &[&str] = &[
    "dataset",
    "datasets",
    "corpus",
    "corpora",
    "benchmark",
    "benchmarks",
    "collection",
    "database",
    "train",
    "training",
    "test",
    "validation",
    "dev",
];

const LEADING_ARTICLES: &[&str] = &["the", "a", "an"];

const TRIM_MARKS: &[char] = &[
    '"', '\'', '`', '\u{201C}', '\u{201D}', '\u{2018}', '\u{2019}', '\u{00AB}', '\u{00BB}', '[',
    ']', '{', '}', '<', '>',
];

const MAX_PASSES: usize = 8;

static PARENTHETICAL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\([^()]*\)").expect("valid regex"));

/// Grouping key: lowercase alphanumeric tokens joined by single spaces.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CanonicalKey(String);

impl CanonicalKey {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Wraps an already-normalized string. Callers must pass a fixed point of
    /// [`Normalizer::normalize`].
    pub fn from_normalized(key: impl Into<String>) -> Self {
        Self(key.into())
    }
}

impl fmt::Display for CanonicalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for CanonicalKey {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NormalizeError {
    #[error("{0:?} normalizes to an empty name")]
    NormalizesToEmpty(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Normalizer {
    generic_words: BTreeSet<String>,
}

impl Default for Normalizer {
    fn default() -> Self {
        Self::with_generic_words(DEFAULT_GENERIC_WORDS.iter().copied())
    }
}

impl Normalizer {
    pub fn with_generic_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            generic_words: words
                .into_iter()
                .map(|w| w.as_ref().trim().to_lowercase())
                .collect(),
        }
    }

    /// Parses a word list: one word per line, `#` starts a comment.
    pub fn from_word_list(list: &str) -> Self {
        Self::with_generic_words(
            list.lines()
                .map(|l| l.split('#').next().unwrap_or("").trim())
                .filter(|l| !l.is_empty()),
        )
    }

    pub fn normalize(&self, surface: &str) -> Result<CanonicalKey, NormalizeError> {
        let mut current = self.pass(surface);
        for _ in 0..MAX_PASSES {
            let next = self.pass(&current);
            if next == current {
                break;
            }
            current = next;
        }
        if current.is_empty() {
            Err(NormalizeError::NormalizesToEmpty(surface.to_string()))
        } else {
            Ok(CanonicalKey(current))
        }
    }

    fn pass(&self, surface: &str) -> String {
        let text: String = surface.nfkc().collect();
        let text = strip_wrapping(&text);
        let text = delete_parentheticals(text);
        let lowered: String = text.to_lowercase().nfkc().collect();
        let spaced: String = lowered
            .chars()
            .map(|c| if c.is_alphanumeric() { c } else { ' ' })
            .collect();

        let mut tokens: Vec<&str> = spaced
            .split_whitespace()
            .filter(|t| !self.generic_words.contains(*t))
            .collect();
        let lead = tokens
            .iter()
            .take_while(|t| LEADING_ARTICLES.contains(t))
            .count();
        tokens.drain(..lead);
        tokens.join(" ")
    }
}

/// Trims quote/bracket marks and whitespace from both ends, plus a pair of
/// parentheses enclosing the whole string.
fn strip_wrapping(text: &str) -> &str {
    let mut s = text;
    loop {
        let trimmed = s.trim_matches(|c: char| c.is_whitespace() || TRIM_MARKS.contains(&c));
        let unwrapped = match (trimmed.strip_prefix('('), trimmed.strip_suffix(')')) {
            (Some(_), Some(_)) if closing_paren(trimmed) == Some(trimmed.len() - 1) => {
                &trimmed[1..trimmed.len() - 1]
            }
            _ => trimmed,
        };
        if unwrapped.len() == s.len() {
            return s;
        }
        s = unwrapped;
    }
}

/// Byte index of the parenthesis closing the one at index 0.
fn closing_paren(s: &str) -> Option<usize> {
    let mut depth = 0usize;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth = depth.checked_sub(1)?;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

fn delete_parentheticals(text: &str) -> String {
    let mut current = text.to_string();
    loop {
        let next = PARENTHETICAL.replace_all(&current, " ").into_owned();
        if next == current {
            return current;
        }
        current = next;
    }
}

static DEFAULT_NORMALIZER: LazyLock<Normalizer> = LazyLock::new(Normalizer::default);

/// Normalizes with the shipped generic-word list.
pub fn normalize_name(surface: &str) -> Result<CanonicalKey, NormalizeError> {
    DEFAULT_NORMALIZER.normalize(surface)
}
