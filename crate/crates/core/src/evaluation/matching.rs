//! Gold matching at three granularities.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::gold::GoldStandard;
use crate::resolution::{CanonicalKey, Normalizer, ResolvedEntity};
use crate::text::collapse_whitespace;

/// Default similarity threshold for fuzzy matching.
pub const DEFAULT_TAU: f64 = 0.9;

/// String comparator used by the fuzzy tier; must return 1.0 only for
/// identical inputs.
pub type Similarity = fn(&str, &str) -> f64;

/// Levenshtein distance over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let subst = prev[j] + usize::from(ca != cb);
            cur[j + 1] = subst.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `1 - lev(a, b) / max(|a|, |b|)`; two empty strings are identical.
pub fn normalized_levenshtein(a: &str, b: &str) -> f64 {
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        return 1.0;
    }
    1.0 - levenshtein(a, b) as f64 / longest as f64
}

/// What the matcher needs to know about one predicted entity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub name: String,
    #[serde(default)]
    pub aliases: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family_id: Option<String>,
    #[serde(default)]
    pub trusted: bool,
    #[serde(default)]
    pub has_pid: bool,
}

impl Prediction {
    pub fn named(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            aliases: Vec::new(),
            family_id: None,
            trusted: false,
            has_pid: false,
        }
    }

    pub fn from_entity(entity: &ResolvedEntity, trusted: bool, has_pid: bool) -> Self {
        Self {
            name: entity.display_name.clone(),
            aliases: entity
                .aliases
                .iter()
                .filter(|a| **a != entity.display_name)
                .cloned()
                .collect(),
            family_id: entity.family_id.clone(),
            trusted,
            has_pid,
        }
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.name.as_str()).chain(self.aliases.iter().map(String::as_str))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchTier {
    Exact,
    Norm,
    Fuzzy,
}

/// A gold item paired with the first prediction that matched it at the
/// tier where it was first matched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchPair {
    pub gold: usize,
    pub prediction: usize,
    pub tier: MatchTier,
    pub similarity: f64,
}

/// Matched gold indices per tier; each tier contains the previous one.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchSets {
    pub exact: BTreeSet<usize>,
    pub norm: BTreeSet<usize>,
    pub fuzzy: BTreeSet<usize>,
    pub pairs: Vec<MatchPair>,
}

fn family_match(p: &Prediction, family: Option<&str>) -> bool {
    matches!((p.family_id.as_deref(), family), (Some(a), Some(b)) if a == b)
}

/// Whitespace-normalized name sets per side.
fn ws_names<'a>(names: impl Iterator<Item = &'a str>) -> BTreeSet<String> {
    names.map(collapse_whitespace).collect()
}

/// Canonical name sets per side; names that normalize to nothing drop out.
fn norm_names<'a>(
    names: impl Iterator<Item = &'a str>,
    normalizer: &Normalizer,
) -> BTreeSet<CanonicalKey> {
    names.filter_map(|n| normalizer.normalize(n).ok()).collect()
}

/// Name sets of both sides, computed once per matching call.
struct Keys {
    pred_ws: Vec<BTreeSet<String>>,
    gold_ws: Vec<BTreeSet<String>>,
    pred_norm: Vec<BTreeSet<CanonicalKey>>,
    gold_norm: Vec<BTreeSet<CanonicalKey>>,
}

impl Keys {
    fn new(predictions: &[Prediction], gold: &GoldStandard, normalizer: &Normalizer) -> Self {
        Self {
            pred_ws: predictions.iter().map(|p| ws_names(p.names())).collect(),
            gold_ws: gold.items.iter().map(|g| ws_names(g.names())).collect(),
            pred_norm: predictions
                .iter()
                .map(|p| norm_names(p.names(), normalizer))
                .collect(),
            gold_norm: gold
                .items
                .iter()
                .map(|g| norm_names(g.names(), normalizer))
                .collect(),
        }
    }
}

fn exact_pair(
    keys: &Keys,
    predictions: &[Prediction],
    gold: &GoldStandard,
    gi: usize,
    pi: usize,
) -> bool {
    !keys.pred_ws[pi].is_disjoint(&keys.gold_ws[gi])
        || family_match(&predictions[pi], gold.items[gi].family_id.as_deref())
}

fn norm_pair(
    keys: &Keys,
    predictions: &[Prediction],
    gold: &GoldStandard,
    gi: usize,
    pi: usize,
) -> bool {
    !keys.pred_norm[pi].is_disjoint(&keys.gold_norm[gi])
        || family_match(&predictions[pi], gold.items[gi].family_id.as_deref())
}

/// For each gold item, the first prediction satisfying `pair`.
fn first_matches(
    predictions: &[Prediction],
    gold: &GoldStandard,
    pair: impl Fn(usize, usize) -> bool,
) -> Vec<(usize, usize)> {
    (0..gold.items.len())
        .filter_map(|gi| {
            (0..predictions.len())
                .find(|&pi| pair(gi, pi))
                .map(|pi| (gi, pi))
        })
        .collect()
}

/// Gold items matched by exact (whitespace-only) comparison of any name or
/// alias, or by a shared family id.
pub fn match_exact(predictions: &[Prediction], gold: &GoldStandard) -> Vec<(usize, usize)> {
    let keys = Keys {
        pred_ws: predictions.iter().map(|p| ws_names(p.names())).collect(),
        gold_ws: gold.items.iter().map(|g| ws_names(g.names())).collect(),
        pred_norm: Vec::new(),
        gold_norm: Vec::new(),
    };
    first_matches(predictions, gold, |g, p| {
        exact_pair(&keys, predictions, gold, g, p)
    })
}

/// As [`match_exact`] but comparing canonical keys.
pub fn match_norm(
    predictions: &[Prediction],
    gold: &GoldStandard,
    normalizer: &Normalizer,
) -> Vec<(usize, usize)> {
    let keys = Keys::new(predictions, gold, normalizer);
    first_matches(predictions, gold, |g, p| {
        norm_pair(&keys, predictions, gold, g, p)
    })
}

/// Best similarity between any canonical name of each side.
fn best_similarity(a: &BTreeSet<CanonicalKey>, b: &BTreeSet<CanonicalKey>, sim: Similarity) -> f64 {
    let mut best: f64 = 0.0;
    for x in a {
        for y in b {
            best = best.max(sim(x.as_str(), y.as_str()));
        }
    }
    best
}

/// Extends the norm-tier matches with a greedy one-to-one assignment of the
/// remaining gold items to predictions that matched nothing at the exact or
/// norm tier. Candidate pairs with similarity ≥ `tau` are taken by descending
/// similarity, then gold index, then prediction index.
pub fn match_fuzzy(
    predictions: &[Prediction],
    gold: &GoldStandard,
    normalizer: &Normalizer,
    tau: f64,
    sim: Similarity,
) -> Vec<(usize, usize, f64)> {
    let keys = Keys::new(predictions, gold, normalizer);
    fuzzy_with(&keys, predictions, gold, tau, sim)
}

fn fuzzy_with(
    keys: &Keys,
    predictions: &[Prediction],
    gold: &GoldStandard,
    tau: f64,
    sim: Similarity,
) -> Vec<(usize, usize, f64)> {
    let norm = first_matches(predictions, gold, |g, p| {
        norm_pair(keys, predictions, gold, g, p)
    });
    let mut out: Vec<(usize, usize, f64)> = norm.iter().map(|&(g, p)| (g, p, 1.0)).collect();
    let both = |g: usize, p: usize| {
        exact_pair(keys, predictions, gold, g, p) || norm_pair(keys, predictions, gold, g, p)
    };

    // anything matched at the exact or norm tier is spent
    let mut used_pred: Vec<bool> = (0..predictions.len())
        .map(|p| (0..gold.items.len()).any(|g| both(g, p)))
        .collect();
    let mut used_gold: Vec<bool> = (0..gold.items.len())
        .map(|g| (0..predictions.len()).any(|p| both(g, p)))
        .collect();

    let mut candidates = Vec::new();
    for gi in (0..gold.items.len()).filter(|&g| !used_gold[g]) {
        for pi in (0..predictions.len()).filter(|&p| !used_pred[p]) {
            let s = best_similarity(&keys.pred_norm[pi], &keys.gold_norm[gi], sim);
            if s >= tau {
                candidates.push((s, gi, pi));
            }
        }
    }
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    for (s, gi, pi) in candidates {
        if !used_gold[gi] && !used_pred[pi] {
            used_gold[gi] = true;
            used_pred[pi] = true;
            out.push((gi, pi, s));
        }
    }
    out.sort_by_key(|&(g, p, _)| (g, p));
    out
}

/// Runs all three tiers and cascades them so each tier contains the one
/// before it.
pub fn match_all(
    predictions: &[Prediction],
    gold: &GoldStandard,
    normalizer: &Normalizer,
    tau: f64,
    sim: Similarity,
) -> MatchSets {
    let keys = Keys::new(predictions, gold, normalizer);
    let exact = first_matches(predictions, gold, |g, p| {
        exact_pair(&keys, predictions, gold, g, p)
    });
    let norm = first_matches(predictions, gold, |g, p| {
        norm_pair(&keys, predictions, gold, g, p)
    });
    let fuzzy = fuzzy_with(&keys, predictions, gold, tau, sim);

    let mut sets = MatchSets::default();
    for &(g, p) in &exact {
        sets.exact.insert(g);
        sets.pairs.push(MatchPair {
            gold: g,
            prediction: p,
            tier: MatchTier::Exact,
            similarity: 1.0,
        });
    }
    sets.norm = sets.exact.clone();
    for &(g, p) in &norm {
        if sets.norm.insert(g) {
            sets.pairs.push(MatchPair {
                gold: g,
                prediction: p,
                tier: MatchTier::Norm,
                similarity: 1.0,
            });
        }
    }
    sets.fuzzy = sets.norm.clone();
    for &(g, p, s) in &fuzzy {
        if sets.fuzzy.insert(g) {
            sets.pairs.push(MatchPair {
                gold: g,
                prediction: p,
                tier: MatchTier::Fuzzy,
                similarity: s,
            });
        }
    }
    sets.pairs.sort_by_key(|m| m.gold);
    sets
}
