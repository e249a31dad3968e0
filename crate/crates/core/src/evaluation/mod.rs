//! Recall at three matching granularities, FuzzyGain, redundancy and
//! evidence-quality shares against a gold standard.

mod gold;
mod matching;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use gold::{GoldItem, GoldStandard};
pub use matching::{
    levenshtein, match_all, match_exact, match_fuzzy, match_norm, normalized_levenshtein,
    MatchPair, MatchSets, MatchTier, Prediction, Similarity, DEFAULT_TAU,
};

use crate::resolution::Normalizer;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvaluationError {
    #[error("gold standard is empty")]
    EmptyGold,
    #[error("invalid gold standard: {0}")]
    InvalidGold(String),
    #[error("{mentions} mentions cannot yield {entities} entities")]
    InconsistentCounts { mentions: usize, entities: usize },
    #[error("tau {0} outside (0, 1]")]
    InvalidTau(f64),
    #[error("no reports to average")]
    NoReports,
    #[error("{0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportCounts {
    pub mentions: usize,
    pub entities_norm: usize,
    pub entities: usize,
    pub gold: usize,
    pub matched_exact: usize,
    pub matched_norm: usize,
    pub matched_fuzzy: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedItem {
    pub gold: GoldItem,
    pub entity: String,
    pub tier: MatchTier,
    pub similarity: f64,
}

/// Percentages are in [0, 100] and unrounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub query_label: String,
    pub exact_recall: f64,
    pub norm_recall: f64,
    pub fuzzy_recall: f64,
    pub fuzzy_gain: f64,
    pub redundancy: f64,
    pub trusted_pct: f64,
    pub with_pid_pct: f64,
    pub tau: f64,
    pub matched: Vec<MatchedItem>,
    pub unmatched: Vec<GoldItem>,
    pub counts: ReportCounts,
}

pub fn percent(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

/// `(mentions - entities) / max(1, entities)`.
pub fn redundancy(mentions: usize, entities_norm: usize) -> Result<f64, EvaluationError> {
    if mentions < entities_norm {
        return Err(EvaluationError::InconsistentCounts {
            mentions,
            entities: entities_norm,
        });
    }
    Ok((mentions - entities_norm) as f64 / entities_norm.max(1) as f64)
}

/// Builds the report from precomputed match sets.
///
/// `mentions` counts validated, relevant mentions; `entities_norm` is the
/// entity count after canonical-name grouping. Trusted share is taken over
/// entities matched at the norm tier, PID share over all predictions.
pub fn compute_report(
    mentions: usize,
    entities_norm: usize,
    predictions: &[Prediction],
    gold: &GoldStandard,
    sets: &MatchSets,
    tau: f64,
) -> Result<EvaluationReport, EvaluationError> {
    if gold.is_empty() {
        return Err(EvaluationError::EmptyGold);
    }
    let redundancy = redundancy(mentions, entities_norm)?;
    let n = gold.len();
    let exact_recall = percent(sets.exact.len(), n);
    let norm_recall = percent(sets.norm.len(), n);
    let fuzzy_recall = percent(sets.fuzzy.len(), n);

    let mut norm_matched_preds: Vec<usize> = sets
        .pairs
        .iter()
        .filter(|p| p.tier != MatchTier::Fuzzy)
        .map(|p| p.prediction)
        .collect();
    norm_matched_preds.sort_unstable();
    norm_matched_preds.dedup();
    let trusted = norm_matched_preds
        .iter()
        .filter(|&&p| predictions[p].trusted)
        .count();
    let with_pid = predictions.iter().filter(|p| p.has_pid).count();

    let matched = sets
        .pairs
        .iter()
        .map(|p| MatchedItem {
            gold: gold.items[p.gold].clone(),
            entity: predictions[p.prediction].name.clone(),
            tier: p.tier,
            similarity: p.similarity,
        })
        .collect();
    let unmatched = (0..n)
        .filter(|g| !sets.fuzzy.contains(g))
        .map(|g| gold.items[g].clone())
        .collect();

    Ok(EvaluationReport {
        query_label: gold.query_label.clone(),
        exact_recall,
        norm_recall,
        fuzzy_recall,
        fuzzy_gain: fuzzy_recall - norm_recall,
        redundancy,
        trusted_pct: percent(trusted, norm_matched_preds.len()),
        with_pid_pct: percent(with_pid, predictions.len()),
        tau,
        matched,
        unmatched,
        counts: ReportCounts {
            mentions,
            entities_norm,
            entities: predictions.len(),
            gold: n,
            matched_exact: sets.exact.len(),
            matched_norm: sets.norm.len(),
            matched_fuzzy: sets.fuzzy.len(),
        },
    })
}

/// Matches and reports in one step.
pub fn evaluate(
    mentions: usize,
    entities_norm: usize,
    predictions: &[Prediction],
    gold: &GoldStandard,
    normalizer: &Normalizer,
    tau: f64,
    sim: Similarity,
) -> Result<EvaluationReport, EvaluationError> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(EvaluationError::InvalidTau(tau));
    }
    let sets = match_all(predictions, gold, normalizer, tau, sim);
    compute_report(mentions, entities_norm, predictions, gold, &sets, tau)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecall {
    pub query_label: String,
    pub gold: usize,
    pub matched_norm: usize,
    pub norm_recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroSummary {
    pub queries: usize,
    pub exact_recall: f64,
    pub norm_recall: f64,
    pub fuzzy_recall: f64,
    pub fuzzy_gain: f64,
    pub per_query: Vec<QueryRecall>,
}

/// Unweighted mean of each recall tier across queries.
pub fn macro_average(reports: &[EvaluationReport]) -> Result<MacroSummary, EvaluationError> {
    if reports.is_empty() {
        return Err(EvaluationError::NoReports);
    }
    let n = reports.len() as f64;
    let mean = |f: fn(&EvaluationReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
    let exact_recall = mean(|r| r.exact_recall);
    let norm_recall = mean(|r| r.norm_recall);
    let fuzzy_recall = mean(|r| r.fuzzy_recall);
    Ok(MacroSummary {
        queries: reports.len(),
        exact_recall,
        norm_recall,
        fuzzy_recall,
        fuzzy_gain: fuzzy_recall - norm_recall,
        per_query: reports
            .iter()
            .map(|r| QueryRecall {
                query_label: r.query_label.clone(),
                gold: r.counts.gold,
                matched_norm: r.counts.matched_norm,
                norm_recall: r.norm_recall,
            })
            .collect(),
    })
}

/// Plain-text rendering: an overall metrics block followed by the
/// per-query gold/matched/recall rows.
pub fn render_text(method: &str, reports: &[EvaluationReport]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<24} {:>8} {:>9} {:>9} {:>9} {:>10} {:>10} {:>10} {:>10}",
        "Method",
        "Entities",
        "Exact(%)",
        "Norm(%)",
        "Fuzzy(%)",
        "FuzzyGain",
        "Trusted(%)",
        "WithPID(%)",
        "Redundancy"
    );
    for r in reports {
        let _ = writeln!(
            out,
            "{:<24} {:>8} {:>9.2} {:>9.2} {:>9.2} {:>10.2} {:>10.2} {:>10.2} {:>10.2}",
            method,
            r.counts.entities,
            r.exact_recall,
            r.norm_recall,
            r.fuzzy_recall,
            r.fuzzy_gain,
            r.trusted_pct,
            r.with_pid_pct,
            r.redundancy
        );
    }
    out.push('\n');
    let _ = writeln!(
        out,
        "{:<40} {:>6} {:>8} {:>10}",
        "Research Question", "Gold", "Matched", "Recall(%)"
    );
    for r in reports {
        let _ = writeln!(
            out,
            "{:<40} {:>6} {:>8} {:>10.2}",
            r.query_label, r.counts.gold, r.counts.matched_norm, r.norm_recall
        );
    }
    if let Ok(avg) = macro_average(reports) {
        let _ = writeln!(
            out,
            "{:<40} {:>6} {:>8} {:>10.2}",
            "Average Recall", "", "", avg.norm_recall
        );
    }
    out
}
