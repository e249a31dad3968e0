//! Snapshot readers. Papers and citations arrive either as newline-delimited
//! JSON records or as a columnar JSON object (one array per field, the same
//! layout the index directory uses).

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{CitationEdge, Paper};
use super::CorpusError;

const MAX_LISTED_REJECTS: usize = 200;
const YEAR_RANGE: std::ops::RangeInclusive<i32> = 1900..=2100;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowReject {
    pub file: String,
    /// 1-based line for JSONL input, 1-based row for columnar input.
    pub row: usize,
    pub reason: String,
}

/// Outcome of one ingestion, persisted next to the index.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub paper_rows: usize,
    pub papers_indexed: usize,
    pub papers_rejected: usize,
    pub duplicate_papers: usize,
    pub edge_rows: usize,
    pub edges_indexed: usize,
    pub edges_rejected: usize,
    pub duplicate_edges: usize,
    pub dangling_edges: usize,
    pub contexts: usize,
    pub rejects: Vec<RowReject>,
    pub warnings: Vec<String>,
}

impl IngestReport {
    fn reject(&mut self, file: &str, row: usize, reason: impl Into<String>) {
        if self.rejects.len() < MAX_LISTED_REJECTS {
            self.rejects.push(RowReject {
                file: file.to_string(),
                row,
                reason: reason.into(),
            });
        }
    }
}

/// Columnar paper table.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaperColumns {
    pub paper_id: Vec<String>,
    pub title: Vec<String>,
    #[serde(rename = "abstract")]
    pub abstract_text: Vec<String>,
    pub year: Vec<Option<i32>>,
    pub venue: Vec<String>,
    pub doi: Vec<Option<String>>,
    pub fields_of_study: Vec<BTreeSet<String>>,
}

impl PaperColumns {
    pub fn from_rows(papers: &[Paper]) -> Self {
        let mut cols = Self::default();
        for p in papers {
            cols.paper_id.push(p.paper_id.clone());
            cols.title.push(p.title.clone());
            cols.abstract_text.push(p.abstract_text.clone());
            cols.year.push(p.year);
            cols.venue.push(p.venue.clone());
            cols.doi.push(p.doi.clone());
            cols.fields_of_study.push(p.fields_of_study.clone());
        }
        cols
    }

    pub fn into_rows(self) -> Result<Vec<Paper>, String> {
        let n = self.paper_id.len();
        let lens = [
            self.title.len(),
            self.abstract_text.len(),
            self.year.len(),
            self.venue.len(),
            self.doi.len(),
            self.fields_of_study.len(),
        ];
        if lens.iter().any(|&l| l != n) {
            return Err(format!(
                "column lengths differ: paper_id has {n}, others {lens:?}"
            ));
        }
        Ok(itertools::izip!(
            self.paper_id,
            self.title,
            self.abstract_text,
            self.year,
            self.venue,
            self.doi,
            self.fields_of_study
        )
        .map(
            |(paper_id, title, abstract_text, year, venue, doi, fields_of_study)| Paper {
                paper_id,
                title,
                abstract_text,
                year,
                venue,
                doi,
                fields_of_study,
            },
        )
        .collect())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeColumns {
    pub citing_id: Vec<String>,
    pub cited_id: Vec<String>,
    pub contexts: Vec<Vec<String>>,
}

impl EdgeColumns {
    pub fn into_rows(self) -> Result<Vec<CitationEdge>, String> {
        let n = self.citing_id.len();
        if self.cited_id.len() != n || self.contexts.len() != n {
            return Err("column lengths differ".to_string());
        }
        Ok(
            itertools::izip!(self.citing_id, self.cited_id, self.contexts)
                .map(|(citing_id, cited_id, contexts)| CitationEdge {
                    citing_id,
                    cited_id,
                    contexts,
                })
                .collect(),
        )
    }
}

fn is_columnar(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "json")
}

fn file_label(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Reads `path` as either JSONL or columnar JSON, returning `(row number,
/// record)` pairs; malformed rows land in the report.
fn read_records<T, C>(
    path: &Path,
    report: &mut IngestReport,
    rejected: &mut usize,
    from_columns: impl FnOnce(C) -> Result<Vec<T>, String>,
) -> Result<Vec<(usize, T)>, CorpusError>
where
    T: for<'de> Deserialize<'de>,
    C: for<'de> Deserialize<'de>,
{
    let label = file_label(path);
    let raw = fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
    if is_columnar(path) {
        if raw.trim().is_empty() {
            return Ok(Vec::new());
        }
        let cols: C = serde_json::from_str(&raw).map_err(|e| CorpusError::Schema {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let rows = from_columns(cols).map_err(|message| CorpusError::Schema {
            path: path.to_path_buf(),
            message,
        })?;
        return Ok(rows
            .into_iter()
            .enumerate()
            .map(|(i, r)| (i + 1, r))
            .collect());
    }
    let mut out = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<T>(line) {
            Ok(record) => out.push((i + 1, record)),
            Err(e) => {
                *rejected += 1;
                report.reject(&label, i + 1, format!("malformed record: {e}"));
            }
        }
    }
    Ok(out)
}

fn paper_problem(p: &Paper) -> Option<String> {
    if p.paper_id.trim().is_empty() {
        return Some("empty paper_id".into());
    }
    match p.year {
        Some(y) if !YEAR_RANGE.contains(&y) => Some(format!("year {y} outside 1900..=2100")),
        _ => None,
    }
}

/// Reads and validates the papers file. Duplicate ids keep the last row.
pub fn read_papers(path: &Path, report: &mut IngestReport) -> Result<Vec<Paper>, CorpusError> {
    let label = file_label(path);
    let mut rejected = 0;
    let rows =
        read_records::<Paper, PaperColumns>(path, report, &mut rejected, PaperColumns::into_rows)?;
    report.paper_rows = rows.len() + rejected;

    let mut by_id: BTreeMap<String, Paper> = BTreeMap::new();
    for (row, paper) in rows {
        if let Some(reason) = paper_problem(&paper) {
            rejected += 1;
            report.reject(&label, row, reason);
            continue;
        }
        if by_id.contains_key(&paper.paper_id) {
            report.duplicate_papers += 1;
            report.warnings.push(format!(
                "{label}:{row}: duplicate paper_id {:?}, keeping last",
                paper.paper_id
            ));
        }
        by_id.insert(paper.paper_id.clone(), paper);
    }
    report.papers_rejected = rejected;
    report.papers_indexed = by_id.len();
    Ok(by_id.into_values().collect())
}

/// Reads and validates the citations file. Duplicate (citing, cited) pairs
/// keep the last row.
pub fn read_edges(
    path: &Path,
    report: &mut IngestReport,
) -> Result<Vec<CitationEdge>, CorpusError> {
    let label = file_label(path);
    let mut rejected = 0;
    let rows = read_records::<CitationEdge, EdgeColumns>(
        path,
        report,
        &mut rejected,
        EdgeColumns::into_rows,
    )?;
    report.edge_rows = rows.len() + rejected;

    let mut by_pair: BTreeMap<(String, String), CitationEdge> = BTreeMap::new();
    for (row, edge) in rows {
        let reason = if edge.citing_id.trim().is_empty() || edge.cited_id.trim().is_empty() {
            Some("empty citing_id or cited_id")
        } else if edge.citing_id == edge.cited_id {
            Some("self-citation")
        } else {
            None
        };
        if let Some(reason) = reason {
            rejected += 1;
            report.reject(&label, row, reason);
            continue;
        }
        let key = (edge.citing_id.clone(), edge.cited_id.clone());
        if by_pair.contains_key(&key) {
            report.duplicate_edges += 1;
            report.warnings.push(format!(
                "{label}:{row}: duplicate edge {} -> {}, keeping last",
                key.0, key.1
            ));
        }
        by_pair.insert(key, edge);
    }
    report.edges_rejected = rejected;
    report.edges_indexed = by_pair.len();
    Ok(by_pair.into_values().collect())
}
