//! Local citation-context index over a scholarly snapshot.
//!
//! Ingestion turns a papers file and a citations file into three tables: the
//! paper table (key lookup + BM25 over title and abstract), the edge table,
//! and a prebuilt context table holding one sentence window per raw snippet.
//! Queries join the context table with paper metadata on demand.

mod bm25;
mod ingest;
mod model;
mod window;

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use bm25::{Bm25Index, BM25_B, BM25_K1};
pub use ingest::{read_edges, read_papers, EdgeColumns, IngestReport, PaperColumns, RowReject};
pub use model::{
    context_id, CitationContext, CitationEdge, Paper, PaperId, Query, QueryError, Relation,
    DEFAULT_SEED_K,
};
pub use window::{find_marker, snippet_window, window_extract, DEFAULT_WINDOW_RADIUS};

const INDEX_FORMAT: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: does not match the expected schema: {message}")]
    Schema { path: PathBuf, message: String },
    #[error("index at {0} was written by an incompatible version")]
    Format(PathBuf),
    #[error(transparent)]
    Query(#[from] QueryError),
}

impl CorpusError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestOptions {
    /// Sentences kept on each side of the marker sentence.
    pub window_radius: usize,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            window_radius: DEFAULT_WINDOW_RADIUS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub citing_id: PaperId,
    pub cited_id: PaperId,
    pub contexts: usize,
    /// True when either end is absent from the paper table.
    pub dangling: bool,
}

/// Row of the prebuilt context table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextRow {
    pub context_id: String,
    pub citing_id: PaperId,
    pub cited_id: PaperId,
    pub ordinal: usize,
    pub window_text: String,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct ContextColumns {
    context_id: Vec<String>,
    citing_id: Vec<String>,
    cited_id: Vec<String>,
    ordinal: Vec<usize>,
    window_text: Vec<String>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct EdgeTable {
    citing_id: Vec<String>,
    cited_id: Vec<String>,
    contexts: Vec<usize>,
    dangling: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexManifest {
    pub format: u32,
    pub papers: usize,
    pub edges: usize,
    pub contexts: usize,
    pub window_radius: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedHit {
    pub paper_id: PaperId,
    pub score: f64,
}

/// Immutable, query-ready corpus. Safe to share across threads once built.
#[derive(Debug)]
pub struct Corpus {
    papers: Vec<Paper>,
    by_id: HashMap<PaperId, usize>,
    edges: Vec<EdgeRecord>,
    contexts: Vec<ContextRow>,
    contexts_by_paper: HashMap<PaperId, Vec<usize>>,
    bm25: Bm25Index,
    window_radius: usize,
}

impl Corpus {
    /// Builds a corpus from the two snapshot files.
    pub fn ingest(
        papers_path: &Path,
        citations_path: &Path,
        options: IngestOptions,
    ) -> Result<(Self, IngestReport), CorpusError> {
        let mut report = IngestReport::default();
        let papers = read_papers(papers_path, &mut report)?;
        let raw_edges = read_edges(citations_path, &mut report)?;
        let corpus = Self::from_parts(papers, raw_edges, options);
        report.dangling_edges = corpus.edges.iter().filter(|e| e.dangling).count();
        report.contexts = corpus.contexts.len();
        for e in corpus.edges.iter().filter(|e| e.dangling) {
            tracing::debug!(citing = %e.citing_id, cited = %e.cited_id, "dangling edge");
        }
        Ok((corpus, report))
    }

    /// Assembles the tables from already validated rows. Papers must have
    /// unique ids and edges unique (citing, cited) pairs.
    pub fn from_parts(
        mut papers: Vec<Paper>,
        mut raw_edges: Vec<CitationEdge>,
        options: IngestOptions,
    ) -> Self {
        papers.sort_by(|a, b| a.paper_id.cmp(&b.paper_id));
        raw_edges.sort_by(|a, b| (&a.citing_id, &a.cited_id).cmp(&(&b.citing_id, &b.cited_id)));
        let by_id: HashMap<_, _> = papers
            .iter()
            .enumerate()
            .map(|(i, p)| (p.paper_id.clone(), i))
            .collect();

        let mut edges = Vec::with_capacity(raw_edges.len());
        let mut contexts = Vec::new();
        for edge in raw_edges {
            let dangling =
                !by_id.contains_key(&edge.citing_id) || !by_id.contains_key(&edge.cited_id);
            let mut kept = 0;
            for (ordinal, snippet) in edge.contexts.iter().enumerate() {
                let window_text = snippet_window(snippet, options.window_radius);
                if window_text.is_empty() {
                    continue;
                }
                kept += 1;
                contexts.push(ContextRow {
                    context_id: context_id(&edge.citing_id, &edge.cited_id, ordinal),
                    citing_id: edge.citing_id.clone(),
                    cited_id: edge.cited_id.clone(),
                    ordinal,
                    window_text,
                });
            }
            edges.push(EdgeRecord {
                citing_id: edge.citing_id,
                cited_id: edge.cited_id,
                contexts: kept,
                dangling,
            });
        }
        contexts.sort_by(|a, b| a.context_id.cmp(&b.context_id));
        Self::assemble(papers, by_id, edges, contexts, options.window_radius)
    }

    fn assemble(
        papers: Vec<Paper>,
        by_id: HashMap<PaperId, usize>,
        edges: Vec<EdgeRecord>,
        contexts: Vec<ContextRow>,
        window_radius: usize,
    ) -> Self {
        let mut contexts_by_paper: HashMap<PaperId, Vec<usize>> = HashMap::new();
        for (i, row) in contexts.iter().enumerate() {
            contexts_by_paper
                .entry(row.citing_id.clone())
                .or_default()
                .push(i);
            contexts_by_paper
                .entry(row.cited_id.clone())
                .or_default()
                .push(i);
        }
        let docs: Vec<String> = papers
            .iter()
            .map(|p| format!("{} {}", p.title, p.abstract_text))
            .collect();
        let bm25 = Bm25Index::build(docs.iter().map(String::as_str));
        Self {
            papers,
            by_id,
            edges,
            contexts,
            contexts_by_paper,
            bm25,
            window_radius,
        }
    }

    pub fn paper_count(&self) -> usize {
        self.papers.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn context_count(&self) -> usize {
        self.contexts.len()
    }

    pub fn window_radius(&self) -> usize {
        self.window_radius
    }

    pub fn papers(&self) -> &[Paper] {
        &self.papers
    }

    pub fn edges(&self) -> &[EdgeRecord] {
        &self.edges
    }

    pub fn context_rows(&self) -> &[ContextRow] {
        &self.contexts
    }

    pub fn paper(&self, id: &str) -> Option<&Paper> {
        self.by_id.get(id).map(|&i| &self.papers[i])
    }

    pub fn manifest(&self) -> IndexManifest {
        IndexManifest {
            format: INDEX_FORMAT,
            papers: self.papers.len(),
            edges: self.edges.len(),
            contexts: self.contexts.len(),
            window_radius: self.window_radius,
        }
    }

    /// SHA-256 over the canonical contents of all three tables.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for part in [
            serde_json::to_vec(&self.papers),
            serde_json::to_vec(&self.edges),
            serde_json::to_vec(&self.contexts),
        ] {
            let bytes = part.expect("corpus tables serialize");
            h.update((bytes.len() as u64).to_le_bytes());
            h.update(&bytes);
        }
        h.update((self.window_radius as u64).to_le_bytes());
        hex::encode(h.finalize())
    }

    /// Top `query.seed_k` papers by BM25 over title + abstract, restricted to
    /// papers carrying at least one of the query's field constraints. Papers
    /// without any query token never appear. Ties break by paper id.
    pub fn seed_search(&self, query: &Query) -> Result<Vec<SeedHit>, QueryError> {
        query.validate()?;
        let mut hits: Vec<SeedHit> = self
            .bm25
            .score_all(&query.text)
            .into_iter()
            .filter(|&(doc, _)| {
                query.field_constraints.is_empty()
                    || !self.papers[doc]
                        .fields_of_study
                        .is_disjoint(&query.field_constraints)
            })
            .map(|(doc, score)| SeedHit {
                paper_id: self.papers[doc].paper_id.clone(),
                score,
            })
            .collect();
        hits.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then_with(|| a.paper_id.cmp(&b.paper_id))
        });
        hits.truncate(query.seed_k);
        Ok(hits)
    }

    /// Every context in which a seed is the citing or the cited paper, sorted
    /// by context id. Seeds missing from the paper table are skipped.
    pub fn expand_contexts<'a>(
        &self,
        seeds: impl IntoIterator<Item = &'a str>,
    ) -> Vec<CitationContext> {
        let mut rows = BTreeSet::new();
        for seed in seeds {
            if !self.by_id.contains_key(seed) {
                tracing::warn!(seed, "seed paper not in corpus, skipped");
                continue;
            }
            if let Some(idx) = self.contexts_by_paper.get(seed) {
                rows.extend(idx.iter().copied());
            }
        }
        // row order is context_id order
        rows.into_iter()
            .map(|i| self.join_context(&self.contexts[i]))
            .collect()
    }

    fn join_context(&self, row: &ContextRow) -> CitationContext {
        let citing = self.paper(&row.citing_id);
        let cited = self.paper(&row.cited_id);
        CitationContext {
            context_id: row.context_id.clone(),
            citing_id: row.citing_id.clone(),
            cited_id: row.cited_id.clone(),
            window_text: row.window_text.clone(),
            citing_title: citing.map(|p| p.title.clone()).unwrap_or_default(),
            cited_title: cited.map(|p| p.title.clone()).unwrap_or_default(),
            citing_abstract: citing.map(|p| p.abstract_text.clone()).unwrap_or_default(),
            cited_abstract: cited.map(|p| p.abstract_text.clone()).unwrap_or_default(),
        }
    }

    /// Writes the index directory. Output bytes depend only on the corpus
    /// contents.
    pub fn save(&self, dir: &Path, report: Option<&IngestReport>) -> Result<(), CorpusError> {
        fs::create_dir_all(dir).map_err(|e| CorpusError::io(dir, e))?;
        let edges = EdgeTable {
            citing_id: self.edges.iter().map(|e| e.citing_id.clone()).collect(),
            cited_id: self.edges.iter().map(|e| e.cited_id.clone()).collect(),
            contexts: self.edges.iter().map(|e| e.contexts).collect(),
            dangling: self.edges.iter().map(|e| e.dangling).collect(),
        };
        let contexts = ContextColumns {
            context_id: self.contexts.iter().map(|c| c.context_id.clone()).collect(),
            citing_id: self.contexts.iter().map(|c| c.citing_id.clone()).collect(),
            cited_id: self.contexts.iter().map(|c| c.cited_id.clone()).collect(),
            ordinal: self.contexts.iter().map(|c| c.ordinal).collect(),
            window_text: self
                .contexts
                .iter()
                .map(|c| c.window_text.clone())
                .collect(),
        };
        write_json(
            &dir.join("papers.json"),
            &PaperColumns::from_rows(&self.papers),
            false,
        )?;
        write_json(&dir.join("edges.json"), &edges, false)?;
        write_json(&dir.join("contexts.json"), &contexts, false)?;
        write_json(&dir.join("manifest.json"), &self.manifest(), true)?;
        if let Some(report) = report {
            write_json(&dir.join("ingest_report.json"), report, true)?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, CorpusError> {
        let manifest: IndexManifest = read_json(&dir.join("manifest.json"))?;
        if manifest.format != INDEX_FORMAT {
            return Err(CorpusError::Format(dir.to_path_buf()));
        }
        let papers_path = dir.join("papers.json");
        let papers = read_json::<PaperColumns>(&papers_path)?
            .into_rows()
            .map_err(|message| CorpusError::Schema {
                path: papers_path,
                message,
            })?;
        let edges: EdgeTable = read_json(&dir.join("edges.json"))?;
        let contexts: ContextColumns = read_json(&dir.join("contexts.json"))?;

        let by_id = papers
            .iter()
            .enumerate()
            .map(|(i, p)| (p.paper_id.clone(), i))
            .collect();
        let edges = itertools::izip!(
            edges.citing_id,
            edges.cited_id,
            edges.contexts,
            edges.dangling
        )
        .map(|(citing_id, cited_id, contexts, dangling)| EdgeRecord {
            citing_id,
            cited_id,
            contexts,
            dangling,
        })
        .collect();
        let contexts = itertools::izip!(
            contexts.context_id,
            contexts.citing_id,
            contexts.cited_id,
            contexts.ordinal,
            contexts.window_text
        )
        .map(
            |(context_id, citing_id, cited_id, ordinal, window_text)| ContextRow {
                context_id,
                citing_id,
                cited_id,
                ordinal,
                window_text,
            },
        )
        .collect();
        Ok(Self::assemble(
            papers,
            by_id,
            edges,
            contexts,
            manifest.window_radius,
        ))
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T, pretty: bool) -> Result<(), CorpusError> {
    let bytes = if pretty {
        serde_json::to_vec_pretty(value)
    } else {
        serde_json::to_vec(value)
    }
    .map_err(|e| CorpusError::Schema {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    fs::write(path, bytes).map_err(|e| CorpusError::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CorpusError> {
    let raw = fs::read(path).map_err(|e| CorpusError::io(path, e))?;
    serde_json::from_slice(&raw).map_err(|e| CorpusError::Schema {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
