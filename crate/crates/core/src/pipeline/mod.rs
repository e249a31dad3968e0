//! End-to-end orchestration with per-run artifact directories.
//!
//! A run directory holds, once complete:
//!
//! ```text
//! run.json             RunRecord (status, counters, artifact list)
//! config.json          effective configuration
//! query.json
//! seeds.json           seed papers with scores
//! contexts.jsonl       expanded citation contexts
//! extraction.json      per-context status and stage statistics
//! extraction_log.jsonl every backend call, request and reply
//! rejections.jsonl     records dropped by validation, with tier
//! judged.jsonl         validated mentions with relevance verdicts
//! mentions.jsonl       mentions kept after relevance filtering
//! entities.json        resolution output
//! links.json           link outcome per entity
//! evidence.json        evidence snippets per canonical key
//! table.json           ranked table
//! table.tsv            the same table, tab separated
//! ```

mod config;
mod table;

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use config::{
    BackendConfig, BackendKind, EnrichmentSettings, EvaluationSettings, ExtractionSettings,
    PipelineConfig, ResolutionSettings, Resources, SearchKind,
};
pub use table::{build_row, entity_evidence, to_tsv, EvidenceSnippet, RankedTable, TableRow};

use crate::corpus::{CitationContext, Corpus, Query, SeedHit};
use crate::enrichment::{rank_entities, resolve_links, LinkOutcome};
use crate::evaluation::{
    evaluate, normalized_levenshtein, render_text, EvaluationError, EvaluationReport, GoldStandard,
    Prediction,
};
use crate::extraction::{ContextStatus, ExtractionOutput, Extractor};
use crate::resolution::{resolve, Normalizer, Resolution};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Json { path: PathBuf, message: String },
    #[error("run not found: {0}")]
    NotFound(String),
    #[error("run {0} is not complete")]
    NotComplete(String),
    #[error(transparent)]
    Evaluation(#[from] EvaluationError),
}

impl PipelineError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunStatus {
    Pending,
    Running,
    Failed,
    Complete,
}

impl RunStatus {
    pub fn is_terminal(self) -> bool {
        matches!(self, RunStatus::Failed | RunStatus::Complete)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Corpus,
    Extraction,
    Resolution,
    Enrichment,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageFailure {
    pub stage: Stage,
    pub cause: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounters {
    pub seeds: usize,
    pub contexts: usize,
    pub failed_contexts: usize,
    pub raw_mentions: usize,
    pub rejected: usize,
    pub validated: usize,
    pub relevant: usize,
    /// Entities after canonical-name grouping.
    pub entities_norm: usize,
    /// Entities after family merging.
    pub entities: usize,
    pub ranked: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub query: Query,
    pub config_snapshot: PipelineConfig,
    pub resource_digests: BTreeMap<String, String>,
    pub index_digest: String,
    pub backend: String,
    pub status: RunStatus,
    /// Every status the run has been in, oldest first.
    pub history: Vec<RunStatus>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<StageFailure>,
    pub stage_counters: StageCounters,
    /// Artifact name to file name inside the run directory.
    pub artifacts: BTreeMap<String, String>,
}

impl RunRecord {
    fn set_status(&mut self, status: RunStatus) {
        self.status = status;
        self.history.push(status);
    }
}

/// Writes via a temporary file and rename so readers never see partial
/// artifacts.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or("artifact");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    let mut f = fs::File::create(&tmp).map_err(|e| PipelineError::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| PipelineError::io(&tmp, e))?;
    f.sync_all().map_err(|e| PipelineError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| PipelineError::io(path, e))
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("artifact serializes");
    v.push(b'\n');
    v
}

fn to_jsonl<T: Serialize>(rows: &[T]) -> Vec<u8> {
    let mut out = Vec::new();
    for r in rows {
        serde_json::to_writer(&mut out, r).expect("artifact serializes");
        out.push(b'\n');
    }
    out
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, PipelineError> {
    let bytes = fs::read(path).map_err(|e| PipelineError::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| PipelineError::Json {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, PipelineError> {
    let text = fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l).map_err(|e| PipelineError::Json {
                path: path.to_path_buf(),
                message: e.to_string(),
            })
        })
        .collect()
}

struct RunDir<'a> {
    dir: PathBuf,
    record: &'a mut RunRecord,
}

impl RunDir<'_> {
    fn put(&mut self, artifact: &str, file: &str, bytes: &[u8]) -> Result<(), PipelineError> {
        write_atomic(&self.dir.join(file), bytes)?;
        self.record
            .artifacts
            .insert(artifact.to_string(), file.to_string());
        Ok(())
    }

    fn save_record(&self) -> Result<(), PipelineError> {
        write_atomic(&self.dir.join("run.json"), &to_json(&*self.record))
    }
}

#[derive(Serialize)]
struct ExtractionSummary<'a> {
    stats: &'a crate::extraction::ExtractionStats,
    contexts: Vec<ContextSummary<'a>>,
}

#[derive(Serialize)]
struct ContextSummary<'a> {
    context_id: &'a str,
    #[serde(flatten)]
    status: &'a ContextStatus,
    raw_records: usize,
    validated: usize,
    rejected: usize,
}

#[derive(Serialize)]
struct LinkRow<'a> {
    canonical_key: &'a str,
    #[serde(flatten)]
    outcome: &'a LinkOutcome,
}

pub struct Pipeline {
    corpus: Arc<Corpus>,
    config: PipelineConfig,
    resources: Resources,
    index_digest: String,
}

impl Pipeline {
    pub fn new(corpus: Arc<Corpus>, config: PipelineConfig) -> Result<Self, PipelineError> {
        let resources = Resources::build(&config)?;
        Ok(Self::with_resources(corpus, config, resources))
    }

    pub fn with_resources(
        corpus: Arc<Corpus>,
        config: PipelineConfig,
        resources: Resources,
    ) -> Self {
        let index_digest = corpus.digest();
        Self {
            corpus,
            config,
            resources,
            index_digest,
        }
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    /// Content address of a run: identical query, effective settings,
    /// resource contents, corpus and backends give the same id.
    pub fn run_id(&self, query: &Query) -> String {
        let fingerprint = serde_json::json!({
            "query": query,
            "config": config::path_free(&self.config),
            "resources": self.resources.digests,
            "index": self.index_digest,
            "extractor": self.resources.extractor.describe(),
            "search": self.resources.search.describe(),
        });
        let digest = Sha256::digest(fingerprint.to_string().as_bytes());
        format!("run-{}", &hex::encode(digest)[..16])
    }

    /// Creates the run directory and a Pending record. A run that already
    /// completed is returned as is.
    pub fn prepare(&self, query: &Query, runs_root: &Path) -> Result<RunRecord, PipelineError> {
        query
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        let run_id = self.run_id(query);
        let dir = runs_root.join(&run_id);
        if let Ok(existing) = read_json::<RunRecord>(&dir.join("run.json")) {
            if existing.status == RunStatus::Complete {
                return Ok(existing);
            }
        }
        fs::create_dir_all(&dir).map_err(|e| PipelineError::io(&dir, e))?;
        let mut record = RunRecord {
            run_id,
            query: query.clone(),
            config_snapshot: self.config.clone(),
            resource_digests: self.resources.digests.clone(),
            index_digest: self.index_digest.clone(),
            backend: self.resources.extractor.describe(),
            status: RunStatus::Pending,
            history: vec![RunStatus::Pending],
            failure: None,
            stage_counters: StageCounters::default(),
            artifacts: BTreeMap::new(),
        };
        let mut rd = RunDir {
            dir,
            record: &mut record,
        };
        rd.put("config", "config.json", &to_json(&self.config))?;
        rd.put("query", "query.json", &to_json(query))?;
        rd.save_record()?;
        Ok(record)
    }

    /// Prepares and executes a run; complete runs are not recomputed.
    pub fn run(&self, query: &Query, runs_root: &Path) -> Result<RunRecord, PipelineError> {
        let record = self.prepare(query, runs_root)?;
        if record.status == RunStatus::Complete {
            return Ok(record);
        }
        self.execute(record, runs_root)
    }

    /// Runs every stage for a prepared record, persisting each stage's
    /// output. A stage failure yields a Failed record; artifacts of earlier
    /// stages stay in place.
    pub fn execute(
        &self,
        mut record: RunRecord,
        runs_root: &Path,
    ) -> Result<RunRecord, PipelineError> {
        let dir = runs_root.join(&record.run_id);
        record.failure = None;
        record.set_status(RunStatus::Running);
        let mut rd = RunDir {
            dir,
            record: &mut record,
        };
        rd.save_record()?;

        let outcome = self.stages(&mut rd);
        match outcome {
            Ok(None) => rd.record.set_status(RunStatus::Complete),
            Ok(Some(failure)) => {
                tracing::warn!(run = %rd.record.run_id, stage = ?failure.stage, cause = %failure.cause, "run failed");
                rd.record.failure = Some(failure);
                rd.record.set_status(RunStatus::Failed);
            }
            Err(e) => {
                rd.record.failure = Some(StageFailure {
                    stage: Stage::Enrichment,
                    cause: e.to_string(),
                });
                rd.record.set_status(RunStatus::Failed);
                let _ = rd.save_record();
                return Err(e);
            }
        }
        rd.save_record()?;
        Ok(record)
    }

    fn stages(&self, rd: &mut RunDir<'_>) -> Result<Option<StageFailure>, PipelineError> {
        let query = rd.record.query.clone();

        // corpus
        let seeds: Vec<SeedHit> = match self.corpus.seed_search(&query) {
            Ok(s) => s,
            Err(e) => {
                return Ok(Some(StageFailure {
                    stage: Stage::Corpus,
                    cause: e.to_string(),
                }))
            }
        };
        let contexts = self
            .corpus
            .expand_contexts(seeds.iter().map(|s| s.paper_id.as_str()));
        rd.record.stage_counters.seeds = seeds.len();
        rd.record.stage_counters.contexts = contexts.len();
        rd.put("seeds", "seeds.json", &to_json(&seeds))?;
        rd.put("contexts", "contexts.jsonl", &to_jsonl(&contexts))?;
        rd.save_record()?;

        // extraction
        let extractor = Extractor::new(
            &*self.resources.extractor,
            &self.resources.validator,
            self.config.extraction_config(),
        );
        let out: ExtractionOutput = extractor.run(&contexts, &query);
        let c = &mut rd.record.stage_counters;
        c.failed_contexts = out.stats.failed_contexts;
        c.raw_mentions = out.stats.raw_records;
        c.rejected = out.stats.rejected();
        c.validated = out.stats.validated;
        c.relevant = out.stats.relevant;
        let summary = ExtractionSummary {
            stats: &out.stats,
            contexts: out
                .contexts
                .iter()
                .map(|x| ContextSummary {
                    context_id: &x.context_id,
                    status: &x.status,
                    raw_records: x.raw_records,
                    validated: x.mentions.len(),
                    rejected: x.rejections.len(),
                })
                .collect(),
        };
        let rejections: Vec<_> = out.contexts.iter().flat_map(|x| &x.rejections).collect();
        rd.put("extraction", "extraction.json", &to_json(&summary))?;
        rd.put(
            "extraction_log",
            "extraction_log.jsonl",
            &to_jsonl(&out.log),
        )?;
        rd.put("rejections", "rejections.jsonl", &to_jsonl(&rejections))?;
        rd.put("judged", "judged.jsonl", &to_jsonl(&out.judged))?;
        rd.put("mentions", "mentions.jsonl", &to_jsonl(&out.relevant))?;
        rd.save_record()?;
        if !contexts.is_empty() && out.stats.failed_contexts == contexts.len() {
            let cause = out
                .contexts
                .iter()
                .find_map(|x| match &x.status {
                    ContextStatus::Failed(d) => Some(d.clone()),
                    _ => None,
                })
                .unwrap_or_default();
            return Ok(Some(StageFailure {
                stage: Stage::Extraction,
                cause: format!(
                    "backend unavailable for all {} contexts: {cause}",
                    contexts.len()
                ),
            }));
        }

        // resolution
        let resolution: Resolution = resolve(
            &out.relevant,
            &self.resources.normalizer,
            &self.resources.families,
        );
        rd.record.stage_counters.entities_norm = resolution.grouped_count;
        rd.record.stage_counters.entities = resolution.entities.len();
        rd.put("entities", "entities.json", &to_json(&resolution))?;
        rd.save_record()?;

        // enrichment
        let outcomes = resolve_links(
            &resolution.entities,
            &self.corpus,
            &*self.resources.search,
            &self.resources.trusted,
            self.config.enrichment.parallelism,
        );
        let by_key: HashMap<&str, &LinkOutcome> = resolution
            .entities
            .iter()
            .zip(&outcomes)
            .map(|(e, o)| (e.canonical_key.as_str(), o))
            .collect();
        let link_rows: Vec<LinkRow> = resolution
            .entities
            .iter()
            .zip(&outcomes)
            .map(|(e, o)| LinkRow {
                canonical_key: e.canonical_key.as_str(),
                outcome: o,
            })
            .collect();
        rd.put("links", "links.json", &to_json(&link_rows))?;

        let context_index: HashMap<&str, &CitationContext> = contexts
            .iter()
            .map(|c| (c.context_id.as_str(), c))
            .collect();
        let ranked = rank_entities(resolution.entities.clone());
        let mut evidence: BTreeMap<String, Vec<EvidenceSnippet>> = BTreeMap::new();
        let mut rows = Vec::with_capacity(ranked.len());
        for r in &ranked {
            let snippets = entity_evidence(&r.entity, &out.relevant, &context_index);
            let link = by_key[r.entity.canonical_key.as_str()];
            rows.push(build_row(r, link, &snippets, self.config.table_evidence));
            evidence.insert(r.entity.canonical_key.as_str().to_string(), snippets);
        }
        let table = RankedTable {
            run_id: rd.record.run_id.clone(),
            query: query.text.clone(),
            rows,
        };
        rd.record.stage_counters.ranked = table.rows.len();
        rd.put("evidence", "evidence.json", &to_json(&evidence))?;
        rd.put("table", "table.json", &to_json(&table))?;
        rd.put("table_tsv", "table.tsv", to_tsv(&table).as_bytes())?;
        Ok(None)
    }
}

pub fn load_run(run_dir: &Path) -> Result<RunRecord, PipelineError> {
    let path = run_dir.join("run.json");
    if !path.is_file() {
        return Err(PipelineError::NotFound(run_dir.display().to_string()));
    }
    read_json(&path)
}

pub fn load_table(run_dir: &Path) -> Result<RankedTable, PipelineError> {
    let record = load_run(run_dir)?;
    if record.status != RunStatus::Complete {
        return Err(PipelineError::NotComplete(record.run_id));
    }
    read_json(&run_dir.join("table.json"))
}

pub fn load_evidence(
    run_dir: &Path,
) -> Result<BTreeMap<String, Vec<EvidenceSnippet>>, PipelineError> {
    let record = load_run(run_dir)?;
    if record.status != RunStatus::Complete {
        return Err(PipelineError::NotComplete(record.run_id));
    }
    read_json(&run_dir.join("evidence.json"))
}

/// Normalizer described by a config snapshot.
pub fn normalizer_for(config: &PipelineConfig) -> Result<Normalizer, PipelineError> {
    match &config.resolution.generic_words {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| PipelineError::io(p, e))?;
            Ok(Normalizer::from_word_list(&text))
        }
        None => Ok(Normalizer::default()),
    }
}

/// Scores a complete run against a gold file and writes `report.json` and
/// `report.txt` into the run directory.
pub fn evaluate_run(run_dir: &Path, gold_path: &Path) -> Result<EvaluationReport, PipelineError> {
    let record = load_run(run_dir)?;
    if record.status != RunStatus::Complete {
        return Err(PipelineError::NotComplete(record.run_id));
    }
    let table = load_table(run_dir)?;
    let gold = GoldStandard::load(gold_path)?;
    let normalizer = normalizer_for(&record.config_snapshot)?;
    let predictions: Vec<Prediction> = table
        .rows
        .iter()
        .map(|r| Prediction {
            name: r.display_name.clone(),
            aliases: r
                .aliases
                .iter()
                .filter(|a| **a != r.display_name)
                .cloned()
                .collect(),
            family_id: r.family_id.clone(),
            trusted: r.trusted,
            has_pid: r.has_pid,
        })
        .collect();
    let c = record.stage_counters;
    let report = evaluate(
        c.relevant,
        c.entities_norm,
        &predictions,
        &gold,
        &normalizer,
        record.config_snapshot.evaluation.tau,
        normalized_levenshtein,
    )?;
    write_atomic(&run_dir.join("report.json"), &to_json(&report))?;
    write_atomic(
        &run_dir.join("report.txt"),
        render_text("contextmine", std::slice::from_ref(&report)).as_bytes(),
    )?;
    Ok(report)
}
