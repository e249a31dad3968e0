//! Two-pass mention extraction: a schema-guided extraction call per citation
//! window, three-tier validation of every returned record, then a
//! conservative relevance call per surviving mention.

mod backend;
mod prompt;
mod stub;
mod types;
mod validate;

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use backend::{
    complete_with_retry, BackendError, BackendRequest, ExtractorBackend, HttpBackend, RetryPolicy,
};
pub use prompt::{
    build_extraction_prompt, build_relevance_prompt, context_block, quoted_field,
    research_question, response_schema, schema_name, Prompt, PromptKind, BEGIN_CONTEXT,
    END_CONTEXT, REPAIR_SUFFIX,
};
pub use stub::{content_terms, FnBackend, StubBackend, DEFAULT_LEXICON};
pub use types::{ContentType, DatasetMention, RelevanceVerdict, UsageRole, VocabularyError};
pub use validate::{MentionValidator, Rejection, ValidationTier, DEFAULT_BLOCKLIST};

use crate::corpus::{CitationContext, Query};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionConfig {
    /// Upper bound on concurrent backend calls.
    pub parallelism: usize,
    pub retry: RetryPolicy,
    /// Keep mentions whose relevance could not be determined.
    pub keep_undetermined: bool,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            parallelism: 4,
            retry: RetryPolicy::default(),
            keep_undetermined: false,
        }
    }
}

/// One backend attempt, logged verbatim for audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallLog {
    pub context_id: String,
    /// Candidate name for relevance calls.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidate: Option<String>,
    pub kind: PromptKind,
    pub attempt: u32,
    pub request: BackendRequest,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status", content = "detail")]
pub enum ContextStatus {
    Ok,
    /// Reply could not be decoded, even after one repair prompt.
    Malformed(String),
    /// Backend unreachable after all retries.
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedRecord {
    pub context_id: String,
    pub tier: ValidationTier,
    pub rejection: Rejection,
    pub record: Value,
}

/// Extraction result for one context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextExtraction {
    pub context_id: String,
    pub status: ContextStatus,
    pub raw_records: usize,
    pub mentions: Vec<DatasetMention>,
    pub rejections: Vec<RejectedRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgedMention {
    pub mention: DatasetMention,
    pub verdict: RelevanceVerdict,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionStats {
    pub contexts: usize,
    pub failed_contexts: usize,
    pub malformed_contexts: usize,
    pub raw_records: usize,
    pub rejected_schema: usize,
    pub rejected_semantic: usize,
    pub rejected_domain: usize,
    pub validated: usize,
    pub relevant: usize,
    pub irrelevant: usize,
    pub undetermined: usize,
}

impl ExtractionStats {
    pub fn rejected(&self) -> usize {
        self.rejected_schema + self.rejected_semantic + self.rejected_domain
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExtractionOutput {
    /// Per-context results sorted by context id.
    pub contexts: Vec<ContextExtraction>,
    /// Every validated mention with its relevance verdict.
    pub judged: Vec<JudgedMention>,
    /// Mentions kept after relevance filtering, in context order.
    pub relevant: Vec<DatasetMention>,
    pub stats: ExtractionStats,
    pub log: Vec<CallLog>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecodeError {
    #[error("reply is not JSON: {0}")]
    NotJson(String),
    #[error("reply does not follow the response schema: {0}")]
    Shape(String),
}

/// Parses reply text, tolerating a surrounding markdown code fence.
pub fn decode_reply(text: &str) -> Result<Value, DecodeError> {
    let mut body = text.trim();
    if let Some(rest) = body.strip_prefix("```") {
        body = rest.trim_start_matches("json").trim_start();
        body = body.strip_suffix("```").unwrap_or(body).trim();
    }
    serde_json::from_str(body).map_err(|e| DecodeError::NotJson(e.to_string()))
}

fn extraction_records(reply: &Value) -> Result<Vec<Value>, DecodeError> {
    reply
        .get("datasets")
        .and_then(Value::as_array)
        .cloned()
        .ok_or_else(|| DecodeError::Shape("missing \"datasets\" array".into()))
}

fn verdict_of(reply: &Value) -> Result<RelevanceVerdict, DecodeError> {
    let is_relevant = reply
        .get("is_relevant")
        .and_then(Value::as_bool)
        .ok_or_else(|| DecodeError::Shape("is_relevant must be a boolean".into()))?;
    let confidence = reply
        .get("confidence")
        .and_then(Value::as_f64)
        .filter(|c| (0.0..=1.0).contains(c))
        .ok_or_else(|| DecodeError::Shape("confidence must be a number in [0, 1]".into()))?;
    let reasoning = reply
        .get("reasoning")
        .and_then(Value::as_str)
        .unwrap_or_default()
        .to_string();
    Ok(RelevanceVerdict {
        is_relevant,
        confidence,
        reasoning,
        undetermined: false,
    })
}

enum CallFailure {
    Unavailable(BackendError),
    Malformed(String),
}

pub struct Extractor<'a> {
    backend: &'a dyn ExtractorBackend,
    validator: &'a MentionValidator,
    config: ExtractionConfig,
}

impl<'a> Extractor<'a> {
    pub fn new(
        backend: &'a dyn ExtractorBackend,
        validator: &'a MentionValidator,
        config: ExtractionConfig,
    ) -> Self {
        Self {
            backend,
            validator,
            config,
        }
    }

    /// Sends `prompt`, retrying transport failures, and decodes the reply
    /// with `decode`. An undecodable reply gets exactly one repair prompt.
    fn call<T>(
        &self,
        prompt: Prompt,
        context_id: &str,
        candidate: Option<&str>,
        log: &mut Vec<CallLog>,
        decode: impl Fn(&Value) -> Result<T, DecodeError>,
    ) -> Result<T, CallFailure> {
        let mut request = BackendRequest::from_prompt(prompt);
        let mut last_problem = String::new();
        for round in 0..2 {
            if round == 1 {
                request.user.push_str(REPAIR_SUFFIX);
            }
            let mut attempt = 0;
            let reply = complete_with_retry(self.backend, &request, self.config.retry, |outcome| {
                attempt += 1;
                log.push(CallLog {
                    context_id: context_id.to_string(),
                    candidate: candidate.map(str::to_string),
                    kind: request.kind,
                    attempt: attempt + round * self.config.retry.attempts.max(1),
                    request: request.clone(),
                    response: outcome.as_ref().ok().cloned(),
                    error: outcome.as_ref().err().map(ToString::to_string),
                });
            });
            let text = match reply {
                Ok(text) => text,
                Err(e) if e.is_unavailable() => return Err(CallFailure::Unavailable(e)),
                Err(e) => {
                    last_problem = e.to_string();
                    continue;
                }
            };
            match decode_reply(&text).and_then(|v| decode(&v)) {
                Ok(value) => return Ok(value),
                Err(e) => last_problem = e.to_string(),
            }
        }
        Err(CallFailure::Malformed(last_problem))
    }

    /// Extraction pass plus validation for one context.
    pub fn extract_mentions(
        &self,
        context: &CitationContext,
        query: &Query,
    ) -> (ContextExtraction, Vec<CallLog>) {
        let mut log = Vec::new();
        let prompt = build_extraction_prompt(context, query);
        let mut out = ContextExtraction {
            context_id: context.context_id.clone(),
            status: ContextStatus::Ok,
            raw_records: 0,
            mentions: Vec::new(),
            rejections: Vec::new(),
        };
        let records = match self.call(
            prompt,
            &context.context_id,
            None,
            &mut log,
            extraction_records,
        ) {
            Ok(records) => records,
            Err(CallFailure::Unavailable(e)) => {
                out.status = ContextStatus::Failed(e.to_string());
                return (out, log);
            }
            Err(CallFailure::Malformed(why)) => {
                out.status = ContextStatus::Malformed(why);
                return (out, log);
            }
        };
        out.raw_records = records.len();
        for record in records {
            match self.validator.validate(&record, context) {
                Ok(m) => out.mentions.push(m),
                Err(rejection) => out.rejections.push(RejectedRecord {
                    context_id: context.context_id.clone(),
                    tier: rejection.tier(),
                    rejection,
                    record,
                }),
            }
        }
        (out, log)
    }

    /// Relevance pass for one validated mention. Backend failures yield an
    /// undetermined verdict resolved by `keep_undetermined`.
    pub fn relevance_filter(
        &self,
        mention: &DatasetMention,
        context: &CitationContext,
        query: &Query,
    ) -> (RelevanceVerdict, Vec<CallLog>) {
        let mut log = Vec::new();
        let prompt = build_relevance_prompt(mention, context, query);
        let verdict = match self.call(
            prompt,
            &context.context_id,
            Some(&mention.surface_name),
            &mut log,
            verdict_of,
        ) {
            Ok(v) => v,
            Err(failure) => {
                let why = match failure {
                    CallFailure::Unavailable(e) => e.to_string(),
                    CallFailure::Malformed(why) => why,
                };
                RelevanceVerdict {
                    is_relevant: self.config.keep_undetermined,
                    confidence: 0.0,
                    reasoning: format!("undetermined: {why}"),
                    undetermined: true,
                }
            }
        };
        (verdict, log)
    }

    fn process(
        &self,
        context: &CitationContext,
        query: &Query,
    ) -> (ContextExtraction, Vec<JudgedMention>, Vec<CallLog>) {
        let (extraction, mut log) = self.extract_mentions(context, query);
        let judged = extraction
            .mentions
            .iter()
            .map(|m| {
                let (verdict, calls) = self.relevance_filter(m, context, query);
                log.extend(calls);
                JudgedMention {
                    mention: m.clone(),
                    verdict,
                }
            })
            .collect();
        (extraction, judged, log)
    }

    /// Runs both passes over `contexts` with bounded parallelism. Output is
    /// ordered by context id regardless of input order or scheduling.
    pub fn run(&self, contexts: &[CitationContext], query: &Query) -> ExtractionOutput {
        use rayon::prelude::*;

        let mut sorted: Vec<&CitationContext> = contexts.iter().collect();
        sorted.sort_by(|a, b| a.context_id.cmp(&b.context_id));
        sorted.dedup_by(|a, b| a.context_id == b.context_id);

        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.config.parallelism.max(1))
            .build();
        let results: Vec<_> = match pool {
            Ok(pool) => {
                pool.install(|| sorted.par_iter().map(|c| self.process(c, query)).collect())
            }
            Err(e) => {
                tracing::warn!(error = %e, "thread pool unavailable, extracting sequentially");
                sorted.iter().map(|c| self.process(c, query)).collect()
            }
        };

        let mut out = ExtractionOutput::default();
        out.stats.contexts = sorted.len();
        for (extraction, judged, log) in results {
            match extraction.status {
                ContextStatus::Ok => {}
                ContextStatus::Malformed(_) => out.stats.malformed_contexts += 1,
                ContextStatus::Failed(_) => out.stats.failed_contexts += 1,
            }
            out.stats.raw_records += extraction.raw_records;
            for r in &extraction.rejections {
                match r.tier {
                    ValidationTier::Schema => out.stats.rejected_schema += 1,
                    ValidationTier::Semantic => out.stats.rejected_semantic += 1,
                    ValidationTier::Domain => out.stats.rejected_domain += 1,
                }
            }
            out.stats.validated += extraction.mentions.len();
            for j in &judged {
                if j.verdict.undetermined {
                    out.stats.undetermined += 1;
                }
                if j.verdict.is_relevant {
                    out.stats.relevant += 1;
                    out.relevant.push(j.mention.clone());
                } else {
                    out.stats.irrelevant += 1;
                }
            }
            out.judged.extend(judged);
            out.contexts.push(extraction);
            out.log.extend(log);
        }
        out
    }
}
