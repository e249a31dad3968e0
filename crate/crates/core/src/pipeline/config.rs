//! Run configuration, loadable from a single TOML file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PipelineError;
use crate::enrichment::{
    FixtureSearch, HttpSearch, NoSearch, SearchBackend, TrustedHosts, DEFAULT_TRUSTED_HOSTS,
};
use crate::evaluation::DEFAULT_TAU;
use crate::extraction::{
    ExtractionConfig, ExtractorBackend, HttpBackend, MentionValidator, RetryPolicy, StubBackend,
    DEFAULT_BLOCKLIST, DEFAULT_LEXICON,
};
use crate::resolution::{load_family_mapping, CanonicalKey, Normalizer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    #[default]
    Stub,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    /// Stub seed; only affects confidences.
    pub seed: u64,
    /// Stub lexicon file, one name per line.
    pub lexicon: Option<PathBuf>,
    /// Base URL of an OpenAI-compatible chat-completions server.
    pub endpoint: String,
    pub model: String,
    /// Environment variable holding the bearer token, if any.
    pub api_key_env: Option<String>,
    pub timeout_secs: u64,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            kind: BackendKind::Stub,
            seed: 0,
            lexicon: None,
            endpoint: "http://127.0.0.1:8000/v1".into(),
            model: "Qwen2.5-72B-Instruct".into(),
            api_key_env: None,
            timeout_secs: 120,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractionSettings {
    pub parallelism: usize,
    pub attempts: u32,
    pub initial_backoff_ms: u64,
    pub keep_undetermined: bool,
    /// Method/tool names rejected at the domain tier; defaults to the
    /// bundled list.
    pub blocklist: Option<PathBuf>,
}

impl Default for ExtractionSettings {
    fn default() -> Self {
        let d = ExtractionConfig::default();
        Self {
            parallelism: d.parallelism,
            attempts: d.retry.attempts,
            initial_backoff_ms: d.retry.initial_backoff_ms,
            keep_undetermined: d.keep_undetermined,
            blocklist: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ResolutionSettings {
    /// Generic words stripped during normalization.
    pub generic_words: Option<PathBuf>,
    /// JSONL of `{canonical_key, family_id}` overrides.
    pub family_mapping: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchKind {
    #[default]
    None,
    Fixture,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnrichmentSettings {
    pub search: SearchKind,
    /// JSON table for the fixture search backend.
    pub search_table: Option<PathBuf>,
    pub search_endpoint: String,
    pub search_timeout_secs: u64,
    pub trusted_hosts: Option<PathBuf>,
    pub parallelism: usize,
}

impl Default for EnrichmentSettings {
    fn default() -> Self {
        Self {
            search: SearchKind::None,
            search_table: None,
            search_endpoint: "http://127.0.0.1:8001/search".into(),
            search_timeout_secs: 30,
            trusted_hosts: None,
            parallelism: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationSettings {
    pub tau: f64,
}

impl Default for EvaluationSettings {
    fn default() -> Self {
        Self { tau: DEFAULT_TAU }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub backend: BackendConfig,
    pub extraction: ExtractionSettings,
    pub resolution: ResolutionSettings,
    pub enrichment: EnrichmentSettings,
    pub evaluation: EvaluationSettings,
    /// Evidence snippets embedded per table row; the evidence endpoint
    /// serves all of them.
    pub table_evidence: usize,
}

fn read(path: &Path) -> Result<String, PipelineError> {
    std::fs::read_to_string(path)
        .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
}

impl PipelineConfig {
    pub fn stub() -> Self {
        Self {
            table_evidence: 3,
            ..Self::default()
        }
    }

    /// Parses a TOML file. Relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = read(path)?;
        let mut cfg: Self = toml::from_str(&text)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.rebase(base);
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    fn paths_mut(&mut self) -> [&mut Option<PathBuf>; 6] {
        [
            &mut self.backend.lexicon,
            &mut self.extraction.blocklist,
            &mut self.resolution.generic_words,
            &mut self.resolution.family_mapping,
            &mut self.enrichment.search_table,
            &mut self.enrichment.trusted_hosts,
        ]
    }

    fn rebase(&mut self, base: &Path) {
        for p in self.paths_mut().into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let tau = self.evaluation.tau;
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(PipelineError::Config(format!(
                "evaluation.tau {tau} outside (0, 1]"
            )));
        }
        if self.extraction.attempts == 0 {
            return Err(PipelineError::Config(
                "extraction.attempts must be at least 1".into(),
            ));
        }
        if self.enrichment.search == SearchKind::Fixture && self.enrichment.search_table.is_none() {
            return Err(PipelineError::Config(
                "fixture search needs enrichment.search_table".into(),
            ));
        }
        Ok(())
    }

    pub fn extraction_config(&self) -> ExtractionConfig {
        ExtractionConfig {
            parallelism: self.extraction.parallelism.max(1),
            retry: RetryPolicy {
                attempts: self.extraction.attempts,
                initial_backoff_ms: self.extraction.initial_backoff_ms,
            },
            keep_undetermined: self.extraction.keep_undetermined,
        }
    }
}

/// Everything a run needs besides the corpus, built once from a config.
pub struct Resources {
    pub normalizer: Normalizer,
    pub validator: MentionValidator,
    pub families: BTreeMap<CanonicalKey, String>,
    pub trusted: TrustedHosts,
    pub extractor: Arc<dyn ExtractorBackend>,
    pub search: Arc<dyn SearchBackend>,
    /// Content digest of every loaded resource, keyed by role.
    pub digests: BTreeMap<String, String>,
}

fn digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

impl Resources {
    pub fn build(config: &PipelineConfig) -> Result<Self, PipelineError> {
        config.validate()?;
        let mut digests = BTreeMap::new();
        let mut load =
            |role: &str, path: &Option<PathBuf>, default: &str| -> Result<String, PipelineError> {
                let text = match path {
                    Some(p) => read(p)?,
                    None => default.to_string(),
                };
                digests.insert(role.to_string(), digest(&text));
                Ok(text)
            };

        let normalizer = match &config.resolution.generic_words {
            Some(_) => Normalizer::from_word_list(&load(
                "generic_words",
                &config.resolution.generic_words,
                "",
            )?),
            None => Normalizer::default(),
        };
        let blocklist = load("blocklist", &config.extraction.blocklist, DEFAULT_BLOCKLIST)?;
        let validator = MentionValidator::new(normalizer.clone(), &blocklist);
        let trusted = TrustedHosts::parse(&load(
            "trusted_hosts",
            &config.enrichment.trusted_hosts,
            DEFAULT_TRUSTED_HOSTS,
        )?);

        let families = match &config.resolution.family_mapping {
            Some(p) => {
                load("family_mapping", &config.resolution.family_mapping, "")?;
                load_family_mapping(p, &normalizer)
                    .map_err(|e| PipelineError::Config(e.to_string()))?
            }
            None => BTreeMap::new(),
        };

        let extractor: Arc<dyn ExtractorBackend> = match config.backend.kind {
            BackendKind::Stub => {
                let lexicon = match &config.backend.lexicon {
                    Some(_) => load("lexicon", &config.backend.lexicon, "")?
                        .lines()
                        .map(str::trim)
                        .filter(|l| !l.is_empty() && !l.starts_with('#'))
                        .map(str::to_string)
                        .collect(),
                    None => DEFAULT_LEXICON.iter().map(|s| s.to_string()).collect(),
                };
                Arc::new(StubBackend::new(lexicon, config.backend.seed))
            }
            BackendKind::Http => {
                let key = config
                    .backend
                    .api_key_env
                    .as_ref()
                    .and_then(|v| std::env::var(v).ok());
                Arc::new(
                    HttpBackend::new(
                        config.backend.endpoint.clone(),
                        config.backend.model.clone(),
                        Duration::from_secs(config.backend.timeout_secs),
                    )
                    .with_api_key(key),
                )
            }
        };

        let search: Arc<dyn SearchBackend> = match config.enrichment.search {
            SearchKind::None => Arc::new(NoSearch),
            SearchKind::Fixture => {
                let text = load("search_table", &config.enrichment.search_table, "")?;
                let table = serde_json::from_str(&text)
                    .map_err(|e| PipelineError::Config(format!("search table: {e}")))?;
                Arc::new(FixtureSearch::new(table))
            }
            SearchKind::Http => Arc::new(HttpSearch::new(
                config.enrichment.search_endpoint.clone(),
                Duration::from_secs(config.enrichment.search_timeout_secs),
            )),
        };

        Ok(Self {
            normalizer,
            validator,
            families,
            trusted,
            extractor,
            search,
            digests,
        })
    }

    /// Replaces the extractor backend, e.g. with a scripted one in tests.
    pub fn with_extractor(mut self, extractor: Arc<dyn ExtractorBackend>) -> Self {
        self.extractor = extractor;
        self
    }

    pub fn with_search(mut self, search: Arc<dyn SearchBackend>) -> Self {
        self.search = search;
        self
    }
}

/// The config with file paths removed, for fingerprinting; file contents are
/// covered by [`Resources::digests`] instead.
pub(crate) fn path_free(config: &PipelineConfig) -> PipelineConfig {
    let mut c = config.clone();
    for p in c.paths_mut() {
        if p.is_some() {
            *p = Some(PathBuf::from("-"));
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_partial_toml_with_defaults() {
        let cfg = PipelineConfig::from_toml(
            "[backend]\nkind = \"http\"\nmodel = \"m\"\n[enrichment]\nsearch = \"fixture\"\nsearch_table = \"s.json\"\n",
        )
        .unwrap();
        assert_eq!(cfg.backend.kind, BackendKind::Http);
        assert_eq!(cfg.backend.model, "m");
        assert_eq!(cfg.extraction.attempts, 3);
        assert_eq!(cfg.evaluation.tau, 0.9);
        assert!(PipelineConfig::from_toml("[backend]\nkidn = \"stub\"\n").is_err());
    }

    #[test]
    fn relative_paths_follow_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("hosts.txt"), "example.org\n").unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "[enrichment]\ntrusted_hosts = \"hosts.txt\"\n").unwrap();
        let cfg = PipelineConfig::load(&path).unwrap();
        assert_eq!(
            cfg.enrichment.trusted_hosts.as_deref(),
            Some(dir.path().join("hosts.txt").as_path())
        );
        let res = Resources::build(&cfg).unwrap();
        assert_eq!(res.trusted.hosts(), ["example.org"]);
        assert!(res.digests.contains_key("trusted_hosts"));
    }

    #[test]
    fn invalid_values_are_rejected() {
        let mut cfg = PipelineConfig::stub();
        cfg.evaluation.tau = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = PipelineConfig::stub();
        cfg.enrichment.search = SearchKind::Fixture;
        assert!(Resources::build(&cfg).is_err());
    }
}
