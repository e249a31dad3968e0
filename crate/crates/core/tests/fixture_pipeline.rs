use std::path::{Path, PathBuf};
use std::sync::Arc;

use contextmine_core::corpus::{Corpus, IngestOptions, Query};
use contextmine_core::fixture;
use contextmine_core::pipeline::{
    evaluate_run, load_run, load_table, Pipeline, PipelineConfig, RunStatus,
};

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/mini")
}

fn corpus() -> Arc<Corpus> {
    let dir = fixture_dir();
    let (corpus, _) = Corpus::ingest(
        &dir.join("papers.jsonl"),
        &dir.join("citations.jsonl"),
        IngestOptions::default(),
    )
    .unwrap();
    Arc::new(corpus)
}

fn pipeline() -> Pipeline {
    let config = PipelineConfig::load(&fixture_dir().join("config.toml")).unwrap();
    Pipeline::new(corpus(), config).unwrap()
}

fn query() -> Query {
    Query::new(fixture::QUERY)
        .unwrap()
        .with_seed_k(fixture::SEED_K)
}

#[test]
fn committed_fixture_matches_generator() {
    let dir = fixture_dir();
    if std::env::var_os("CONTEXTMINE_REGEN_FIXTURE").is_some() {
        fixture::write(&dir).unwrap();
    }
    for (name, body) in fixture::files() {
        let on_disk = std::fs::read_to_string(dir.join(name)).unwrap_or_default();
        assert!(
            on_disk == body,
            "{name} is stale; rerun with CONTEXTMINE_REGEN_FIXTURE=1"
        );
    }
}

#[test]
fn ingest_report_counts() {
    let dir = fixture_dir();
    let (corpus, report) = Corpus::ingest(
        &dir.join("papers.jsonl"),
        &dir.join("citations.jsonl"),
        IngestOptions::default(),
    )
    .unwrap();
    assert_eq!(corpus.paper_count(), fixture::PAPER_COUNT);
    assert_eq!(corpus.edge_count(), fixture::EDGE_COUNT);
    assert_eq!(corpus.context_count(), fixture::EDGE_COUNT);
    assert_eq!(report.dangling_edges, 3);
}

#[test]
fn fixture_run_produces_expected_table() {
    let runs = tempfile::tempdir().unwrap();
    let p = pipeline();
    let record = p.run(&query(), runs.path()).unwrap();
    assert_eq!(record.status, RunStatus::Complete, "{:?}", record.failure);
    assert_eq!(
        record.history,
        vec![RunStatus::Pending, RunStatus::Running, RunStatus::Complete]
    );

    let c = record.stage_counters;
    let e = fixture::EXPECTED_COUNTS;
    assert_eq!(c.seeds, e.seeds);
    assert_eq!(c.contexts, e.contexts);
    assert_eq!(c.raw_mentions, e.raw_mentions);
    assert_eq!(c.rejected, e.rejected_domain);
    assert_eq!(c.validated, e.validated);
    assert_eq!(c.relevant, e.relevant);
    assert_eq!(c.entities_norm, e.entities_norm);
    assert_eq!(c.entities, e.entities);

    let table = load_table(&runs.path().join(&record.run_id)).unwrap();
    let expected = fixture::expected_rows();
    let got: Vec<_> = table
        .rows
        .iter()
        .map(|r| (r.rank, r.display_name.as_str(), r.citation_count))
        .collect();
    let want: Vec<_> = expected
        .iter()
        .map(|r| (r.rank, r.display_name.as_str(), r.citation_count))
        .collect();
    assert_eq!(got, want);
    for (row, exp) in table.rows.iter().zip(&expected) {
        let name = &exp.display_name;
        assert_eq!(
            row.link.as_ref().map(|l| l.tier.to_string()),
            exp.link_tier,
            "{name} tier"
        );
        assert_eq!(
            row.link.as_ref().map(|l| l.kind.to_string()),
            exp.link_kind,
            "{name} kind"
        );
        assert_eq!(
            row.link.as_ref().map(|l| l.value.clone()),
            exp.link_value,
            "{name} value"
        );
        assert_eq!(row.trusted, exp.trusted, "{name} trusted");
        let ea = row.roles.keys().any(|r| r.label() == "Evaluate Against");
        assert_eq!(ea, exp.evaluate_against, "{name} role");
        assert_eq!(row.aliases, exp.aliases, "{name} aliases");
        assert!(
            !row.evidence.is_empty() && row.evidence.len() <= 3,
            "{name} evidence"
        );
        for ev in &row.evidence {
            assert!(ev.window_text.contains(&ev.evidence));
        }
    }
    assert_eq!(table.rows[0].family_id.as_deref(), Some("LDC2006T06"));
    let flagged: Vec<_> = table
        .rows
        .iter()
        .filter(|r| r.link_flag.is_some())
        .map(|r| r.display_name.as_str())
        .collect();
    assert_eq!(flagged, ["MUC-4", "TAC KBP 2015"]);
}

#[test]
fn completed_run_is_reused_and_evaluation_is_stable() {
    let runs = tempfile::tempdir().unwrap();
    let p = pipeline();
    let first = p.run(&query(), runs.path()).unwrap();
    let table_bytes = std::fs::read(runs.path().join(&first.run_id).join("table.json")).unwrap();
    let second = p.run(&query(), runs.path()).unwrap();
    assert_eq!(first.run_id, second.run_id);
    assert_eq!(second.history.len(), 3);
    assert_eq!(
        std::fs::read(runs.path().join(&first.run_id).join("table.json")).unwrap(),
        table_bytes
    );

    let dir = runs.path().join(&first.run_id);
    let gold = fixture_dir().join("gold.jsonl");
    let report = evaluate_run(&dir, &gold).unwrap();
    let (exact, norm, fuzzy) = fixture::EXPECTED_RECALL;
    assert_eq!(
        (report.exact_recall, report.norm_recall, report.fuzzy_recall),
        (exact, norm, fuzzy)
    );
    assert_eq!(report.query_label, "event extraction");
    let bytes = std::fs::read(dir.join("report.json")).unwrap();
    evaluate_run(&dir, &gold).unwrap();
    assert_eq!(std::fs::read(dir.join("report.json")).unwrap(), bytes);

    let missing = evaluate_run(&runs.path().join("run-0000000000000000"), &gold).unwrap_err();
    assert!(matches!(
        missing,
        contextmine_core::pipeline::PipelineError::NotFound(_)
    ));
}

#[test]
fn query_without_seeds_completes_empty() {
    let runs = tempfile::tempdir().unwrap();
    let q = Query::new("quantum chromodynamics lattice").unwrap();
    let record = pipeline().run(&q, runs.path()).unwrap();
    assert_eq!(record.status, RunStatus::Complete);
    assert_eq!(record.stage_counters.seeds, 0);
    assert!(load_table(&runs.path().join(&record.run_id))
        .unwrap()
        .rows
        .is_empty());
    assert_eq!(load_run(&runs.path().join(&record.run_id)).unwrap(), record);
}

#[test]
fn unreachable_backend_fails_extraction_stage() {
    use contextmine_core::extraction::HttpBackend;
    use contextmine_core::pipeline::{Resources, Stage};

    // nothing listens on port 9 of the loopback interface
    let backend = HttpBackend::new(
        "http://127.0.0.1:9/v1/chat/completions",
        "m",
        std::time::Duration::from_secs(2),
    );
    let config = PipelineConfig::load(&fixture_dir().join("config.toml")).unwrap();
    let resources = Resources::build(&config)
        .unwrap()
        .with_extractor(Arc::new(backend));
    let p = Pipeline::with_resources(corpus(), config, resources);
    let runs = tempfile::tempdir().unwrap();
    let record = p.run(&query(), runs.path()).unwrap();
    assert_eq!(record.status, RunStatus::Failed);
    let failure = record.failure.clone().unwrap();
    assert_eq!(failure.stage, Stage::Extraction);
    assert!(
        failure.cause.contains("backend unavailable"),
        "{}",
        failure.cause
    );
    assert_eq!(
        record.stage_counters.failed_contexts,
        fixture::EXPECTED_COUNTS.contexts
    );
    let dir = runs.path().join(&record.run_id);
    assert!(dir.join("contexts.jsonl").is_file());
    assert!(!dir.join("table.json").exists());
    assert_eq!(load_run(&dir).unwrap().status, RunStatus::Failed);
    assert!(load_table(&dir).is_err());
}
