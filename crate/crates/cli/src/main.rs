use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use contextmine_core::corpus::{Corpus, IngestOptions, Query, DEFAULT_SEED_K};
use contextmine_core::evaluation::render_text;
use contextmine_core::fixture;
use contextmine_core::pipeline::{
    evaluate_run, load_table, to_tsv, BackendKind, Pipeline, PipelineConfig, RunStatus,
};
use contextmine_service::{bind, has_ui, router, serve, ServiceConfig};

/// Find the datasets a research area relies on by reading citation contexts.
#[derive(Parser)]
#[command(name = "contextmine", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Backend {
    Stub,
    Http,
}

#[derive(Subcommand)]
enum Command {
    /// Build an index directory from a papers file and a citations file.
    Ingest {
        #[arg(long)]
        papers: PathBuf,
        #[arg(long)]
        citations: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Sentences kept on each side of the citing sentence.
        #[arg(long)]
        window: Option<usize>,
    },
    /// Print the top seed papers for a query.
    SeedSearch {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        query: String,
        #[arg(long = "fos")]
        fields: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_SEED_K)]
        k: usize,
    },
    /// Run the full pipeline and print the ranked table as TSV.
    Run {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        query: String,
        #[arg(long = "fos")]
        fields: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_SEED_K)]
        k: usize,
        /// Overrides the backend kind from the config file.
        #[arg(long, value_enum)]
        backend: Option<Backend>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Directory that holds one subdirectory per run.
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a completed run against a gold file.
    Eval {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        /// Print the report as JSON instead of the text table.
        #[arg(long)]
        json: bool,
    },
    /// Serve the HTTP API (and the built UI, if given).
    Serve {
        #[arg(long)]
        index: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "runs")]
        runs: PathBuf,
        #[arg(long, default_value_t = 2)]
        workers: usize,
        #[arg(long)]
        ui: Option<PathBuf>,
    },
    /// Write the deterministic mini-corpus fixture.
    GenFixture {
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(path: Option<&Path>, backend: Option<Backend>) -> Result<PipelineConfig> {
    let mut config = match path {
        Some(p) => PipelineConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => PipelineConfig::stub(),
    };
    if let Some(b) = backend {
        config.backend.kind = match b {
            Backend::Stub => BackendKind::Stub,
            Backend::Http => BackendKind::Http,
        };
    }
    config.validate()?;
    Ok(config)
}

fn load_index(dir: &Path) -> Result<Arc<Corpus>> {
    let corpus = Corpus::load(dir).with_context(|| format!("loading index {}", dir.display()))?;
    Ok(Arc::new(corpus))
}

fn query(text: String, fields: Vec<String>, k: usize) -> Result<Query> {
    let q = Query::new(text)?.with_seed_k(k).with_fields(fields);
    q.validate()?;
    Ok(q)
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()),
        )
        .with_writer(std::io::stderr)
        .init();

    match Cli::parse().command {
        Command::Ingest {
            papers,
            citations,
            out,
            window,
        } => {
            let mut options = IngestOptions::default();
            if let Some(w) = window {
                options.window_radius = w;
            }
            let (corpus, report) = Corpus::ingest(&papers, &citations, options)?;
            corpus.save(&out, Some(&report))?;
            eprintln!(
                "indexed {} papers, {} edges ({} dangling), {} contexts; rejected {} paper rows and {} edge rows",
                report.papers_indexed,
                report.edges_indexed,
                report.dangling_edges,
                report.contexts,
                report.papers_rejected,
                report.edges_rejected
            );
        }
        Command::SeedSearch {
            index,
            query: text,
            fields,
            k,
        } => {
            let corpus = load_index(&index)?;
            for hit in corpus.seed_search(&query(text, fields, k)?)? {
                let title = corpus
                    .paper(&hit.paper_id)
                    .map(|p| p.title.as_str())
                    .unwrap_or("");
                println!("{}\t{:.4}\t{}", hit.paper_id, hit.score, title);
            }
        }
        Command::Run {
            index,
            query: text,
            fields,
            k,
            backend,
            config,
            out,
        } => {
            let config = load_config(config.as_deref(), backend)?;
            let pipeline = Pipeline::new(load_index(&index)?, config)?;
            let record = pipeline.run(&query(text, fields, k)?, &out)?;
            let dir = out.join(&record.run_id);
            eprintln!("{} {:?} {}", record.run_id, record.status, dir.display());
            if record.status != RunStatus::Complete {
                let cause = record
                    .failure
                    .map(|f| format!("{:?}: {}", f.stage, f.cause))
                    .unwrap_or_default();
                bail!("run failed at {cause}");
            }
            print!("{}", to_tsv(&load_table(&dir)?));
        }
        Command::Eval { run, gold, json } => {
            let report = evaluate_run(&run, &gold)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!(
                    "{}",
                    render_text("contextmine", std::slice::from_ref(&report))
                );
            }
        }
        Command::Serve {
            index,
            port,
            host,
            config,
            runs,
            workers,
            ui,
        } => {
            let config = load_config(config.as_deref(), None)?;
            let pipeline = Arc::new(Pipeline::new(load_index(&index)?, config)?);
            std::fs::create_dir_all(&runs)
                .with_context(|| format!("creating {}", runs.display()))?;
            if let Some(dir) = ui.as_deref().filter(|d| !has_ui(d)) {
                eprintln!("no index.html in {}; serving the API only", dir.display());
            }
            let addr: SocketAddr = format!("{host}:{port}")
                .parse()
                .context("bad --host/--port")?;
            let service = ServiceConfig {
                runs_root: runs,
                workers,
                ui_dir: ui,
            };
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async {
                let listener = bind(addr).await?;
                eprintln!("listening on http://{}", listener.local_addr()?);
                serve(listener, router(pipeline, &service)).await?;
                anyhow::Ok(())
            })?;
        }
        Command::GenFixture { out } => {
            fixture::write(&out)?;
            eprintln!("wrote fixture to {}", out.display());
        }
    }
    Ok(())
}
