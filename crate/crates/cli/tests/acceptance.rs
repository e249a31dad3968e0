//! Acceptance suite: one PASS/FAIL line per primary criterion.
//!
//! Run with `cargo test -p contextmine --test acceptance -- --nocapture` to
//! see the report.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use contextmine_core::corpus::{CitationContext, Corpus, IngestOptions, Query, Relation};
use contextmine_core::evaluation::{
    compute_report, evaluate, match_all, normalized_levenshtein, percent, redundancy, GoldItem,
    GoldStandard, Prediction, DEFAULT_TAU,
};
use contextmine_core::extraction::{
    BackendRequest, ContentType, DatasetMention, ExtractionConfig, Extractor, ExtractorBackend,
    FnBackend, MentionValidator, PromptKind, StubBackend, UsageRole, ValidationTier,
};
use contextmine_core::fixture;
use contextmine_core::pipeline::{load_table, Pipeline, PipelineConfig, RankedTable, RunStatus};
use contextmine_core::resolution::{resolve, Normalizer};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/mini")
}

fn fixture_corpus() -> Corpus {
    let d = fixture_dir();
    Corpus::ingest(
        &d.join("papers.jsonl"),
        &d.join("citations.jsonl"),
        IngestOptions::default(),
    )
    .unwrap()
    .0
}

fn fixture_query() -> Query {
    Query::new(fixture::QUERY)
        .unwrap()
        .with_seed_k(fixture::SEED_K)
}

// ---------------------------------------------------------------------------
// normalization

/// Hand-applied rule sequence: NFKC, trim quote/bracket marks, drop
/// parentheticals, lowercase, punctuation to spaces, drop generic words and
/// leading articles, collapse whitespace. `None` means nothing is left.
const NORMALIZATION_TABLE: [(&str, Option<&str>); 50] = [
    ("ACE 2005 (zh)", Some("ace 2005")),
    ("ACE-2005", Some("ace 2005")),
    ("ACE05", Some("ace05")),
    ("  ACE   2005  ", Some("ace 2005")),
    ("\"SQuAD\"", Some("squad")),
    ("\u{201C}SQuAD 2.0\u{201D}", Some("squad 2 0")),
    ("[MS MARCO]", Some("ms marco")),
    ("The Penn Treebank", Some("penn treebank")),
    ("the GENIA corpus", Some("genia")),
    ("CoNLL-2003 dataset", Some("conll 2003")),
    ("ImageNet (ILSVRC 2012)", Some("imagenet")),
    ("MNIST training set", Some("mnist set")),
    ("SNLI test", Some("snli")),
    ("WikiText-103 (dev)", Some("wikitext 103")),
    ("Visual Genome benchmark", Some("visual genome")),
    (
        "Corpus of Linguistic Acceptability",
        Some("of linguistic acceptability"),
    ),
    ("A Large Annotated Corpus", Some("large annotated")),
    ("An Event Database", Some("event")),
    ("BioASQ", Some("bioasq")),
    (
        "\u{FF21}\u{FF23}\u{FF25}\u{3000}\u{FF12}\u{FF10}\u{FF10}\u{FF15}",
        Some("ace 2005"),
    ),
    ("\u{FB01}ne-grained NER", Some("fine grained ner")),
    ("MUC-4", Some("muc 4")),
    ("TAC KBP 2015", Some("tac kbp 2015")),
    ("TAC-KBP'15", Some("tac kbp 15")),
    ("(SemEval-2010 Task 8)", Some("semeval 2010 task 8")),
    ("OntoNotes 5.0 (English) (v2)", Some("ontonotes 5 0")),
    ("DocRED (Yao et al. (2019))", Some("docred")),
    ("Rich ERE", Some("rich ere")),
    ("ACE", Some("ace")),
    ("'Wikievents'", Some("wikievents")),
    ("<HotpotQA>", Some("hotpotqa")),
    ("{CIFAR-10}", Some("cifar 10")),
    ("CIFAR_100", Some("cifar 100")),
    ("COCO/Flickr30k", Some("coco flickr30k")),
    ("MS-COCO train/val", Some("ms coco val")),
    ("KITTI validation split", Some("kitti split")),
    ("The Pile", Some("pile")),
    ("A", None),
    ("dataset", None),
    ("Training Corpus", None),
    ("(dataset)", None),
    ("The the Benchmark", None),
    ("\u{DC}ber-Corpus", Some("\u{FC}ber")),
    ("\u{C9}l\u{E9}ments", Some("\u{E9}l\u{E9}ments")),
    ("ACE 2005 (zh) dataset", Some("ace 2005")),
    ("GLUE benchmarks", Some("glue")),
    ("DuEE1.0", Some("duee1 0")),
    ("C4 (en.noblocklist)", Some("c4")),
    ("LDC2006T06", Some("ldc2006t06")),
    ("Twitter15&16", Some("twitter15 16")),
];

const NOISE_CHARS: &[char] = &[
    'a', 'B', 'c', 'Z', '0', '7', ' ', ' ', '\t', '-', '_', '.', ',', '(', ')', '[', ']', '"',
    '\'', '/', '&', '\u{201C}', '\u{201D}', '\u{FF21}', '\u{FF10}', '\u{3000}', '\u{FB01}',
    '\u{E9}', '\u{65}', '\u{301}', '\u{DF}', '\u{130}', '\u{2160}', '\u{A0}',
];
const NOISE_WORDS: &[&str] = &[
    "the", "A", "an", "dataset", "Corpus", "train", "test", "(", ")", "ACE", "2005",
];

fn random_surface(rng: &mut ChaCha8Rng) -> String {
    let len = rng.random_range(0..24);
    let mut s = String::new();
    for _ in 0..len {
        if rng.random_bool(0.2) {
            s.push_str(NOISE_WORDS.choose(rng).unwrap());
            s.push(' ');
        } else {
            s.push(*NOISE_CHARS.choose(rng).unwrap());
        }
    }
    s
}

fn normalization_conformance() -> Outcome {
    let start = Instant::now();
    let n = Normalizer::default();
    for (input, want) in NORMALIZATION_TABLE {
        let got = n.normalize(input).ok().map(|k| k.as_str().to_string());
        ensure!(
            got.as_deref() == want,
            "{input:?}: got {got:?}, want {want:?}"
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    for _ in 0..10_000 {
        let s = random_surface(&mut rng);
        if let Ok(k) = n.normalize(&s) {
            let again = n
                .normalize(k.as_str())
                .map_err(|e| format!("{s:?} -> {k:?} -> {e}"))?;
            ensure!(again == k, "not idempotent on {s:?}: {k:?} -> {again:?}");
            checked += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!(
        "50/50 table cases, idempotent on 10000 strings ({checked} non-empty), {elapsed:.0?} < 1s"
    ))
}

// ---------------------------------------------------------------------------
// randomized matching instances

const BASES: &[&str] = &[
    "ACE 2005",
    "RAMS",
    "MAVEN",
    "WikiEvents",
    "DocEE",
    "TAC KBP 2015",
    "SQuAD",
    "CoNLL-2003",
    "Penn Treebank",
    "GENIA",
    "MUC-4",
    "ChFinAnn",
    "DuEE",
    "CASIE",
    "FewFC",
    "MNIST",
    "CIFAR-10",
    "CIFAR-100",
    "ImageNet",
    "COCO",
    "Visual Genome",
    "HotpotQA",
    "Natural Questions",
    "TriviaQA",
    "SNLI",
    "MultiNLI",
    "OntoNotes",
    "DocRED",
    "TACRED",
    "FewRel",
    "SciERC",
    "BioASQ",
    "PubMedQA",
    "MS MARCO",
    "WikiText-103",
    "Dataset",
];
const FAMILIES: &[&str] = &["LDC2006T06", "LDC2013T19", "doi:10.1/x"];

fn perturb(rng: &mut ChaCha8Rng, base: &str) -> String {
    match rng.random_range(0..9) {
        0 | 1 => base.to_string(),
        2 => base.to_lowercase(),
        3 => base.replace(' ', "  "),
        4 => base.replace([' ', '-'], "-"),
        5 => format!("{base} (en)"),
        6 => format!("{base} dataset"),
        7 => {
            // one random character edit
            let mut chars: Vec<char> = base.chars().collect();
            let i = rng.random_range(0..chars.len());
            match rng.random_range(0..3) {
                0 => {
                    chars.remove(i);
                }
                1 => chars.insert(i, 'x'),
                _ => chars[i] = 'q',
            }
            chars.into_iter().collect()
        }
        _ => format!("{base}{}", rng.random_range(1..4)),
    }
}

struct Instance {
    preds: Vec<Prediction>,
    gold: GoldStandard,
}

fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    loop {
        let n_gold = rng.random_range(1..=30);
        let mut bases: Vec<&str> = BASES.to_vec();
        bases.shuffle(rng);
        let items: Vec<GoldItem> = bases
            .iter()
            .take(n_gold)
            .map(|b| GoldItem {
                name: perturb(rng, b),
                aliases: if rng.random_bool(0.2) {
                    vec![perturb(rng, b)]
                } else {
                    vec![]
                },
                family_id: if rng.random_bool(0.1) {
                    Some(FAMILIES.choose(rng).unwrap().to_string())
                } else {
                    None
                },
            })
            .collect();
        let Ok(gold) = GoldStandard::new("q", items) else {
            continue;
        };
        let n_pred = rng.random_range(0..=30);
        let preds = (0..n_pred)
            .map(|_| {
                let b = BASES.choose(rng).unwrap();
                Prediction {
                    name: perturb(rng, b),
                    aliases: (0..rng.random_range(0..3))
                        .map(|_| perturb(rng, b))
                        .collect(),
                    family_id: if rng.random_bool(0.1) {
                        Some(FAMILIES.choose(rng).unwrap().to_string())
                    } else {
                        None
                    },
                    trusted: rng.random_bool(0.5),
                    has_pid: rng.random_bool(0.3),
                }
            })
            .collect();
        return Instance { preds, gold };
    }
}

fn instances() -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..1000).map(|_| random_instance(&mut rng)).collect()
}

/// Brute-force all-pairs oracle, written independently of the matcher.
fn oracle(
    preds: &[Prediction],
    gold: &GoldStandard,
    n: &Normalizer,
    tau: f64,
) -> [BTreeSet<usize>; 3] {
    let ws = |s: &str| s.split_whitespace().collect::<Vec<_>>().join(" ");
    let names_p = |p: &Prediction| -> Vec<String> {
        std::iter::once(&p.name)
            .chain(&p.aliases)
            .cloned()
            .collect()
    };
    let names_g = |g: &GoldItem| -> Vec<String> {
        std::iter::once(&g.name)
            .chain(&g.aliases)
            .cloned()
            .collect()
    };
    let key = |s: &str| n.normalize(s).ok().map(|k| k.as_str().to_string());
    let fam = |p: &Prediction, g: &GoldItem| p.family_id.is_some() && p.family_id == g.family_id;
    let exact_pair = |p: &Prediction, g: &GoldItem| {
        fam(p, g)
            || names_p(p)
                .iter()
                .any(|a| names_g(g).iter().any(|b| ws(a) == ws(b)))
    };
    let norm_pair = |p: &Prediction, g: &GoldItem| {
        fam(p, g)
            || names_p(p).iter().any(|a| {
                names_g(g)
                    .iter()
                    .any(|b| matches!((key(a), key(b)), (Some(x), Some(y)) if x == y))
            })
    };

    let mut exact = BTreeSet::new();
    let mut norm = BTreeSet::new();
    for (gi, g) in gold.items.iter().enumerate() {
        if preds.iter().any(|p| exact_pair(p, g)) {
            exact.insert(gi);
            norm.insert(gi);
        }
        if preds.iter().any(|p| norm_pair(p, g)) {
            norm.insert(gi);
        }
    }
    let spent: Vec<bool> = preds
        .iter()
        .map(|p| {
            gold.items
                .iter()
                .any(|g| exact_pair(p, g) || norm_pair(p, g))
        })
        .collect();
    let mut triples = Vec::new();
    for (gi, g) in gold
        .items
        .iter()
        .enumerate()
        .filter(|(gi, _)| !norm.contains(gi))
    {
        for (pi, p) in preds.iter().enumerate().filter(|(pi, _)| !spent[*pi]) {
            let mut best: f64 = 0.0;
            for a in names_p(p).iter().filter_map(|a| key(a)) {
                for b in names_g(g).iter().filter_map(|b| key(b)) {
                    let longest = a.chars().count().max(b.chars().count()).max(1);
                    best = best.max(1.0 - strsim::levenshtein(&a, &b) as f64 / longest as f64);
                }
            }
            if best >= tau {
                triples.push((best, gi, pi));
            }
        }
    }
    triples.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut fuzzy = norm.clone();
    let mut used_p = BTreeSet::new();
    for (_, gi, pi) in triples {
        if !fuzzy.contains(&gi) && !used_p.contains(&pi) {
            fuzzy.insert(gi);
            used_p.insert(pi);
        }
    }
    [exact, norm, fuzzy]
}

fn recall_monotonicity(cases: &[Instance]) -> Outcome {
    let start = Instant::now();
    let n = Normalizer::default();
    let mut with_gain = 0;
    for (i, c) in cases.iter().enumerate() {
        let sets = match_all(&c.preds, &c.gold, &n, DEFAULT_TAU, normalized_levenshtein);
        ensure!(
            sets.exact.is_subset(&sets.norm) && sets.norm.is_subset(&sets.fuzzy),
            "instance {i}: tiers not nested"
        );
        let r = compute_report(0, 0, &c.preds, &c.gold, &sets, DEFAULT_TAU)
            .map_err(|e| e.to_string())?;
        ensure!(
            r.exact_recall <= r.norm_recall && r.norm_recall <= r.fuzzy_recall,
            "instance {i}: recall order"
        );
        ensure!(r.fuzzy_gain >= 0.0, "instance {i}: negative FuzzyGain");
        with_gain += usize::from(r.fuzzy_gain > 0.0);
        let strict = match_all(&c.preds, &c.gold, &n, 1.0, normalized_levenshtein);
        ensure!(
            strict.fuzzy == strict.norm,
            "instance {i}: tau=1 fuzzy differs from norm"
        );
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    Ok(format!(
        "{} instances: exact<=norm<=fuzzy, gain>=0 ({with_gain} with gain>0), tau=1 fuzzy==norm, {elapsed:.0?} < 10s",
        cases.len()
    ))
}

fn oracle_equivalence(cases: &[Instance]) -> Outcome {
    let n = Normalizer::default();
    let mut matched = 0;
    for (i, c) in cases.iter().enumerate() {
        let sets = match_all(&c.preds, &c.gold, &n, DEFAULT_TAU, normalized_levenshtein);
        let [oe, on, of] = oracle(&c.preds, &c.gold, &n, DEFAULT_TAU);
        ensure!(
            sets.exact == oe && sets.norm == on && sets.fuzzy == of,
            "instance {i}: sets differ from oracle"
        );
        let r = compute_report(0, 0, &c.preds, &c.gold, &sets, DEFAULT_TAU)
            .map_err(|e| e.to_string())?;
        let g = c.gold.len() as f64;
        let want = [oe.len(), on.len(), of.len()].map(|k| 100.0 * k as f64 / g);
        ensure!(
            [r.exact_recall, r.norm_recall, r.fuzzy_recall] == want,
            "instance {i}: recall {:?} vs oracle {want:?}",
            [r.exact_recall, r.norm_recall, r.fuzzy_recall]
        );
        matched += of.len();
    }
    Ok(format!(
        "{} instances, three tiers bit-identical to the all-pairs oracle ({matched} fuzzy matches)",
        cases.len()
    ))
}

// ---------------------------------------------------------------------------

fn formula_reproduction(cases: &[Instance]) -> Outcome {
    let red = redundancy(5, 4).map_err(|e| e.to_string())?;
    ensure!(red == 0.25, "redundancy(5,4) = {red}");

    let n = Normalizer::default();
    for (i, c) in cases.iter().enumerate() {
        let sets = match_all(&c.preds, &c.gold, &n, DEFAULT_TAU, normalized_levenshtein);
        let r = compute_report(0, 0, &c.preds, &c.gold, &sets, DEFAULT_TAU)
            .map_err(|e| e.to_string())?;
        ensure!(
            r.fuzzy_gain == r.fuzzy_recall - r.norm_recall,
            "instance {i}: gain identity"
        );
    }

    // 11 gold items, 9 recovered by canonical name
    let names = [
        "A1", "B2", "C3", "D4", "E5", "F6", "G7", "H8", "I9", "J10", "K11",
    ];
    let gold =
        GoldStandard::new("row", names.iter().map(|s| GoldItem::named(*s)).collect()).unwrap();
    let preds: Vec<Prediction> = names[..9]
        .iter()
        .map(|s| Prediction::named(s.to_lowercase()))
        .collect();
    let r = evaluate(9, 9, &preds, &gold, &n, DEFAULT_TAU, normalized_levenshtein)
        .map_err(|e| e.to_string())?;
    ensure!(
        (r.norm_recall - 81.82).abs() <= 0.01,
        "norm recall {}",
        r.norm_recall
    );
    ensure!(
        format!("{:.2}", r.norm_recall) == "81.82",
        "rounded {:.2}",
        r.norm_recall
    );
    ensure!(percent(9, 11) == r.norm_recall, "percent mismatch");
    Ok(format!(
        "redundancy(5,4)=0.25, gain=fuzzy-norm on {} reports, 9/11 -> {:.2}% (tol 0.01)",
        cases.len(),
        r.norm_recall
    ))
}

fn ace_family_case() -> Outcome {
    let url = "https://catalog.ldc.upenn.edu/LDC2006T06";
    let mention = |name: &str, i: usize| DatasetMention {
        surface_name: name.into(),
        usage_role: UsageRole::Use,
        content_type: ContentType::ProducedResource,
        evidence: format!("We use {name} [1] from {url}."),
        confidence: 0.9,
        rationale: String::new(),
        relation: Relation {
            citing_id: format!("P{i}"),
            cited_id: "P020".into(),
        },
        context_id: format!("ctx-{i}"),
        extracted_url: Some(url.into()),
    };
    let mentions = vec![
        mention("ACE", 1),
        mention("ACE 2005", 2),
        mention("ACE 2005 (zh)", 3),
    ];
    let res = resolve(&mentions, &Normalizer::default(), &BTreeMap::new());
    ensure!(
        res.grouped_count == 2,
        "keys before family merge: {}",
        res.grouped_count
    );
    ensure!(res.entities.len() == 1, "{} entities", res.entities.len());
    let e = &res.entities[0];
    let aliases: Vec<&str> = e.aliases.iter().map(String::as_str).collect();
    ensure!(
        aliases == ["ACE", "ACE 2005", "ACE 2005 (zh)"],
        "aliases {aliases:?}"
    );
    let prov: Vec<&str> = e.provenance.iter().map(String::as_str).collect();
    ensure!(prov == ["ctx-1", "ctx-2", "ctx-3"], "provenance {prov:?}");
    ensure!(
        e.family_id.as_deref() == Some("LDC2006T06"),
        "family {:?}",
        e.family_id
    );
    Ok(format!(
        "1 entity {:?}, 3 aliases, 3 provenance contexts, family LDC2006T06",
        e.display_name
    ))
}

fn table_bytes(corpus: Corpus) -> Vec<u8> {
    let config = PipelineConfig::load(&fixture_dir().join("config.toml")).unwrap();
    let p = Pipeline::new(Arc::new(corpus), config).unwrap();
    let runs = tempfile::tempdir().unwrap();
    let r = p.run(&fixture_query(), runs.path()).unwrap();
    assert_eq!(r.status, RunStatus::Complete);
    std::fs::read(runs.path().join(&r.run_id).join("table.json")).unwrap()
}

fn check_table(table: &RankedTable) -> Result<(), String> {
    let want = fixture::expected_rows();
    ensure!(table.rows.len() == want.len(), "{} rows", table.rows.len());
    for (row, exp) in table.rows.iter().zip(&want) {
        ensure!(
            row.rank == exp.rank
                && row.display_name == exp.display_name
                && row.citation_count == exp.citation_count,
            "row {} is {} ({}), want {} ({})",
            exp.rank,
            row.display_name,
            row.citation_count,
            exp.display_name,
            exp.citation_count
        );
        ensure!(
            row.trusted == exp.trusted,
            "{} trusted={}",
            row.display_name,
            row.trusted
        );
        ensure!(
            row.link.as_ref().map(|l| l.value.clone()) == exp.link_value,
            "{} link",
            row.display_name
        );
        ensure!(
            row.aliases == exp.aliases,
            "{} aliases {:?}",
            row.display_name,
            row.aliases
        );
    }
    Ok(())
}

fn end_to_end_determinism() -> Outcome {
    let reference = table_bytes(fixture_corpus());
    for _ in 1..5 {
        ensure!(
            table_bytes(fixture_corpus()) == reference,
            "repeat run differs"
        );
    }
    let d = fixture_dir();
    let papers = std::fs::read_to_string(d.join("papers.jsonl")).unwrap();
    let cites = std::fs::read_to_string(d.join("citations.jsonl")).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let tmp = tempfile::tempdir().unwrap();
    for k in 0..5 {
        let mut p: Vec<&str> = papers.lines().collect();
        let mut c: Vec<&str> = cites.lines().collect();
        p.shuffle(&mut rng);
        c.shuffle(&mut rng);
        let (pp, cp) = (
            tmp.path().join(format!("p{k}.jsonl")),
            tmp.path().join(format!("c{k}.jsonl")),
        );
        std::fs::write(&pp, p.join("\n") + "\n").unwrap();
        std::fs::write(&cp, c.join("\n") + "\n").unwrap();
        let (corpus, _) = Corpus::ingest(&pp, &cp, IngestOptions::default()).unwrap();
        ensure!(
            corpus.paper_count() == 200 && corpus.context_count() == 1000,
            "corpus size after shuffle"
        );
        ensure!(
            table_bytes(corpus) == reference,
            "permutation {k} changes the table"
        );
    }
    let table: RankedTable = serde_json::from_slice(&reference).unwrap();
    check_table(&table)?;
    Ok(format!(
        "5 repeat runs + 5 shuffled inputs byte-identical ({} bytes); {} rows match the manifest",
        reference.len(),
        table.rows.len()
    ))
}

fn corpus_latency() -> Outcome {
    let corpus = fixture_corpus();
    let q = fixture_query();
    let mut times = Vec::new();
    let mut contexts = 0;
    for _ in 0..31 {
        let t = Instant::now();
        let seeds = corpus.seed_search(&q).unwrap();
        contexts = corpus
            .expand_contexts(seeds.iter().map(|s| s.paper_id.as_str()))
            .len();
        times.push(t.elapsed());
    }
    times.sort();
    let median = times[times.len() / 2];
    ensure!(
        contexts == fixture::EXPECTED_COUNTS.contexts,
        "{contexts} contexts"
    );
    ensure!(median < Duration::from_millis(100), "median {median:?}");
    Ok(format!(
        "median {median:.2?} over 31 runs (< 100ms), {contexts} contexts"
    ))
}

// ---------------------------------------------------------------------------

const WINDOW: &str = "We evaluate on ACE 2005 [3]. Results on RAMS are reported in Table 2. Code: https://github.com/x/y.";

fn rec(name: Value, role: Value, ct: Value, evidence: Value, confidence: Value) -> Value {
    json!({"name": name, "usage_role": role, "content_type": ct, "evidence": evidence,
           "confidence": confidence, "rationale": "r"})
}

fn validation_suite() -> Vec<(Value, ValidationTier)> {
    use ValidationTier::*;
    let ev = json!("We evaluate on ACE 2005 [3].");
    let (u, p) = (json!("Use"), json!("Produced Resource"));
    let ok = |name: &str| rec(json!(name), u.clone(), p.clone(), ev.clone(), json!(0.8));
    let without = |field: &str| {
        let mut v = ok("ACE 2005");
        v.as_object_mut().unwrap().remove(field);
        v
    };
    vec![
        (json!("ACE 2005"), Schema),
        (json!(42), Schema),
        (json!(["ACE 2005"]), Schema),
        (Value::Null, Schema),
        (without("name"), Schema),
        (
            rec(json!(7), u.clone(), p.clone(), ev.clone(), json!(0.8)),
            Schema,
        ),
        (
            rec(json!("   "), u.clone(), p.clone(), ev.clone(), json!(0.8)),
            Schema,
        ),
        (
            rec(
                json!("ACE 2005"),
                json!("Used"),
                p.clone(),
                ev.clone(),
                json!(0.8),
            ),
            Schema,
        ),
        (
            rec(
                json!("ACE 2005"),
                json!("evaluate against"),
                p.clone(),
                ev.clone(),
                json!(0.8),
            ),
            Schema,
        ),
        (without("usage_role"), Schema),
        (
            rec(
                json!("ACE 2005"),
                u.clone(),
                json!("Dataset"),
                ev.clone(),
                json!(0.8),
            ),
            Schema,
        ),
        (
            rec(
                json!("ACE 2005"),
                u.clone(),
                json!(""),
                ev.clone(),
                json!(0.8),
            ),
            Schema,
        ),
        (
            rec(
                json!("ACE 2005"),
                u.clone(),
                json!(3),
                ev.clone(),
                json!(0.8),
            ),
            Schema,
        ),
        (
            rec(
                json!("ACE 2005"),
                u.clone(),
                p.clone(),
                ev.clone(),
                json!(1.2),
            ),
            Schema,
        ),
        (
            rec(
                json!("ACE 2005"),
                u.clone(),
                p.clone(),
                ev.clone(),
                json!(-0.1),
            ),
            Schema,
        ),
        (
            rec(
                json!("ACE 2005"),
                u.clone(),
                p.clone(),
                ev.clone(),
                json!("0.9"),
            ),
            Schema,
        ),
        (without("confidence"), Schema),
        (without("evidence"), Schema),
        (without("rationale"), Schema),
        (
            rec(
                json!("ACE 2005"),
                u.clone(),
                p.clone(),
                ev.clone(),
                json!(100),
            ),
            Schema,
        ),
        (
            rec(
                json!("ACE 2005"),
                u.clone(),
                p.clone(),
                json!(""),
                json!(0.8),
            ),
            Semantic,
        ),
        (
            rec(
                json!("ACE 2005"),
                u.clone(),
                p.clone(),
                json!("   "),
                json!(0.8),
            ),
            Semantic,
        ),
        (
            rec(
                json!("ACE 2005"),
                u.clone(),
                p.clone(),
                json!("We evaluate on ACE 2004 [3]."),
                json!(0.8),
            ),
            Semantic,
        ),
        (
            rec(
                json!("RAMS"),
                u.clone(),
                p.clone(),
                json!("Results on RAMS appear in Table 2."),
                json!(0.8),
            ),
            Semantic,
        ),
        (
            rec(
                json!("MAVEN"),
                u.clone(),
                p.clone(),
                json!("We train on MAVEN."),
                json!(0.8),
            ),
            Semantic,
        ),
        (
            rec(
                json!("ACE 2005"),
                u.clone(),
                p.clone(),
                json!("we evaluate on ACE 2005 [3]."),
                json!(0.8),
            ),
            Semantic,
        ),
        (ok("BERT"), Domain),
        (ok("dataset"), Domain),
        (ok("The Benchmark"), Domain),
        (ok("GPT-2"), Domain),
    ]
}

fn extraction_validation() -> Outcome {
    let suite = validation_suite();
    ensure!(suite.len() == 30, "suite has {} cases", suite.len());
    let good = [
        rec(
            json!("ACE 2005"),
            json!("Evaluate Against"),
            json!("Produced Resource"),
            json!("We evaluate on ACE 2005 [3]."),
            json!(0.9),
        ),
        rec(
            json!("RAMS"),
            json!("Use"),
            json!("Discovery"),
            json!("Results on RAMS are reported in Table 2."),
            json!(0.7),
        ),
    ];
    let mut records: Vec<Value> = suite.iter().map(|(v, _)| v.clone()).collect();
    records.extend(good.iter().cloned());
    let reply = json!({ "datasets": records }).to_string();
    let stub = StubBackend::default();
    let backend = FnBackend(move |req: &BackendRequest| match req.kind {
        PromptKind::Extraction => Ok(reply.clone()),
        PromptKind::Relevance => stub.complete(req),
    });

    let context = CitationContext {
        context_id: "ctx-suite".into(),
        citing_id: "P1".into(),
        cited_id: "P2".into(),
        window_text: WINDOW.into(),
        citing_title: "Event extraction".into(),
        cited_title: "ACE".into(),
        citing_abstract: String::new(),
        cited_abstract: String::new(),
    };
    let validator = MentionValidator::default();
    let ex = Extractor::new(&backend, &validator, ExtractionConfig::default());
    let out = ex.run(
        std::slice::from_ref(&context),
        &Query::new("event extraction").unwrap(),
    );
    let c = &out.contexts[0];

    let mut per_tier: BTreeMap<ValidationTier, usize> = BTreeMap::new();
    for (i, (record, tier)) in suite.iter().enumerate() {
        let hits: Vec<_> = c
            .rejections
            .iter()
            .filter(|r| &r.record == record)
            .collect();
        ensure!(
            hits.len() == 1,
            "case {i}: {} rejections for {record}",
            hits.len()
        );
        ensure!(
            hits[0].tier == *tier,
            "case {i}: tier {:?}, want {tier:?} ({record})",
            hits[0].tier
        );
        *per_tier.entry(*tier).or_default() += 1;
    }
    let s = &out.stats;
    ensure!(
        c.rejections.len() == 30 && c.mentions.len() == 2,
        "{} rejected, {} kept",
        c.rejections.len(),
        c.mentions.len()
    );
    ensure!(
        s.validated + s.rejected() == s.raw_records,
        "conservation: {} + {} != {}",
        s.validated,
        s.rejected(),
        s.raw_records
    );
    ensure!(
        (s.rejected_schema, s.rejected_semantic, s.rejected_domain) == (20, 6, 4),
        "tier counts {:?}",
        (s.rejected_schema, s.rejected_semantic, s.rejected_domain)
    );
    Ok(format!(
        "30/30 rejected with expected tier (schema {}, semantic {}, domain {}); {} kept + {} rejected = {} raw",
        per_tier[&ValidationTier::Schema],
        per_tier[&ValidationTier::Semantic],
        per_tier[&ValidationTier::Domain],
        s.validated,
        s.rejected(),
        s.raw_records
    ))
}

fn service_contract() -> Outcome {
    use contextmine_service::{bind, router, serve, ServiceConfig};

    let corpus = Arc::new(fixture_corpus());
    let config = PipelineConfig::load(&fixture_dir().join("config.toml")).unwrap();
    let pipeline = Arc::new(Pipeline::new(corpus, config).unwrap());
    let runs = tempfile::tempdir().unwrap();
    // no UI directory: the API alone must serve the round trip
    let svc = ServiceConfig {
        runs_root: runs.path().to_path_buf(),
        workers: 2,
        ui_dir: None,
    };
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        tokio::runtime::Runtime::new()
            .unwrap()
            .block_on(async move {
                let listener = bind("127.0.0.1:0".parse().unwrap()).await.unwrap();
                tx.send(listener.local_addr().unwrap()).unwrap();
                serve(listener, router(pipeline, &svc)).await.unwrap();
            })
    });
    let base = format!("http://{}", rx.recv().unwrap());
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .http_status_as_error(false)
        .build()
        .into();

    let mut r = agent
        .post(format!("{base}/api/queries"))
        .send_json(json!({"text": fixture::QUERY, "k": fixture::SEED_K}))
        .map_err(|e| e.to_string())?;
    ensure!(r.status().as_u16() == 202, "POST status {}", r.status());
    let body: Value = r.body_mut().read_json().map_err(|e| e.to_string())?;
    let id = body["run_id"].as_str().ok_or("no run_id")?.to_string();

    let start = Instant::now();
    let mut polls = 0;
    let history = loop {
        polls += 1;
        let rec: Value = agent
            .get(format!("{base}/api/runs/{id}"))
            .call()
            .unwrap()
            .body_mut()
            .read_json()
            .unwrap();
        if rec["status"] == "Complete" {
            break rec["history"].clone();
        }
        ensure!(rec["status"] != "Failed", "run failed: {}", rec["failure"]);
        ensure!(
            start.elapsed() < Duration::from_secs(30),
            "run not complete after 30s"
        );
        std::thread::sleep(Duration::from_millis(10));
    };
    ensure!(
        history == json!(["Pending", "Running", "Complete"]),
        "history {history}"
    );

    let mut t = agent
        .get(format!("{base}/api/runs/{id}/table"))
        .call()
        .map_err(|e| e.to_string())?;
    ensure!(t.status().as_u16() == 200, "table status {}", t.status());
    let table: RankedTable = t.body_mut().read_json().map_err(|e| e.to_string())?;
    check_table(&table)?;
    ensure!(
        table == load_table(&runs.path().join(&id)).unwrap(),
        "API table differs from the run artifact"
    );
    Ok(format!("POST -> {polls} polls -> Pending/Running/Complete -> GET table: {} rows match the manifest", table.rows.len()))
}

// ---------------------------------------------------------------------------

fn run(name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        Err(e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default())
    });
    match outcome {
        Ok(detail) => {
            println!("PASS  {name:<36} {detail}");
            true
        }
        Err(why) => {
            println!("FAIL  {name:<36} {why}");
            false
        }
    }
}

#[test]
fn acceptance() {
    let cases = instances();
    let results = [
        run("normalization conformance", normalization_conformance),
        run("recall monotonicity", || recall_monotonicity(&cases)),
        run("oracle equivalence", || oracle_equivalence(&cases)),
        run("formula reproduction", || formula_reproduction(&cases)),
        run("ACE family case", ace_family_case),
        run("end-to-end determinism", end_to_end_determinism),
        run("corpus latency", corpus_latency),
        run("extraction validation tiers", extraction_validation),
        run("service contract", service_contract),
    ];
    let passed = results.iter().filter(|r| **r).count();
    println!("{passed}/{} primary criteria passed", results.len());
    assert_eq!(passed, results.len());
}
