use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use biosearch::eval::{evaluate_run, EvalConfig};
use biosearch::ingest::{parse_corpus, parse_qrels, parse_queries, parse_run, CategoryLexicon, CorpusOptions};
use biosearch::pipeline::{run_model, ModelConfig, Resources};
use biosearch::scoring::ScorerKind;
use biosearch::{Analyzer, InvertedIndex};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

fn biosearch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_biosearch")).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn fixture_index() -> InvertedIndex {
    let corpus = parse_corpus(
        fs::read(fixture("corpus.trec")).unwrap().as_slice(),
        CorpusOptions { strict: true },
    )
    .unwrap();
    InvertedIndex::build(corpus.records, Analyzer::default()).unwrap()
}

#[test]
fn eval_prints_summary_for_fixture_run() {
    let run = fixture("golden/official/runs/sibtex-1.run");
    let qrels = fixture("qrels.txt");
    let out = biosearch(&["eval", "--run", path(&run), "--qrels", path(&qrels)]);
    assert_eq!(out.status.code(), Some(0));

    let lists = parse_run(fs::read(&run).unwrap().as_slice()).unwrap();
    let judgments = parse_qrels(fs::read(&qrels).unwrap().as_slice()).unwrap();
    let report = evaluate_run(&lists, &judgments, &EvalConfig::default()).unwrap();
    let text = stdout(&out);
    assert!(text.starts_with("# command = \"eval\""));
    assert!(text.contains(&report.to_string()));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = biosearch(&["eval", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert!(out.stdout.is_empty());
}

#[test]
fn help_and_version_succeed() {
    assert_eq!(biosearch(&["--help"]).status.code(), Some(0));
    assert_eq!(biosearch(&["--version"]).status.code(), Some(0));
    assert_eq!(biosearch(&["search", "--help"]).status.code(), Some(0));
}

#[test]
fn missing_qrels_file_is_a_data_error() {
    let run = fixture("golden/official/runs/sibtex-1.run");
    let out = biosearch(&["eval", "--run", path(&run), "--qrels", "/nonexistent/qrels.txt"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/qrels.txt"));
}

#[test]
fn malformed_run_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("bad.run");
    fs::write(&run, "T1 Q0 100001 1\n").unwrap();
    let out = biosearch(&["eval", "--run", path(&run), "--qrels", path(&fixture("qrels.txt"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_parameter_is_a_usage_error() {
    let a = fixture("golden/official/runs/sibtex-1.run");
    let out = biosearch(&["fuse", "--a", path(&a), "--b", path(&a), "--alpha", "1.5"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn search_matches_library_and_records_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let snapshot = dir.path().join("idx.bin");
    let out = biosearch(&["index", "--corpus", path(&fixture("corpus.trec")), "--out", path(&snapshot)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let queries = fixture("queries.tsv");
    let out = biosearch(&[
        "search", "--index", path(&snapshot), "--queries", path(&queries), "--scorer", "bm25", "--top", "5", "--tag", "b",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let header: Vec<&str> = text.lines().take_while(|l| l.starts_with('#')).collect();
    assert!(header.iter().any(|l| l.contains("scorer = \"bm25\"")));
    assert!(header.iter().any(|l| l.contains("top = 5")));

    let index = fixture_index();
    let topics = parse_queries(fs::read(&queries).unwrap().as_slice()).unwrap();
    let resources = Resources::new(&index, CategoryLexicon::bundled());
    let expected = run_model(&ModelConfig::plain("b", ScorerKind::Bm25), &resources, &topics, 5).unwrap();
    let mut written = Vec::new();
    biosearch::ingest::write_run(&mut written, &expected).unwrap();
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    assert_eq!(body, String::from_utf8(written).unwrap());
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.toml");
    fs::write(
        &config,
        format!(
            "[paths]\ncorpus = {:?}\nqueries = {:?}\n\n[search]\nc = 1.85\ntop = 7\n",
            fixture("corpus.trec"),
            fixture("queries.tsv")
        ),
    )
    .unwrap();
    let out = biosearch(&["search", "--config", path(&config), "--top", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("# c = 1.85"));
    assert!(text.contains("# top = 2"));
    let lists = parse_run(Cursor::new(text)).unwrap();
    assert!(lists.iter().all(|l| l.len() <= 2));
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.toml");
    fs::write(&config, "[search]\nboost = 3\n").unwrap();
    let out = biosearch(&["search", "--config", path(&config)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn fuse_endpoint_reproduces_first_run_order() {
    let a = fixture("golden/official/runs/sibtex-4.run");
    let b = fixture("golden/official/runs/sibtex-1.run");
    let out = biosearch(&["fuse", "--a", path(&a), "--b", path(&b), "--alpha", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let fused = parse_run(Cursor::new(stdout(&out))).unwrap();
    let first = parse_run(fs::read(&a).unwrap().as_slice()).unwrap();
    for list in &first {
        let f = fused.iter().find(|l| l.topic_id == list.topic_id).unwrap();
        let kept: Vec<&str> = f.doc_ids().filter(|d| list.doc_ids().any(|x| x == *d)).collect();
        assert_eq!(kept, list.doc_ids().collect::<Vec<_>>());
    }
}

#[test]
fn rerank_without_gain_keeps_run() {
    let run = fixture("golden/official/runs/sibtex-1.run");
    let out = biosearch(&[
        "rerank",
        "--run",
        path(&run),
        "--corpus",
        path(&fixture("corpus.trec")),
        "--queries",
        path(&fixture("queries.tsv")),
        "--g",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let reranked = parse_run(Cursor::new(stdout(&out))).unwrap();
    assert_eq!(reranked, parse_run(fs::read(&run).unwrap().as_slice()).unwrap());
}

#[test]
fn classify_reports_query_categories() {
    let out = biosearch(&["classify", "--queries", path(&fixture("queries.tsv"))]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).lines().any(|l| l == "T1\tskipgram_match\tSequences"));
}

#[test]
fn expand_lists_neighbours() {
    let out = biosearch(&[
        "expand",
        "--corpus",
        path(&fixture("corpus.trec")),
        "--embeddings",
        path(&fixture("embeddings.txt")),
        "--k",
        "1",
        "cancer",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).lines().any(|l| l == "carcinoma\t0.737000\tkey_relevant\tcancer"));
}

#[test]
fn experiment_preset_reproduces_golden_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = biosearch(&[
        "experiment",
        "--preset",
        "official",
        "--corpus",
        path(&fixture("corpus.trec")),
        "--queries",
        path(&fixture("queries.tsv")),
        "--qrels",
        path(&fixture("qrels.txt")),
        "--embeddings",
        path(&fixture("embeddings.txt")),
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let golden = fixture("golden/official");
    for name in ["summary.txt", "runs/sibtex-5.run", "metrics/sibtex-3.csv"] {
        assert_eq!(fs::read(dir.path().join(name)).unwrap(), fs::read(golden.join(name)).unwrap(), "{name}");
    }
    assert_eq!(stdout(&out).as_bytes(), fs::read(golden.join("summary.txt")).unwrap());
}
