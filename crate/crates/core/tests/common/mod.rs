#![allow(dead_code)]

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use biosearch::index::InvertedIndex;
use biosearch::ingest::{
    parse_corpus, parse_embeddings, parse_qrels, parse_queries, CategoryLexicon, CorpusOptions, EmbeddingTable,
    JudgmentSet, TopicQuery,
};
use biosearch::pipeline::Resources;
use biosearch::textprep::Analyzer;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn open(name: &str) -> BufReader<File> {
    BufReader::new(File::open(fixture(name)).unwrap())
}

pub struct Fixture {
    pub index: InvertedIndex,
    pub embeddings: EmbeddingTable,
    pub queries: Vec<TopicQuery>,
    pub qrels: JudgmentSet,
}

impl Fixture {
    pub fn load() -> Self {
        let corpus = parse_corpus(open("corpus.trec"), CorpusOptions { strict: true }).unwrap();
        assert!(corpus.skipped.is_empty());
        Fixture {
            index: InvertedIndex::build(corpus.records, Analyzer::default()).unwrap(),
            embeddings: parse_embeddings(open("embeddings.txt")).unwrap(),
            queries: parse_queries(open("queries.tsv")).unwrap(),
            qrels: parse_qrels(open("qrels.txt")).unwrap(),
        }
    }

    pub fn resources(&self) -> Resources<'_> {
        Resources::new(&self.index, CategoryLexicon::bundled()).with_embeddings(&self.embeddings)
    }
}
