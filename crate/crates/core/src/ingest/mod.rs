//! Readers and writers for every on-disk format the engine consumes.

mod corpus;
mod embeddings;
mod lexicon;
mod qrels;
mod queries;
mod run;

pub use corpus::{parse_corpus, CorpusOptions, CorpusReader, DocumentRecord, ParsedCorpus};
pub use embeddings::{parse_embeddings, EmbeddingTable};
pub use lexicon::{CategoryLexicon, CLINICAL_TRIAL};
pub use qrels::{parse_qrels, Grade, Judgment, JudgmentSet};
pub use queries::{parse_queries, TopicQuery};
pub use run::{parse_run, write_run, RankedList, ScoredDoc};
