//! Dataset retrieval for biomedical metadata corpora.
//!
//! The crate covers the whole path from harvested dataset records to an
//! evaluated ranking:
//!
//! * [`ingest`] parses corpora, topics, qrels, runs, embeddings and category lexicons.
//! * [`textprep`] normalizes text identically for documents and queries.
//! * [`index`] builds an immutable inverted index with a binary snapshot format.
//! * [`expansion`] classifies query terms by document frequency and expands them
//!   with embedding neighbours.
//! * [`scoring`] implements the binned term-relevance ranking model (RTRL) and
//!   tf·idf / BM25 baselines.
//! * [`rerank`] boosts results that share a category with the query and fuses runs.
//! * [`eval`] computes AP/infAP, NDCG/infNDCG, precision with partial credit,
//!   UIR, Kendall's tau and paired t-tests.
//! * [`pipeline`] wires model configurations together and runs experiments.

pub mod error;
pub mod eval;
pub mod expansion;
pub mod index;
pub mod ingest;
pub mod pipeline;
pub mod rerank;
pub mod scoring;
pub mod textprep;

pub use error::{Error, Result};
pub use expansion::{ExpansionModel, RelevanceClass, WeightedQuery};
pub use index::InvertedIndex;
pub use ingest::{DocumentRecord, EmbeddingTable, JudgmentSet, RankedList, TopicQuery};
pub use textprep::Analyzer;
