//! Query-term relevance classes and embedding-based query expansion.
//!
//! A query term is *key-relevant* when its document frequency is at most the
//! median document frequency of the query's terms; the rest are *relevant*.
//! Expansion adds the `k` nearest embedding neighbours of every original term,
//! weighted by cosine similarity. The penalized model additionally scales every
//! non-key-relevant original and its expansions by a loss factor.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::InvertedIndex;
use crate::ingest::EmbeddingTable;
use crate::textprep::Token;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelevanceClass {
    KeyRelevant,
    Relevant,
}

impl fmt::Display for RelevanceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RelevanceClass::KeyRelevant => "key_relevant",
            RelevanceClass::Relevant => "relevant",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Original,
    /// Expansion of the named original term.
    ExpansionOf(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryEntry {
    pub term: String,
    pub weight: f64,
    pub class: RelevanceClass,
    pub origin: Origin,
}

impl QueryEntry {
    /// The original term this entry derives from.
    pub fn source(&self) -> &str {
        match &self.origin {
            Origin::Original => &self.term,
            Origin::ExpansionOf(src) => src,
        }
    }
}

/// Original and expansion terms with weights and relevance classes.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedQuery {
    entries: Vec<QueryEntry>,
    original_len: usize,
}

impl WeightedQuery {
    /// Originals only, each with weight 1. Repeated terms are kept once.
    pub fn from_terms<S: AsRef<str>>(terms: &[S], index: &InvertedIndex) -> Self {
        let terms = dedup(terms.iter().map(|t| t.as_ref().to_string()));
        let classification = classify_terms(&terms, index);
        let entries: Vec<QueryEntry> = terms
            .into_iter()
            .map(|term| QueryEntry {
                class: classification.class_of(&term).unwrap_or(RelevanceClass::KeyRelevant),
                term,
                weight: 1.0,
                origin: Origin::Original,
            })
            .collect();
        WeightedQuery {
            original_len: entries.len(),
            entries,
        }
    }

    pub fn from_entries(entries: Vec<QueryEntry>) -> Self {
        let original_len = entries.iter().filter(|e| e.origin == Origin::Original).count();
        WeightedQuery { entries, original_len }
    }

    pub fn entries(&self) -> &[QueryEntry] {
        &self.entries
    }

    /// L: the number of original query terms.
    pub fn original_len(&self) -> usize {
        self.original_len
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.term.as_str())
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// True when every entry is an unpenalized original.
    pub fn is_unit_weight(&self) -> bool {
        self.entries.iter().all(|e| e.origin == Origin::Original && e.weight == 1.0)
    }
}

fn dedup(terms: impl Iterator<Item = String>) -> Vec<String> {
    let mut seen = HashSet::new();
    terms.filter(|t| seen.insert(t.clone())).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TermClass {
    pub term: String,
    pub doc_freq: usize,
    pub class: RelevanceClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelevanceClassification {
    pub median_doc_freq: f64,
    pub terms: Vec<TermClass>,
}

impl RelevanceClassification {
    pub fn class_of(&self, term: &str) -> Option<RelevanceClass> {
        self.terms.iter().find(|t| t.term == term).map(|t| t.class)
    }

    pub fn key_relevant_count(&self) -> usize {
        self.terms.iter().filter(|t| t.class == RelevanceClass::KeyRelevant).count()
    }
}

/// Median of a non-empty multiset; mean of the middle two for even sizes.
pub fn median(values: &[usize]) -> f64 {
    let mut v = values.to_vec();
    v.sort_unstable();
    let n = v.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] as f64 + v[n / 2] as f64) / 2.0
    }
}

/// Classify each term: key-relevant iff `df(t) ≤ median(df over the query)`.
pub fn classify_terms<S: AsRef<str>>(terms: &[S], index: &InvertedIndex) -> RelevanceClassification {
    let dfs: Vec<usize> = terms.iter().map(|t| index.doc_freq(t.as_ref())).collect();
    let median_doc_freq = median(&dfs);
    let terms = terms
        .iter()
        .zip(dfs)
        .map(|(term, df)| TermClass {
            term: term.as_ref().to_string(),
            doc_freq: df,
            class: if df as f64 <= median_doc_freq {
                RelevanceClass::KeyRelevant
            } else {
                RelevanceClass::Relevant
            },
        })
        .collect();
    RelevanceClassification {
        median_doc_freq,
        terms,
    }
}

/// Cosine similarity of two equal-length vectors.
pub fn cosine(u: &[f64], v: &[f64]) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    dot / (nu * nv)
}

/// The `k` vocabulary terms most cosine-similar to `term`, excluding `term`
/// itself, by descending similarity with lexicographic tie-breaks. Empty when
/// `term` is not in the vocabulary.
pub fn knn(table: &EmbeddingTable, term: &str, k: usize) -> Vec<(String, f64)> {
    let Some(q) = table.position(term) else {
        return Vec::new();
    };
    if k == 0 {
        return Vec::new();
    }
    let query = table.row(q);
    let qnorm = table.norm(q);
    let mut scored: Vec<(f64, usize)> = (0..table.len())
        .filter(|&i| i != q)
        .map(|i| {
            let dot: f64 = query.iter().zip(table.row(i)).map(|(a, b)| a * b).sum();
            (dot / (qnorm * table.norm(i)), i)
        })
        .collect();
    let terms = table.terms();
    let order = |a: &(f64, usize), b: &(f64, usize)| b.0.total_cmp(&a.0).then_with(|| terms[a.1].cmp(&terms[b.1]));
    if k < scored.len() {
        scored.select_nth_unstable_by(k - 1, order);
        scored.truncate(k);
    }
    scored.sort_by(order);
    scored.into_iter().map(|(sim, i)| (terms[i].clone(), sim)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpansionModel {
    /// Every original term expands with full weight.
    #[default]
    Uniform,
    /// Non-key-relevant originals and their expansions are scaled by the loss factor.
    Penalized,
}

impl std::str::FromStr for ExpansionModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(ExpansionModel::Uniform),
            "penalized" => Ok(ExpansionModel::Penalized),
            other => Err(Error::param(format!("unknown expansion model `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionParams {
    /// Neighbours per original term.
    pub k: usize,
    pub model: ExpansionModel,
    /// Loss factor in (0, 1]; only read by the penalized model.
    pub loss: f64,
}

impl Default for ExpansionParams {
    fn default() -> Self {
        ExpansionParams {
            k: 10,
            model: ExpansionModel::Uniform,
            loss: 0.01,
        }
    }
}

/// A normalized query term plus the surface word it came from, used for the
/// embedding lookup.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryTerm {
    pub term: String,
    pub surface: Option<String>,
}

impl From<Token> for QueryTerm {
    fn from(t: Token) -> Self {
        QueryTerm {
            term: t.term,
            surface: Some(t.surface),
        }
    }
}

impl From<&str> for QueryTerm {
    fn from(term: &str) -> Self {
        QueryTerm {
            term: term.to_string(),
            surface: None,
        }
    }
}

/// Expand `terms` with embedding neighbours.
///
/// Neighbours are looked up by surface form first, then by normalized term.
/// Each neighbour is normalized with the index's analyzer; tokens equal to an
/// original term are dropped, and a token reached several times keeps its
/// largest weight. Neighbours with non-positive similarity are ignored.
pub fn expand_query(
    terms: &[QueryTerm],
    table: &EmbeddingTable,
    index: &InvertedIndex,
    params: &ExpansionParams,
) -> Result<WeightedQuery> {
    if params.model == ExpansionModel::Penalized && !(params.loss > 0.0 && params.loss <= 1.0) {
        return Err(Error::param(format!("loss factor {} outside (0, 1]", params.loss)));
    }

    let mut originals: Vec<&QueryTerm> = Vec::new();
    let mut seen = HashSet::new();
    for t in terms {
        if seen.insert(t.term.as_str()) {
            originals.push(t);
        }
    }
    let names: Vec<&str> = originals.iter().map(|t| t.term.as_str()).collect();
    let classification = classify_terms(&names, index);

    let factor = |class: RelevanceClass| match (params.model, class) {
        (ExpansionModel::Penalized, RelevanceClass::Relevant) => params.loss,
        _ => 1.0,
    };

    let mut entries: Vec<QueryEntry> = originals
        .iter()
        .map(|t| {
            let class = classification.class_of(&t.term).unwrap_or(RelevanceClass::KeyRelevant);
            QueryEntry {
                term: t.term.clone(),
                weight: factor(class),
                class,
                origin: Origin::Original,
            }
        })
        .collect();

    let original_set: HashSet<&str> = names.iter().copied().collect();
    let mut expansions: Vec<QueryEntry> = Vec::new();
    let mut position: HashMap<String, usize> = HashMap::new();
    for original in &originals {
        let key = original
            .surface
            .as_deref()
            .filter(|s| table.contains(s))
            .unwrap_or(&original.term);
        let class = classification.class_of(&original.term).unwrap_or(RelevanceClass::KeyRelevant);
        for (neighbour, similarity) in knn(table, key, params.k) {
            if similarity <= 0.0 {
                continue;
            }
            let weight = similarity * factor(class);
            for token in index.analyzer().normalize(&neighbour) {
                if original_set.contains(token.as_str()) {
                    continue;
                }
                let entry = QueryEntry {
                    term: token.clone(),
                    weight,
                    class,
                    origin: Origin::ExpansionOf(original.term.clone()),
                };
                match position.get(&token) {
                    Some(&i) if expansions[i].weight >= weight => {}
                    Some(&i) => expansions[i] = entry,
                    None => {
                        position.insert(token, expansions.len());
                        expansions.push(entry);
                    }
                }
            }
        }
    }
    entries.extend(expansions);
    Ok(WeightedQuery {
        original_len: originals.len(),
        entries,
    })
}
