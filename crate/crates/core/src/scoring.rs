//! Document scoring: the binned term-relevance model (RTRL) and tf·idf / BM25
//! baselines.
//!
//! RTRL gives every matched query term a weight `w_d + w_q`. The document part
//! `w_d` is 1 for a single occurrence and 2 for repeated occurrences; the query
//! part `w_q` is 1 for relevant terms and `c·(2L − 2)` for key-relevant terms,
//! where `L` is the number of original query terms. The sum places a document
//! in a score bin; documents inside a bin are ordered by a tf·idf tie-break
//! rescaled into `(0, 1]`.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use crate::ingest::{RankedList, ScoredDoc};

use crate::error::{Error, Result};
use crate::expansion::{RelevanceClass, WeightedQuery};
use crate::index::{DocIdx, InvertedIndex};

/// Lower bound of a normalized tie-break value.
pub const TIEBREAK_EPSILON: f64 = 1e-6;

/// Bins are rounded to this many steps per unit so that sums of fractional
/// weights taken in different orders land in the same bin.
pub const BIN_RESOLUTION: f64 = 1e9;

fn snap_bin(bin: f64) -> f64 {
    (bin * BIN_RESOLUTION).round() / BIN_RESOLUTION
}

/// RTRL weight constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RtrlConfig {
    /// Gain `c ≥ 1` of key-relevant terms.
    pub boost: f64,
    /// `w_d'`, single occurrence.
    pub low_doc_weight: f64,
    /// `w_d''`, repeated occurrences.
    pub high_doc_weight: f64,
    /// `w_q'`, relevant term.
    pub low_query_weight: f64,
    /// Replaces `c·(2L − 2)` when set.
    pub key_query_weight: Option<f64>,
}

impl Default for RtrlConfig {
    fn default() -> Self {
        RtrlConfig {
            boost: 1.0,
            low_doc_weight: 1.0,
            high_doc_weight: 2.0,
            low_query_weight: 1.0,
            key_query_weight: None,
        }
    }
}

impl RtrlConfig {
    pub fn with_boost(boost: f64) -> Result<Self> {
        if !(boost >= 1.0 && boost.is_finite()) {
            return Err(Error::param(format!("key-relevant boost c must be ≥ 1, got {boost}")));
        }
        Ok(RtrlConfig {
            boost,
            ..Default::default()
        })
    }

    /// `w_q''` for a query of `query_len` original terms.
    pub fn key_weight(&self, query_len: usize) -> f64 {
        self.key_query_weight
            .unwrap_or_else(|| self.boost * (2.0 * query_len as f64 - 2.0))
    }
}

/// Check the worst-case ordering constraint
/// `k·(w_d' + w_q'') ≥ (k−1)·(w_d'' + w_q'') + (L−k)·(w_d'' + w_q')`.
pub fn validate_weight_config(query_len: usize, key_terms: usize, cfg: &RtrlConfig) -> bool {
    let (lhs, rhs) = weight_constraint_sides(query_len, key_terms, cfg);
    lhs >= rhs
}

/// Both sides of the constraint checked by [`validate_weight_config`].
pub fn weight_constraint_sides(query_len: usize, key_terms: usize, cfg: &RtrlConfig) -> (f64, f64) {
    let l = query_len as f64;
    let k = key_terms as f64;
    let wq_key = cfg.key_weight(query_len);
    let lhs = k * (cfg.low_doc_weight + wq_key);
    let rhs = (k - 1.0) * (cfg.high_doc_weight + wq_key) + (l - k) * (cfg.high_doc_weight + cfg.low_query_weight);
    (lhs, rhs)
}

/// `w_d`: document relevance of a term occurring `f_td` times.
pub fn term_weight_d(f_td: u32, cfg: &RtrlConfig) -> Result<f64> {
    match f_td {
        0 => Err(Error::param("term frequency must be at least 1")),
        1 => Ok(cfg.low_doc_weight),
        _ => Ok(cfg.high_doc_weight),
    }
}

/// `w_q`: query relevance of a term of the given class.
pub fn term_weight_q(class: RelevanceClass, query_len: usize, cfg: &RtrlConfig) -> f64 {
    match class {
        RelevanceClass::Relevant => cfg.low_query_weight,
        RelevanceClass::KeyRelevant => cfg.key_weight(query_len),
    }
}

/// Augmented term frequency `0.5 + 0.5·f_td / max_tf`.
pub fn tf_component(f_td: u32, max_tf: u32) -> f64 {
    0.5 + 0.5 * f64::from(f_td) / f64::from(max_tf)
}

/// `ln(|D| / df)`; 0 for terms that occur nowhere.
pub fn idf(doc_freq: usize, collection_size: usize) -> f64 {
    if doc_freq == 0 {
        0.0
    } else {
        (collection_size as f64 / doc_freq as f64).ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinScore {
    pub bin: f64,
    pub raw_tiebreak: f64,
}

/// Bin and raw tf·idf tie-break of one document. Entries absent from the
/// document contribute nothing.
pub fn rtrl_bin_score(doc: DocIdx, query: &WeightedQuery, index: &InvertedIndex, cfg: &RtrlConfig) -> BinScore {
    let query_len = query.original_len();
    let n = index.collection_size();
    let max_tf = index.max_tf_of(doc);
    let mut score = BinScore {
        bin: 0.0,
        raw_tiebreak: 0.0,
    };
    for entry in query.entries() {
        let postings = index.postings(&entry.term);
        let Ok(pos) = postings.binary_search_by_key(&doc, |p| p.doc) else {
            continue;
        };
        let tf = postings[pos].tf;
        let wd = if tf == 1 { cfg.low_doc_weight } else { cfg.high_doc_weight };
        let wq = term_weight_q(entry.class, query_len, cfg);
        score.bin += entry.weight * (wd + wq);
        score.raw_tiebreak += entry.weight * tf_component(tf, max_tf) * idf(postings.len(), n);
    }
    score.bin = snap_bin(score.bin);
    score
}

/// Map a bin's raw tie-breaks into `(0, 1]` by min-max scaling:
/// `(raw − min) / (max − min) · (1 − ε) + ε`. Singletons and constant bins get ε.
pub fn normalize_tiebreaks(raw: &[f64]) -> Vec<f64> {
    let min = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    raw.iter()
        .map(|&r| {
            if max > min {
                (r - min) / (max - min) * (1.0 - TIEBREAK_EPSILON) + TIEBREAK_EPSILON
            } else {
                TIEBREAK_EPSILON
            }
        })
        .collect()
}

fn check_top_n(top_n: usize) -> Result<()> {
    if top_n == 0 {
        Err(Error::param("top_n must be positive"))
    } else {
        Ok(())
    }
}

/// Rank every candidate document with RTRL.
///
/// The final score is `bin + s·t`, where `t` is the normalized tie-break and
/// `s = min(1, smallest gap between adjacent bins)`. With unit-weight queries
/// and integral `c` bins are integers, so `s = 1`. The scale keeps documents
/// of a higher bin strictly ahead when weighted entries produce fractional bins.
pub fn rtrl_rank(
    topic_id: &str,
    tag: &str,
    query: &WeightedQuery,
    index: &InvertedIndex,
    cfg: &RtrlConfig,
    top_n: usize,
) -> Result<RankedList> {
    check_top_n(top_n)?;
    let query_len = query.original_len();
    let n = index.collection_size();

    let mut bins = vec![0.0f64; n];
    let mut raw = vec![0.0f64; n];
    let mut hit = vec![false; n];
    let mut touched: Vec<DocIdx> = Vec::new();
    for entry in query.entries() {
        let postings = index.postings(&entry.term);
        let term_idf = idf(postings.len(), n);
        let wq = term_weight_q(entry.class, query_len, cfg);
        for p in postings {
            let d = p.doc as usize;
            if !hit[d] {
                hit[d] = true;
                touched.push(p.doc);
            }
            let wd = if p.tf == 1 { cfg.low_doc_weight } else { cfg.high_doc_weight };
            bins[d] += entry.weight * (wd + wq);
            raw[d] += entry.weight * tf_component(p.tf, index.max_tf_of(p.doc)) * term_idf;
        }
    }
    let mut by_bin: Vec<(f64, DocIdx)> = touched.iter().map(|&d| (snap_bin(bins[d as usize]), d)).collect();
    by_bin.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let scale = by_bin
        .windows(2)
        .map(|w| w[0].0 - w[1].0)
        .filter(|gap| *gap > 0.0)
        .fold(1.0f64, f64::min);

    let mut scores = Vec::with_capacity(by_bin.len());
    for group in by_bin.chunk_by(|a, b| a.0 == b.0) {
        let group_raw: Vec<f64> = group.iter().map(|(_, d)| raw[*d as usize]).collect();
        for ((bin, d), t) in group.iter().zip(normalize_tiebreaks(&group_raw)) {
            scores.push((index.doc_id(*d).to_string(), bin + scale * t));
        }
    }
    let mut list = RankedList::from_scores(topic_id, tag, scores);
    list.truncate(top_n);
    Ok(list)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScorerKind {
    Rtrl,
    Tfidf,
    Bm25,
}

impl FromStr for ScorerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rtrl" => Ok(ScorerKind::Rtrl),
            "tfidf" => Ok(ScorerKind::Tfidf),
            "bm25" => Ok(ScorerKind::Bm25),
            other => Err(Error::param(format!("unknown scorer `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.2, b: 0.75 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaselineVariant {
    /// `Σ weight · tf · idf` with the augmented tf and `ln(|D|/df)`.
    Tfidf,
    /// Okapi BM25 with the non-negative `ln(1 + (N − df + 0.5)/(df + 0.5))` idf.
    Bm25(Bm25Params),
}

/// Rank every candidate with a bag-of-words baseline.
pub fn baseline_rank(
    topic_id: &str,
    tag: &str,
    query: &WeightedQuery,
    index: &InvertedIndex,
    variant: BaselineVariant,
    top_n: usize,
) -> Result<RankedList> {
    check_top_n(top_n)?;
    let n = index.collection_size();
    let avg_len = index.avg_doc_len();
    let mut scores = vec![0.0f64; n];
    let mut hit = vec![false; n];
    for entry in query.entries() {
        let postings = index.postings(&entry.term);
        let df = postings.len();
        for p in postings {
            let d = p.doc as usize;
            hit[d] = true;
            scores[d] += entry.weight
                * match variant {
                    BaselineVariant::Tfidf => tf_component(p.tf, index.max_tf_of(p.doc)) * idf(df, n),
                    BaselineVariant::Bm25(Bm25Params { k1, b }) => {
                        let idf = (1.0 + (n as f64 - df as f64 + 0.5) / (df as f64 + 0.5)).ln();
                        let tf = f64::from(p.tf);
                        let norm = if avg_len > 0.0 {
                            1.0 - b + b * f64::from(index.doc_len(p.doc)) / avg_len
                        } else {
                            1.0
                        };
                        idf * tf * (k1 + 1.0) / (tf + k1 * norm)
                    }
                };
        }
    }
    let scored = (0..n)
        .filter(|&d| hit[d])
        .map(|d| (index.doc_id(d as DocIdx).to_string(), scores[d]))
        .collect();
    let mut list = RankedList::from_scores(topic_id, tag, scored);
    list.truncate(top_n);
    Ok(list)
}
