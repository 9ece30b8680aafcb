use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDoc {
    pub doc_id: String,
    pub score: f64,
}

/// Ranked retrieval output for one topic.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub topic_id: String,
    pub tag: String,
    entries: Vec<ScoredDoc>,
}

impl RankedList {
    /// Sort `(doc, score)` pairs by descending score, ties by ascending doc id.
    pub fn from_scores(topic_id: impl Into<String>, tag: impl Into<String>, scores: Vec<(String, f64)>) -> Self {
        let mut entries: Vec<ScoredDoc> = scores
            .into_iter()
            .map(|(doc_id, score)| ScoredDoc { doc_id, score })
            .collect();
        sort_canonical(&mut entries);
        RankedList {
            topic_id: topic_id.into(),
            tag: tag.into(),
            entries,
        }
    }

    /// Keep the given order as the ranking.
    pub fn from_ordered(topic_id: impl Into<String>, tag: impl Into<String>, entries: Vec<ScoredDoc>) -> Self {
        RankedList {
            topic_id: topic_id.into(),
            tag: tag.into(),
            entries,
        }
    }

    pub fn entries(&self) -> &[ScoredDoc] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<ScoredDoc> {
        self.entries
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.doc_id.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn truncate(&mut self, n: usize) {
        self.entries.truncate(n);
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tag = tag.into();
        self
    }
}

pub(crate) fn sort_canonical(entries: &mut [ScoredDoc]) {
    entries.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.doc_id.cmp(&b.doc_id)));
}

/// Write lists as TREC run lines `topic Q0 doc rank score tag`.
pub fn write_run<W: Write>(mut out: W, lists: &[RankedList]) -> Result<()> {
    for list in lists {
        for (i, entry) in list.entries.iter().enumerate() {
            if !entry.score.is_finite() {
                return Err(Error::param(format!(
                    "non-finite score for ({}, {})",
                    list.topic_id, entry.doc_id
                )));
            }
            writeln!(out, "{} Q0 {} {} {:.6} {}", list.topic_id, entry.doc_id, i + 1, entry.score, list.tag)?;
        }
    }
    Ok(())
}

/// Parse a TREC run. Topics keep their first-appearance order; `#` lines are
/// comments. A topic whose ranks are not exactly `1..=n` is re-ranked by score.
pub fn parse_run<R: BufRead>(reader: R) -> Result<Vec<RankedList>> {
    struct Pending {
        tag: String,
        rows: Vec<(u64, ScoredDoc)>,
        seen: HashSet<String>,
    }
    let mut order: Vec<String> = Vec::new();
    let mut topics: HashMap<String, Pending> = HashMap::new();

    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(Error::parse(lineno, format!("expected 6 fields, found {}", fields.len())));
        }
        let rank: u64 = fields[3]
            .parse()
            .map_err(|_| Error::parse(lineno, format!("invalid rank `{}`", fields[3])))?;
        let score: f64 = fields[4]
            .parse()
            .map_err(|_| Error::parse(lineno, format!("invalid score `{}`", fields[4])))?;
        if !score.is_finite() {
            return Err(Error::parse(lineno, "non-finite score"));
        }
        let topic = fields[0];
        let pending = topics.entry(topic.to_string()).or_insert_with(|| {
            order.push(topic.to_string());
            Pending {
                tag: fields[5].to_string(),
                rows: Vec::new(),
                seen: HashSet::new(),
            }
        });
        if !pending.seen.insert(fields[2].to_string()) {
            return Err(Error::parse(lineno, format!("document `{}` ranked twice for topic {topic}", fields[2])));
        }
        pending.rows.push((
            rank,
            ScoredDoc {
                doc_id: fields[2].to_string(),
                score,
            },
        ));
    }

    let mut lists = Vec::with_capacity(order.len());
    for topic in order {
        let Pending { tag, mut rows, .. } = topics.remove(&topic).expect("topic recorded in order");
        rows.sort_by_key(|(rank, _)| *rank);
        let contiguous = rows.iter().enumerate().all(|(i, (rank, _))| *rank == i as u64 + 1);
        let mut entries: Vec<ScoredDoc> = rows.into_iter().map(|(_, e)| e).collect();
        if !contiguous {
            log::warn!("run topic {topic}: ranks are not 1..n; re-ranking by score");
            sort_canonical(&mut entries);
        }
        lists.push(RankedList::from_ordered(topic, tag, entries));
    }
    Ok(lists)
}
