use std::collections::BTreeMap;
use std::fmt;
use std::io::BufRead;

use crate::error::{Error, Result};

/// Graded relevance on the four-level gold-standard scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Grade {
    /// Pooled but not judged.
    Unjudged,
    NonRelevant,
    PartiallyRelevant,
    Relevant,
}

impl Grade {
    pub fn value(self) -> i8 {
        match self {
            Grade::Unjudged => -1,
            Grade::NonRelevant => 0,
            Grade::PartiallyRelevant => 1,
            Grade::Relevant => 2,
        }
    }

    pub fn from_value(v: i64) -> Option<Self> {
        match v {
            -1 => Some(Grade::Unjudged),
            0 => Some(Grade::NonRelevant),
            1 => Some(Grade::PartiallyRelevant),
            2 => Some(Grade::Relevant),
            _ => None,
        }
    }

    pub fn is_judged(self) -> bool {
        self != Grade::Unjudged
    }
}

impl fmt::Display for Grade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Judgment {
    pub grade: Grade,
    /// Probability that the document was sampled for judging, in (0, 1].
    pub probability: f64,
}

impl Judgment {
    pub fn new(grade: Grade) -> Self {
        Judgment {
            grade,
            probability: 1.0,
        }
    }

    pub fn sampled(grade: Grade, probability: f64) -> Self {
        Judgment { grade, probability }
    }
}

/// Per-topic graded judgments.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct JudgmentSet {
    topics: BTreeMap<String, BTreeMap<String, Judgment>>,
}

impl JudgmentSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Insert a judgment, returning the one it replaced.
    pub fn insert(&mut self, topic: impl Into<String>, doc: impl Into<String>, judgment: Judgment) -> Option<Judgment> {
        self.topics.entry(topic.into()).or_default().insert(doc.into(), judgment)
    }

    pub fn get(&self, topic: &str, doc: &str) -> Option<&Judgment> {
        self.topics.get(topic)?.get(doc)
    }

    pub fn topic(&self, topic: &str) -> Option<&BTreeMap<String, Judgment>> {
        self.topics.get(topic)
    }

    pub fn topic_ids(&self) -> impl Iterator<Item = &str> {
        self.topics.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.topics.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Parse TREC qrels: `topic iter doc grade [probability]`.
pub fn parse_qrels<R: BufRead>(reader: R) -> Result<JudgmentSet> {
    let mut set = JudgmentSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if !(4..=5).contains(&fields.len()) {
            return Err(Error::parse(lineno, format!("expected 4 or 5 fields, found {}", fields.len())));
        }
        let grade = fields[3]
            .parse::<i64>()
            .ok()
            .and_then(Grade::from_value)
            .ok_or_else(|| Error::parse(lineno, format!("invalid grade `{}` (expected -1, 0, 1 or 2)", fields[3])))?;
        let probability = match fields.get(4) {
            None => 1.0,
            Some(p) => {
                let p: f64 = p
                    .parse()
                    .map_err(|_| Error::parse(lineno, format!("invalid inclusion probability `{p}`")))?;
                if !(p > 0.0 && p <= 1.0) {
                    return Err(Error::parse(lineno, format!("inclusion probability {p} outside (0, 1]")));
                }
                p
            }
        };
        if set.insert(fields[0], fields[2], Judgment::sampled(grade, probability)).is_some() {
            log::warn!("qrels line {lineno}: duplicate judgment for ({}, {}); keeping the last", fields[0], fields[2]);
        }
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grades_and_probability() {
        let set = parse_qrels("T1 0 719124 2\nT1 0 d9 -1\nT2 0 d3 0 0.5\n".as_bytes()).unwrap();
        assert_eq!(set.get("T1", "719124").unwrap().grade, Grade::Relevant);
        assert_eq!(set.get("T1", "719124").unwrap().probability, 1.0);
        assert_eq!(set.get("T1", "d9").unwrap().grade, Grade::Unjudged);
        assert_eq!(set.get("T2", "d3").unwrap().probability, 0.5);
        assert_eq!(set.len(), 3);
    }

    #[test]
    fn invalid_grade_names_line() {
        let err = parse_qrels("T1 0 d1 1\nT1 0 d9 5\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn invalid_probability() {
        assert!(parse_qrels("T1 0 d1 1 0\n".as_bytes()).is_err());
        assert!(parse_qrels("T1 0 d1 1 1.5\n".as_bytes()).is_err());
    }

    #[test]
    fn duplicate_last_wins() {
        let set = parse_qrels("T1 0 d1 1\nT1 0 d1 2\n".as_bytes()).unwrap();
        assert_eq!(set.get("T1", "d1").unwrap().grade, Grade::Relevant);
        assert_eq!(set.len(), 1);
    }
}
