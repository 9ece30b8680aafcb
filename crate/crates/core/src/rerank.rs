//! Category re-ranking and run fusion.
//!
//! Queries and datasets are assigned categories from a [`CategoryLexicon`].
//! [`boost`] raises the scores of top-ranked datasets sharing a category with
//! the query; [`fuse`] combines two runs linearly.

use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::InvertedIndex;
use crate::ingest::{CategoryLexicon, DocumentRecord, RankedList, ScoredDoc, CLINICAL_TRIAL};
use crate::textprep::replace_greek;

/// Largest token distance of a skip-bigram (3-skip-2-grams pair tokens up to four apart).
pub const MAX_GRAM_DISTANCE: usize = 4;

/// Query tokens that mark a clinical-trial topic, in addition to the
/// lexicon's own clinical-trial phrases.
pub const CLINICAL_QUERY_KEYWORDS: [&str; 8] = [
    "inclusion",
    "exclusion",
    "criteria",
    "patients",
    "subjects",
    "stage",
    "duration",
    "study",
];

/// Dataset tokens that mark a clinical-trial dataset.
pub const CLINICAL_DOC_KEYWORDS: [&str; 3] = ["clinical", "trial", "clinicaltrial"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignmentMethod {
    SkipgramMatch,
    KeywordMatch,
    External,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryAssignment {
    /// Topic or document id; empty for ad-hoc text.
    pub subject: String,
    pub categories: BTreeSet<String>,
    pub method: AssignmentMethod,
}

/// Lowercased `[a-z0-9]` runs of `text`, Greek letters spelled out.
pub fn gram_tokens(text: &str) -> Vec<String> {
    replace_greek(text)
        .to_lowercase()
        .split(|c: char| !(c.is_ascii_lowercase() || c.is_ascii_digit()))
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect()
}

/// Visit every 1-gram and every ordered pair of tokens at distance ≤ [`MAX_GRAM_DISTANCE`].
fn for_each_gram(tokens: &[String], mut visit: impl FnMut(&str)) {
    let mut pair = String::new();
    for (i, first) in tokens.iter().enumerate() {
        visit(first);
        for second in tokens.iter().skip(i + 1).take(MAX_GRAM_DISTANCE) {
            pair.clear();
            pair.push_str(first);
            pair.push(' ');
            pair.push_str(second);
            visit(&pair);
        }
    }
}

fn gram_categories(tokens: &[String], lexicon: &CategoryLexicon, skip: Option<&str>) -> BTreeSet<String> {
    let mut found = BTreeSet::new();
    for_each_gram(tokens, |gram| {
        for category in lexicon.categories_for(gram) {
            if Some(category.as_str()) != skip {
                found.insert(category.clone());
            }
        }
    });
    found
}

/// Categories of a raw topic text.
pub fn classify_query(text: &str, lexicon: &CategoryLexicon) -> CategoryAssignment {
    let tokens = gram_tokens(text);
    let mut categories = gram_categories(&tokens, lexicon, None);
    let mut method = AssignmentMethod::SkipgramMatch;
    if lexicon.contains(CLINICAL_TRIAL) && tokens.iter().any(|t| CLINICAL_QUERY_KEYWORDS.contains(&t.as_str())) {
        categories.insert(CLINICAL_TRIAL.to_string());
        method = AssignmentMethod::KeywordMatch;
    }
    CategoryAssignment {
        subject: String::new(),
        categories,
        method,
    }
}

/// Categories of a dataset from its indexed text. Clinical trials are
/// recognized only through [`CLINICAL_DOC_KEYWORDS`].
pub fn classify_document(record: &DocumentRecord, lexicon: &CategoryLexicon) -> CategoryAssignment {
    let tokens = gram_tokens(&record.indexed_text());
    let mut categories = gram_categories(&tokens, lexicon, Some(CLINICAL_TRIAL));
    let mut method = AssignmentMethod::SkipgramMatch;
    if lexicon.contains(CLINICAL_TRIAL) && tokens.iter().any(|t| CLINICAL_DOC_KEYWORDS.contains(&t.as_str())) {
        categories.insert(CLINICAL_TRIAL.to_string());
        method = AssignmentMethod::KeywordMatch;
    }
    CategoryAssignment {
        subject: record.doc_id.clone(),
        categories,
        method,
    }
}

/// Assigns categories to datasets. Implementations are called concurrently.
pub trait DocumentClassifier: Send + Sync {
    fn classify(&self, record: &DocumentRecord) -> Result<CategoryAssignment>;
}

/// The built-in lexicon matcher.
#[derive(Debug, Clone)]
pub struct LexiconClassifier<'a> {
    pub lexicon: &'a CategoryLexicon,
}

impl DocumentClassifier for LexiconClassifier<'_> {
    fn classify(&self, record: &DocumentRecord) -> Result<CategoryAssignment> {
        Ok(classify_document(record, self.lexicon))
    }
}

/// Categories computed ahead of time, keyed by document id. Unknown
/// documents have no categories.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CategoryTable {
    by_doc: HashMap<String, BTreeSet<String>>,
}

impl CategoryTable {
    /// Classify every record of `index` in parallel.
    pub fn build(index: &InvertedIndex, classifier: &dyn DocumentClassifier) -> Result<Self> {
        let by_doc = index
            .records()
            .par_iter()
            .map(|r| classifier.classify(r).map(|a| (r.doc_id.clone(), a.categories)))
            .collect::<Result<HashMap<_, _>>>()?;
        Ok(CategoryTable { by_doc })
    }

    pub fn get(&self, doc_id: &str) -> Option<&BTreeSet<String>> {
        self.by_doc.get(doc_id)
    }

    pub fn insert(&mut self, doc_id: impl Into<String>, categories: BTreeSet<String>) {
        self.by_doc.insert(doc_id.into(), categories);
    }

    pub fn len(&self) -> usize {
        self.by_doc.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_doc.is_empty()
    }
}

impl DocumentClassifier for CategoryTable {
    fn classify(&self, record: &DocumentRecord) -> Result<CategoryAssignment> {
        Ok(CategoryAssignment {
            subject: record.doc_id.clone(),
            categories: self.by_doc.get(&record.doc_id).cloned().unwrap_or_default(),
            method: AssignmentMethod::External,
        })
    }
}

#[derive(Serialize)]
struct ClassifierRequest<'a> {
    doc_id: &'a str,
    text: &'a str,
}

#[derive(Deserialize)]
struct ClassifierResponse {
    doc_id: String,
    categories: Vec<String>,
}

struct Channel {
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

/// An external classifier process speaking line-delimited JSON.
///
/// For every dataset one request line is written to the child's stdin:
///
/// ```text
/// {"doc_id": "215676", "text": "VGlut-F-800286 neuromorpho dataset ..."}
/// ```
///
/// and exactly one response line is expected on its stdout:
///
/// ```text
/// {"doc_id": "215676", "categories": ["Structure"]}
/// ```
///
/// Categories must belong to the lexicon. Requests are serialized, so the
/// child never sees interleaved traffic.
pub struct SubprocessClassifier {
    child: Child,
    channel: Mutex<Option<Channel>>,
    known: BTreeSet<String>,
}

impl SubprocessClassifier {
    pub fn spawn(program: &str, args: &[String], lexicon: &CategoryLexicon) -> Result<Self> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| Error::Classifier(format!("cannot start `{program}`: {e}")))?;
        let stdin = child.stdin.take().expect("stdin is piped");
        let stdout = BufReader::new(child.stdout.take().expect("stdout is piped"));
        Ok(SubprocessClassifier {
            child,
            channel: Mutex::new(Some(Channel { stdin, stdout })),
            known: lexicon.category_names().map(str::to_string).collect(),
        })
    }
}

impl DocumentClassifier for SubprocessClassifier {
    fn classify(&self, record: &DocumentRecord) -> Result<CategoryAssignment> {
        let text = record.indexed_text();
        let mut request = serde_json::to_string(&ClassifierRequest {
            doc_id: &record.doc_id,
            text: &text,
        })?;
        request.push('\n');

        let mut line = String::new();
        {
            let mut guard = self.channel.lock().map_err(|_| Error::Classifier("channel poisoned".into()))?;
            let channel = guard.as_mut().ok_or_else(|| Error::Classifier("process already closed".into()))?;
            channel
                .stdin
                .write_all(request.as_bytes())
                .and_then(|_| channel.stdin.flush())
                .map_err(|e| Error::Classifier(format!("write failed: {e}")))?;
            let read = channel
                .stdout
                .read_line(&mut line)
                .map_err(|e| Error::Classifier(format!("read failed: {e}")))?;
            if read == 0 {
                return Err(Error::Classifier("process closed its output".into()));
            }
        }

        let response: ClassifierResponse =
            serde_json::from_str(&line).map_err(|e| Error::Classifier(format!("bad response: {e}")))?;
        if response.doc_id != record.doc_id {
            return Err(Error::Classifier(format!(
                "response for `{}` while classifying `{}`",
                response.doc_id, record.doc_id
            )));
        }
        let mut categories = BTreeSet::new();
        for category in response.categories {
            if !self.known.contains(&category) {
                return Err(Error::Classifier(format!("unknown category `{category}`")));
            }
            categories.insert(category);
        }
        Ok(CategoryAssignment {
            subject: record.doc_id.clone(),
            categories,
            method: AssignmentMethod::External,
        })
    }
}

impl Drop for SubprocessClassifier {
    fn drop(&mut self) {
        // Closing stdin lets a well-behaved child exit on its own.
        if let Ok(channel) = self.channel.get_mut() {
            channel.take();
        }
        if let Ok(None) = self.child.try_wait() {
            std::thread::sleep(std::time::Duration::from_millis(20));
        }
        if let Ok(None) = self.child.try_wait() {
            let _ = self.child.kill();
        }
        let _ = self.child.wait();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostParams {
    /// Multiplicative gain `g ≥ 0`.
    pub gain: f64,
    /// Share of the ranking eligible for boosting, in (0, 1].
    pub fraction: f64,
}

impl Default for BoostParams {
    fn default() -> Self {
        BoostParams {
            gain: 0.10,
            fraction: 0.5,
        }
    }
}

impl BoostParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gain >= 0.0 && self.gain.is_finite()) {
            return Err(Error::param(format!("gain must be a finite value ≥ 0, got {}", self.gain)));
        }
        if !(self.fraction > 0.0 && self.fraction <= 1.0) {
            return Err(Error::param(format!("fraction must lie in (0, 1], got {}", self.fraction)));
        }
        Ok(())
    }
}

/// Multiply by `1 + g` the scores of the top `⌈fraction·n⌉` datasets whose
/// categories intersect `query_categories`, then re-sort.
pub fn boost(
    list: &RankedList,
    query_categories: &BTreeSet<String>,
    index: &InvertedIndex,
    classifier: &dyn DocumentClassifier,
    params: BoostParams,
) -> Result<RankedList> {
    params.validate()?;
    if params.gain == 0.0 || query_categories.is_empty() || list.is_empty() {
        return Ok(list.clone());
    }
    let cutoff = ((params.fraction * list.len() as f64).ceil() as usize).min(list.len());
    let head = &list.entries()[..cutoff];
    let matched: Vec<bool> = head
        .par_iter()
        .map(|e| {
            let record = index
                .record_by_id(&e.doc_id)
                .ok_or_else(|| Error::UnknownDocument(e.doc_id.clone()))?;
            let assignment = classifier.classify(record)?;
            Ok(!assignment.categories.is_disjoint(query_categories))
        })
        .collect::<Result<_>>()?;

    let scores = list
        .entries()
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let score = if matched.get(i).copied().unwrap_or(false) {
                e.score * (1.0 + params.gain)
            } else {
                e.score
            };
            (e.doc_id.clone(), score)
        })
        .collect();
    Ok(RankedList::from_scores(list.topic_id.clone(), list.tag.clone(), scores))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    #[default]
    MinMax,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionConfig {
    /// Weight of the first run, in [0, 1].
    pub alpha: f64,
    #[serde(default)]
    pub normalization: Normalization,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig {
            alpha: 0.5,
            normalization: Normalization::MinMax,
        }
    }
}

fn normalized_scores(list: &RankedList, normalization: Normalization) -> HashMap<&str, f64> {
    let entries = list.entries();
    match normalization {
        Normalization::None => entries.iter().map(|e| (e.doc_id.as_str(), e.score)).collect(),
        Normalization::MinMax => {
            let min = entries.iter().map(|e| e.score).fold(f64::INFINITY, f64::min);
            let max = entries.iter().map(|e| e.score).fold(f64::NEG_INFINITY, f64::max);
            entries
                .iter()
                .map(|e| {
                    let v = if max > min { (e.score - min) / (max - min) } else { 1.0 };
                    (e.doc_id.as_str(), v)
                })
                .collect()
        }
    }
}

/// `α·a + (1 − α)·b` over the union of both runs; a dataset missing from one
/// run counts 0 there.
pub fn fuse(a: &RankedList, b: &RankedList, cfg: FusionConfig) -> Result<RankedList> {
    if !(0.0..=1.0).contains(&cfg.alpha) {
        return Err(Error::param(format!("alpha must lie in [0, 1], got {}", cfg.alpha)));
    }
    if a.topic_id != b.topic_id {
        return Err(Error::param(format!(
            "cannot fuse topic `{}` with topic `{}`",
            a.topic_id, b.topic_id
        )));
    }
    let left = normalized_scores(a, cfg.normalization);
    let right = normalized_scores(b, cfg.normalization);
    let mut docs: Vec<&str> = a.doc_ids().chain(b.doc_ids()).collect();
    docs.sort_unstable();
    docs.dedup();
    let scores = docs
        .into_iter()
        .map(|d| {
            let x = left.get(d).copied().unwrap_or(0.0);
            let y = right.get(d).copied().unwrap_or(0.0);
            (d.to_string(), cfg.alpha * x + (1.0 - cfg.alpha) * y)
        })
        .collect();
    Ok(RankedList::from_scores(a.topic_id.clone(), a.tag.clone(), scores))
}

/// Fuse runs topic by topic. Topics present in only one run are fused with an
/// empty list.
pub fn fuse_runs(a: &[RankedList], b: &[RankedList], cfg: FusionConfig, tag: &str) -> Result<Vec<RankedList>> {
    let mut topics: Vec<&str> = a.iter().chain(b).map(|l| l.topic_id.as_str()).collect();
    let mut seen = BTreeSet::new();
    topics.retain(|t| seen.insert(*t));
    topics
        .into_iter()
        .map(|topic| {
            let empty = RankedList::from_ordered(topic, tag, Vec::<ScoredDoc>::new());
            let left = a.iter().find(|l| l.topic_id == topic).unwrap_or(&empty);
            let right = b.iter().find(|l| l.topic_id == topic).unwrap_or(&empty);
            Ok(fuse(left, right, cfg)?.with_tag(tag))
        })
        .collect()
}
